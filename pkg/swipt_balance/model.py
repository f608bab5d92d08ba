"""
System model: configuration of the (M x N, d)^K interference channel with
power-splitting receivers, channel realizations and the per-transmitter
energy Gram matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from swipt_balance.errors import DimensionError, InfeasibleSystem, SplitAllEnergy
from swipt_balance.numerics import SeedLike, complex_normal, make_rng

logger = logging.getLogger(__name__)


class SystemConfig(BaseModel):
    """Static description of a K-user MIMO interference channel with SWIPT receivers."""

    model_config = ConfigDict(frozen=True)

    M: int = Field(..., ge=1, description="Transmit antennas per transmitter")
    N: int = Field(..., ge=1, description="Receive antennas per receiver")
    d: int = Field(..., ge=1, description="Data streams per user")
    K: int = Field(..., ge=1, description="Number of transmitter/receiver pairs")
    P: Tuple[float, ...] = Field(
        (1.0,), description="Per-user transmit power in watts (scalar broadcasts to all users)"
    )
    sigma2: float = Field(1.0, gt=0.0, description="Receiver AWGN variance in watts")
    delta2: float = Field(0.1, ge=0.0, description="Power-splitter circuit noise variance in watts")
    rho: Tuple[float, ...] = Field(
        (0.5,), description="Per-receiver power splitting ratio routed to information decoding"
    )
    zeta: float = Field(0.5, gt=0.0, lt=1.0, description="Energy conversion efficiency")
    feasibility: Literal["strict", "proper"] = Field(
        "proper", description="Feasibility gate: strict M+N-(K+2)d >= 0, proper M+N-(K+1)d >= 0"
    )

    @model_validator(mode="before")
    @classmethod
    def _broadcast_per_user(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        K = data.get("K")
        for key in ("P", "rho"):
            value = data.get(key)
            if value is None:
                continue
            if np.isscalar(value):
                data[key] = (float(value),) * (int(K) if K is not None else 1)
            else:
                data[key] = tuple(float(v) for v in value)
        if K is not None:
            for key, default in (("P", 1.0), ("rho", 0.5)):
                if key not in data:
                    data[key] = (default,) * int(K)
        return data

    @field_validator("P")
    @classmethod
    def _positive_power(cls, value):
        if any(not np.isfinite(v) or v <= 0.0 for v in value):
            raise ValueError("every transmit power must be positive and finite")
        return value

    @field_validator("rho")
    @classmethod
    def _splitting_ratio_range(cls, value):
        if any(not 0.0 <= v <= 1.0 for v in value):
            raise ValueError("every splitting ratio must lie in [0, 1]")
        return value

    @model_validator(mode="after")
    def _per_user_lengths(self):
        if len(self.P) != self.K:
            raise ValueError(f"P has {len(self.P)} entries, expected K={self.K}")
        if len(self.rho) != self.K:
            raise ValueError(f"rho has {len(self.rho)} entries, expected K={self.K}")
        return self

    @property
    def p(self) -> np.ndarray:
        """Per-stream power P_k / d."""
        return np.asarray(self.P) / self.d

    @property
    def rho_bar(self) -> np.ndarray:
        return 1.0 - np.asarray(self.rho)

    @property
    def M_d(self) -> float:
        """Grassmann volume factor M / (d (M - d)) of the rate-loss bound."""
        if self.M <= self.d:
            raise DimensionError(f"M_d needs M > d, got M={self.M}, d={self.d}")
        return self.M / (self.d * (self.M - self.d))

    @property
    def label(self) -> str:
        return f"({self.M}x{self.N},{self.d})^{self.K}"

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy with every P_k set so that P_k / sigma2 equals ``snr_db``."""
        power = self.sigma2 * 10.0 ** (snr_db / 10.0)
        return self.model_copy(update={"P": (power,) * self.K})

    def with_rho(self, rho) -> "SystemConfig":
        values = (float(rho),) * self.K if np.isscalar(rho) else tuple(float(r) for r in rho)
        return SystemConfig(**{**self.model_dump(), "rho": values})


def check_feasible(cfg: SystemConfig) -> bool:
    """True when the configured IA feasibility gate and the M >= 2d condition both hold."""
    streams = cfg.K + 2 if cfg.feasibility == "strict" else cfg.K + 1
    return cfg.M + cfg.N - streams * cfg.d >= 0 and cfg.M >= 2 * cfg.d


def require_feasible(cfg: SystemConfig) -> None:
    if not check_feasible(cfg):
        logger.warning(f"Feasibility gate ({cfg.feasibility}) fails for {cfg.label}")
        raise InfeasibleSystem(
            f"system {cfg.label} fails the {cfg.feasibility} feasibility gate or M >= 2d"
        )


def sigma_id2(cfg: SystemConfig, k: int) -> float:
    """Effective information-decoding noise variance sigma^2 + delta^2 / rho_k."""
    rho_k = cfg.rho[k]
    if rho_k == 0.0:
        raise SplitAllEnergy(f"receiver {k} routes all power to harvesting (rho = 0)")
    return cfg.sigma2 + cfg.delta2 / rho_k


def sigma_id2_all(cfg: SystemConfig) -> np.ndarray:
    return np.array([sigma_id2(cfg, k) for k in range(cfg.K)])


@dataclass(frozen=True)
class ChannelSet:
    """All K x K channel matrices; ``H[k, j]`` is the N x M channel from transmitter j to receiver k."""

    H: np.ndarray

    def __post_init__(self):
        if self.H.ndim != 4 or self.H.shape[0] != self.H.shape[1]:
            raise DimensionError(f"channel array must have shape (K, K, N, M), got {self.H.shape}")
        if not np.all(np.isfinite(self.H)):
            raise DimensionError("channel entries must be finite")

    @classmethod
    def from_matrices(cls, matrices: Sequence[Sequence[np.ndarray]]) -> "ChannelSet":
        return cls(np.asarray(matrices, dtype=complex))

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def N(self) -> int:
        return self.H.shape[2]

    @property
    def M(self) -> int:
        return self.H.shape[3]

    def __getitem__(self, index: Tuple[int, int]) -> np.ndarray:
        return self.H[index]

    def total_power(self) -> float:
        """Sum of ||H_kj||_F^2 over all pairs."""
        return float(np.sum(np.abs(self.H) ** 2))

    def cross_power(self) -> float:
        """Sum of ||H_kj||_F^2 over the interfering pairs j != k."""
        power = np.sum(np.abs(self.H) ** 2, axis=(2, 3))
        return float(power.sum() - np.trace(power))

    def scaled(self, factor: float) -> "ChannelSet":
        return ChannelSet(self.H * factor)


def check_channels(cfg: SystemConfig, ch: ChannelSet) -> None:
    if ch.H.shape != (cfg.K, cfg.K, cfg.N, cfg.M):
        raise DimensionError(
            f"channel shape {ch.H.shape} does not match {cfg.label} "
            f"(expected {(cfg.K, cfg.K, cfg.N, cfg.M)})"
        )


def realize_channels(cfg: SystemConfig, rng_seed: SeedLike = None) -> ChannelSet:
    """Draw K^2 independent N x M channels with i.i.d. CN(0, 1) entries."""
    rng = make_rng(rng_seed)
    return ChannelSet(complex_normal(rng, (cfg.K, cfg.K, cfg.N, cfg.M)))


@dataclass(frozen=True)
class StackedChannel:
    """
    Per-transmitter energy view of the channel.

    ``stacks[j]`` is the (K*N) x M vertical stack of sqrt(rho_bar_k) * H_kj so
    that ``stacks[j]^H stacks[j] == grams[j] == sum_k rho_bar_k H_kj^H H_kj``.
    """

    stacks: np.ndarray
    grams: np.ndarray

    def energy_form(self, j: int, V: np.ndarray) -> float:
        """||H~_j V||_F^2 = tr(V^H G_j V)."""
        return float(np.real(np.trace(V.conj().T @ self.grams[j] @ V)))


def stack_channels(cfg: SystemConfig, ch: ChannelSet) -> StackedChannel:
    check_channels(cfg, ch)
    weights = np.sqrt(cfg.rho_bar)
    # (j, k, N, M): column j of the channel array, receivers weighted
    weighted = weights[None, :, None, None] * np.transpose(ch.H, (1, 0, 2, 3))
    stacks = weighted.reshape(cfg.K, cfg.K * cfg.N, cfg.M)
    grams = np.einsum("k,kjnm,kjnl->jml", cfg.rho_bar, ch.H.conj(), ch.H)
    grams = 0.5 * (grams + np.conj(np.transpose(grams, (0, 2, 1))))
    return StackedChannel(stacks=stacks, grams=grams)
