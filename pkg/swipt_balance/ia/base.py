"""
Common plumbing for the interference-alignment solvers.

A solver is built around one system configuration and one channel
realization. Iterative solvers alternate between a decoder update and a
precoder update; the subclasses only provide those two steps and the cost.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Literal, Optional, Tuple

import numpy as np
from scipy import linalg

from swipt_balance.errors import NotConverged
from swipt_balance.model import (
    ChannelSet,
    SystemConfig,
    check_channels,
    sigma_id2_all,
)
from swipt_balance.numerics import (
    SeedLike,
    make_rng,
    orthonormalize,
    sample_grassmann_batch,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 1000
DEFAULT_TOL = 1e-10

InitMode = Literal["random", "closed_form", "leakage"]


@dataclass
class IASolution:
    """Precoders (K, M, d) and decoders (K, N, d) returned by an IA solver."""

    precoders: np.ndarray
    decoders: np.ndarray
    leakage: float
    iterations: int
    converged: bool = True
    solver: str = ""
    cost_trace: List[float] = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.precoders.shape[0]

    @property
    def d(self) -> int:
        return self.precoders.shape[2]

    def rotated(self, rotations: np.ndarray) -> "IASolution":
        """Right-multiply every precoder V_j by the d x d unitary ``rotations[j]``."""
        return replace(self, precoders=np.einsum("kmd,kde->kme", self.precoders, rotations))


def interference_leakage(ch: ChannelSet, precoders: np.ndarray, decoders: np.ndarray) -> float:
    """Total residual interference power sum_k sum_{j != k} ||U_k^H H_kj V_j||_F^2."""
    effective = effective_channels(ch, precoders, decoders)
    power = np.sum(np.abs(effective) ** 2, axis=(2, 3))
    return float(power.sum() - np.trace(power))


def alignment_residual(ch: ChannelSet, precoders: np.ndarray, decoders: np.ndarray) -> float:
    """max over k, j != k of ||U_k^H H_kj V_j||_F / ||H_kj||_F."""
    effective = effective_channels(ch, precoders, decoders)
    num = np.linalg.norm(effective, axis=(2, 3))
    den = np.linalg.norm(ch.H, axis=(2, 3))
    mask = ~np.eye(ch.K, dtype=bool)
    if not mask.any():
        return 0.0
    return float(np.max(num[mask] / den[mask]))


def effective_channels(ch: ChannelSet, precoders: np.ndarray, decoders: np.ndarray) -> np.ndarray:
    """Array of d x d effective channels U_k^H H_kj V_j indexed [k, j]."""
    return np.einsum("knd,kjnm,jme->kjde", decoders.conj(), ch.H, precoders)


def mmse_decoders(cfg: SystemConfig, ch: ChannelSet, precoders: np.ndarray) -> np.ndarray:
    """
    Orthonormalized linear MMSE receive filters for arbitrary precoders.

    U_k spans C_k^{-1} H_kk V_k where C_k is the full receive covariance
    (desired signal, interference and sigma_ID^2 I).
    """
    check_channels(cfg, ch)
    noise = sigma_id2_all(cfg)
    p = cfg.p
    decoders = np.empty((cfg.K, cfg.N, cfg.d), dtype=complex)
    for k in range(cfg.K):
        received = np.einsum("jnm,jme->jne", ch.H[k], precoders)
        C = np.einsum("j,jne,jle->nl", p, received, received.conj()) + noise[k] * np.eye(cfg.N)
        decoders[k] = orthonormalize(linalg.solve(C, received[k], assume_a="pos"))
    return decoders


def matched_decoders(ch: ChannelSet, precoders: np.ndarray) -> np.ndarray:
    """Dominant left singular subspace of each desired channel H_kk V_k."""
    d = precoders.shape[2]
    decoders = []
    for k in range(ch.K):
        left, _, _ = linalg.svd(ch.H[k, k] @ precoders[k])
        decoders.append(left[:, :d])
    return np.stack(decoders)


class IASolverBase:
    """Base class for all IA solvers."""

    name = "base"
    single_user_shortcut = False

    def __init__(self, cfg: SystemConfig, ch: ChannelSet):
        check_channels(cfg, ch)
        self.cfg = cfg
        self.ch = ch

    def leakage(self, precoders: np.ndarray, decoders: np.ndarray) -> float:
        return interference_leakage(self.ch, precoders, decoders)

    def solve(self) -> IASolution:  # pragma: no cover
        raise NotImplementedError("solve must be implemented in a subclass")

    def _single_user(self, rng_seed: SeedLike) -> IASolution:
        V = sample_grassmann_batch(1, self.cfg.M, self.cfg.d, rng_seed)
        U = matched_decoders(self.ch, V)
        return IASolution(V, U, leakage=0.0, iterations=0, converged=True, solver=self.name)


class IterativeIASolverBase(IASolverBase):
    """
    Base class for the alternating IA solvers.

    Subclasses implement ``_update_decoders``, ``_update_precoders`` and
    ``get_cost``. The best iterate seen is returned.
    """

    def __init__(
        self,
        cfg: SystemConfig,
        ch: ChannelSet,
        rng_seed: SeedLike = None,
        max_iters: int = DEFAULT_MAX_ITERS,
        tol: float = DEFAULT_TOL,
        initialize_with: InitMode = "random",
        raise_on_failure: bool = False,
    ):
        super().__init__(cfg, ch)
        self.rng = make_rng(rng_seed)
        self.max_iters = max_iters
        self.tol = tol
        self.initialize_with = initialize_with
        self.raise_on_failure = raise_on_failure

    def _update_decoders(self, precoders: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def _update_precoders(self, decoders: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def get_cost(self, precoders: np.ndarray, decoders: np.ndarray) -> float:  # pragma: no cover
        raise NotImplementedError

    def _initial_precoders(self) -> np.ndarray:
        if self.initialize_with == "closed_form":
            from swipt_balance.ia.closed_form import solve_subspace_3user

            return solve_subspace_3user(self.cfg, self.ch).precoders
        if self.initialize_with == "leakage":
            from swipt_balance.ia.leakage import solve_leakage_min

            return solve_leakage_min(self.cfg, self.ch, rng_seed=self.rng).precoders
        return sample_grassmann_batch(self.cfg.K, self.cfg.M, self.cfg.d, self.rng)

    def _step(self, precoders: np.ndarray, decoders: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        precoders = self._update_precoders(decoders)
        return precoders, self._update_decoders(precoders)

    def _has_converged(self, previous: float, current: float) -> bool:
        return current <= self.tol or abs(previous - current) <= self.tol * max(1.0, abs(previous))

    def solve(self) -> IASolution:
        if self.cfg.K == 1 and self.single_user_shortcut:
            return self._single_user(self.rng)

        V = self._initial_precoders()
        U = self._update_decoders(V)
        cost = self.get_cost(V, U)
        trace = [cost]
        best: Tuple[float, np.ndarray, np.ndarray, int] = (cost, V, U, 0)
        converged = False
        iterations = 0

        for iterations in range(1, self.max_iters + 1):
            V, U = self._step(V, U)
            new_cost = self.get_cost(V, U)
            trace.append(new_cost)
            logger.debug(f"{self.name} sweep {iterations}: cost {new_cost:.6e}")
            if new_cost <= best[0]:
                best = (new_cost, V, U, iterations)
            if self._has_converged(cost, new_cost):
                converged = True
                cost = new_cost
                break
            cost = new_cost

        _, V, U, _ = best
        leakage = self.leakage(V, U)
        if not converged:
            message = (
                f"{self.name} IA solver did not converge in {self.max_iters} sweeps "
                f"(best leakage {leakage:.3e})"
            )
            if self.raise_on_failure:
                raise NotConverged(message)
            logger.warning(message)
        return IASolution(
            precoders=V,
            decoders=U,
            leakage=leakage,
            iterations=iterations,
            converged=converged,
            solver=self.name,
            cost_trace=trace,
        )


def stream_powers(cfg: SystemConfig) -> np.ndarray:
    """Per-stream powers normalised to unit mean, used to weight leakage terms."""
    p = cfg.p
    return p / p.mean()


def random_unitary(d: int, rng_seed: SeedLike = None) -> np.ndarray:
    return sample_grassmann_batch(1, d, d, rng_seed)[0]


def rank_deficient_user(solution: IASolution, ch: ChannelSet, floor: float = 1e-6) -> Optional[int]:
    """Index of the first user whose desired effective channel is rank deficient, else None."""
    effective = effective_channels(ch, solution.precoders, solution.decoders)
    for k in range(solution.K):
        if linalg.svdvals(effective[k, k])[-1] <= floor:
            return k
    return None
