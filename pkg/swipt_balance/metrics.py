"""
Performance metrics: sum rate, harvested energy, rate-loss bound and
Monte-Carlo QPSK symbol error rate.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy import linalg
from scipy.stats import norm

from swipt_balance.errors import SingularCovariance, SplitAllEnergy
from swipt_balance.ia import effective_channels
from swipt_balance.model import ChannelSet, SystemConfig, check_channels, sigma_id2, sigma_id2_all
from swipt_balance.numerics import SeedLike, complex_normal

logger = logging.getLogger(__name__)

SER_BLOCK_SIZE = 4096


def _logdet_pd(A: np.ndarray) -> float:
    try:
        c, _ = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as e:
        raise SingularCovariance(f"covariance is not positive definite: {e}") from e
    return 2.0 * float(np.sum(np.log(np.real(np.diag(c)))))


def sum_rate(
    cfg: SystemConfig,
    ch: ChannelSet,
    precoders: np.ndarray,
    decoders: np.ndarray,
) -> np.ndarray:
    """
    Per-user achievable rates in bits/s/Hz.

    R_k = log2 |I + p_k Hb_kk Hb_kk^H (sigma_ID^2 I + sum_{j != k} p_j Hb_kj Hb_kj^H)^-1|
    with Hb_kj = U_k^H H_kj V_j. Sum them for the sum rate.
    """
    check_channels(cfg, ch)
    noise = sigma_id2_all(cfg)
    p = cfg.p
    Hb = effective_channels(ch, precoders, decoders)
    rates = np.empty(cfg.K)
    for k in range(cfg.K):
        covariance = noise[k] * np.eye(cfg.d, dtype=complex)
        for j in range(cfg.K):
            if j != k:
                covariance += p[j] * Hb[k, j] @ Hb[k, j].conj().T
        total = covariance + p[k] * Hb[k, k] @ Hb[k, k].conj().T
        rates[k] = (_logdet_pd(total) - _logdet_pd(covariance)) / np.log(2.0)
    return np.maximum(rates, 0.0)


def perfect_alignment_rates(
    cfg: SystemConfig,
    ch: ChannelSet,
    precoders: np.ndarray,
    decoders: np.ndarray,
) -> np.ndarray:
    """Singular-value form sum_i log2(1 + p_k s_i^2 / sigma_ID^2), valid under perfect alignment."""
    noise = sigma_id2_all(cfg)
    Hb = effective_channels(ch, precoders, decoders)
    rates = np.empty(cfg.K)
    for k in range(cfg.K):
        s = linalg.svdvals(Hb[k, k])
        rates[k] = float(np.sum(np.log2(1.0 + cfg.p[k] * s**2 / noise[k])))
    return rates


def harvested_energy(
    cfg: SystemConfig,
    ch: ChannelSet,
    precoders: np.ndarray,
    exact: bool = False,
) -> np.ndarray:
    """
    Per-receiver harvested energy Q_k = zeta rho_bar_k sum_j (P_j / d) ||H_kj V_j||_F^2.

    The receiver noise contribution is left out unless ``exact`` is set, in
    which case zeta rho_bar_k N sigma^2 is added.
    """
    check_channels(cfg, ch)
    received = np.einsum("kjnm,jme->kjne", ch.H, precoders)
    power = np.sum(np.abs(received) ** 2, axis=(2, 3))
    energy = cfg.zeta * cfg.rho_bar * (power @ cfg.p)
    if exact:
        energy = energy + cfg.zeta * cfg.rho_bar * cfg.N * cfg.sigma2
    return energy


def rate_loss_bound(cfg: SystemConfig, z, P: Optional[float] = None) -> np.ndarray:
    """Per-user bound d log2(1 + (P / sigma_ID^2) M_d sum_{j != k} z_j)."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = np.full(cfg.K, float(z))
    others = z.sum() - z
    power = np.asarray(cfg.P) if P is None else np.full(cfg.K, float(P))
    snr = power / sigma_id2_all(cfg)
    return cfg.d * np.log2(1.0 + snr * cfg.M_d * others)


def qpsk_ser_awgn(snr_db: float) -> float:
    """Analytic QPSK symbol error rate 2Q(sqrt(snr)) - Q(sqrt(snr))^2 at Es/N0 = ``snr_db``."""
    q = norm.sf(np.sqrt(10.0 ** (snr_db / 10.0)))
    return float(2.0 * q - q * q)


def snr_shift_db(cfg: SystemConfig, k: int = 0) -> float:
    """Effective SNR penalty 10 log10(1 + delta^2 / (rho_k sigma^2)) of the splitter."""
    return float(10.0 * np.log10(sigma_id2(cfg, k) / cfg.sigma2))


def rho_for_snr_shift(cfg: SystemConfig, shift_db: float) -> float:
    """Splitting ratio producing a given SNR shift; 3 dB gives rho = delta^2 / sigma^2."""
    if shift_db <= 0.0:
        raise ValueError("SNR shift must be positive")
    return cfg.delta2 / (cfg.sigma2 * (10.0 ** (shift_db / 10.0) - 1.0))


def _qpsk_block(
    cfg: SystemConfig,
    ch: ChannelSet,
    precoders: np.ndarray,
    decoders: np.ndarray,
    n: int,
    seed: np.random.SeedSequence,
) -> int:
    rng = np.random.default_rng(seed)
    K, d, p = cfg.K, cfg.d, cfg.p
    bits = rng.integers(0, 2, size=(K, d, n, 2))
    # Gray-mapped QPSK, unit symbol energy
    symbols = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2.0)
    transmitted = np.einsum("jmd,jdn->jmn", precoders, symbols) * np.sqrt(p)[:, None, None]
    Hb = effective_channels(ch, precoders, decoders)

    errors = 0
    for k in range(K):
        rho = cfg.rho[k]
        received = np.einsum("jnm,jmt->nt", ch.H[k], transmitted)
        received = received + np.sqrt(cfg.sigma2) * complex_normal(rng, received.shape)
        split = np.sqrt(rho) * received + np.sqrt(cfg.delta2) * complex_normal(rng, received.shape)
        r = decoders[k].conj().T @ split

        desired = np.sqrt(rho * p[k]) * Hb[k, k]
        covariance = (rho * cfg.sigma2 + cfg.delta2) * np.eye(d, dtype=complex)
        for j in range(K):
            if j != k:
                covariance += rho * p[j] * Hb[k, j] @ Hb[k, j].conj().T
        W = linalg.solve(desired @ desired.conj().T + covariance, desired, assume_a="pos")
        estimate = W.conj().T @ r
        wrong = (np.real(estimate) < 0) != (bits[k, :, :, 0] == 1)
        wrong |= (np.imag(estimate) < 0) != (bits[k, :, :, 1] == 1)
        errors += int(np.count_nonzero(wrong))
    return errors


def ser_qpsk(
    cfg: SystemConfig,
    ch: ChannelSet,
    precoders: np.ndarray,
    decoders: np.ndarray,
    snr_db: Optional[float] = None,
    n_symbols: int = 10_000,
    rng_seed: SeedLike = None,
    workers: int = 1,
) -> float:
    """
    Monte-Carlo QPSK symbol error rate over all users and streams.

    Symbols pass through the channel, the power splitter (with circuit noise)
    and the decoder, then a per-user d x d MMSE equalizer and hard decisions.
    Blocks use independent child seeds and their error counts are added.
    """
    check_channels(cfg, ch)
    if snr_db is not None:
        cfg = cfg.with_snr_db(snr_db)
    for k in range(cfg.K):
        if cfg.rho[k] == 0.0:
            raise SplitAllEnergy(f"receiver {k} has no information-decoding branch")
    if n_symbols < 1:
        raise ValueError("n_symbols must be positive")
    sizes = [SER_BLOCK_SIZE] * (n_symbols // SER_BLOCK_SIZE)
    if n_symbols % SER_BLOCK_SIZE:
        sizes.append(n_symbols % SER_BLOCK_SIZE)
    root = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    seeds = root.spawn(len(sizes))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda a: _qpsk_block(cfg, ch, precoders, decoders, *a), zip(sizes, seeds)))
    else:
        counts = [_qpsk_block(cfg, ch, precoders, decoders, n, s) for n, s in zip(sizes, seeds)]
    return sum(counts) / float(n_symbols * cfg.K * cfg.d)


@dataclass
class MetricsRecord:
    """Metrics of one precoder set on one channel realization."""

    per_user_rate: np.ndarray
    sum_rate: float
    per_user_energy: np.ndarray
    total_energy: float
    rlub: float
    realized_z: np.ndarray
    snr_db: float
    rho: float
    seed: int

    def as_row(self) -> Dict[str, float]:
        """Scalar view used by the result tables."""
        row = asdict(self)
        for key in ("per_user_rate", "per_user_energy", "realized_z"):
            row.pop(key)
        row["realized_z"] = float(np.mean(self.realized_z))
        return row


def evaluate(
    cfg: SystemConfig,
    ch: ChannelSet,
    precoders: np.ndarray,
    decoders: Optional[np.ndarray],
    realized_z,
    snr_db: float,
    seed: int,
) -> MetricsRecord:
    """
    Collect rates, energies and the rate-loss bound for one evaluation point.

    Rates and the bound are NaN when some receiver has rho = 0 or when no
    decoders are supplied.
    """
    realized_z = np.asarray(realized_z, dtype=float)
    energy = harvested_energy(cfg, ch, precoders)
    if decoders is None or any(r == 0.0 for r in cfg.rho):
        rates = np.full(cfg.K, np.nan)
        rlub = float("nan")
    else:
        rates = sum_rate(cfg, ch, precoders, decoders)
        rlub = float(np.sum(rate_loss_bound(cfg, realized_z)))
    return MetricsRecord(
        per_user_rate=rates,
        sum_rate=float(np.sum(rates)),
        per_user_energy=energy,
        total_energy=float(np.sum(energy)),
        rlub=rlub,
        realized_z=realized_z,
        snr_db=float(snr_db),
        rho=float(np.mean(cfg.rho)),
        seed=int(seed),
    )


def mean_and_se(values: List[float]) -> tuple:
    """Sample mean and standard error (NaN-aware)."""
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return float("nan"), float("nan")
    se = float(np.std(arr, ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), se
