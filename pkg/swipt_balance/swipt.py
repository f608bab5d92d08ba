"""
Energy-aware precoding for SWIPT interference networks.

Max-EH precoders maximise the harvested energy and ignore alignment.
Balanced precoders sit at a prescribed chordal distance z from the IA
precoders and maximise harvested energy under that distance constraint,
trading a bounded rate loss for energy.

For transmitter j with IA precoder V, null-space basis V_n and energy Gram G
the balanced precoder is

    V_bal = V X diag(y) + V_n S diag(z)

with X unitary, S an orthonormal selection of d null-space directions and
sum(z_i^2) = z, y_i = sqrt(1 - z_i^2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from swipt_balance.errors import AllPowerToID, BadZ, DegenerateK, RankDeficient
from swipt_balance.grassmann import chordal_distance_sq
from swipt_balance.ia import IASolution
from swipt_balance.model import (
    ChannelSet,
    StackedChannel,
    SystemConfig,
    sigma_id2,
    stack_channels,
)
from swipt_balance.numerics import (
    herm_eig,
    nearest_unitary,
    null_space,
    orthonormalize,
    qr_positive,
)

logger = logging.getLogger(__name__)

DEFAULT_ICD_ITERS = 6
DEFAULT_ICD_TOL = 1e-9
X_INNER_ITERS = 25

PrecoderLike = Union[IASolution, np.ndarray]


def _precoders(source: PrecoderLike) -> np.ndarray:
    return source.precoders if hasattr(source, "precoders") else np.asarray(source)


def _per_user(z, K: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = np.full(K, float(z))
    if z.shape != (K,):
        raise BadZ(f"expected a scalar or {K} per-user distances, got shape {z.shape}")
    if np.any(~np.isfinite(z)) or np.any(z < 0.0):
        raise BadZ("target chordal distances must be finite and non-negative")
    return z


@dataclass(frozen=True)
class MaxEHResult:
    """Energy-optimal precoders and the spectra of the energy Grams."""

    precoders: np.ndarray
    eigenvalues: np.ndarray
    max_energy: float


def max_eh_precoders(cfg: SystemConfig, ch: ChannelSet, stacked: Optional[StackedChannel] = None) -> MaxEHResult:
    """Top-d eigenvectors of every G_j = sum_k rho_bar_k H_kj^H H_kj."""
    if np.all(cfg.rho_bar == 0.0):
        raise AllPowerToID("every receiver routes all power to decoding; nothing to harvest")
    stacked = stacked if stacked is not None else stack_channels(cfg, ch)
    precoders = np.empty((cfg.K, cfg.M, cfg.d), dtype=complex)
    eigenvalues = np.empty((cfg.K, cfg.M))
    for j in range(cfg.K):
        eig = herm_eig(stacked.grams[j])
        precoders[j] = eig.eigenvectors[:, : cfg.d]
        eigenvalues[j] = eig.eigenvalues
    max_energy = cfg.zeta * float(np.sum(cfg.p * eigenvalues[:, : cfg.d].sum(axis=1)))
    return MaxEHResult(precoders=precoders, eigenvalues=eigenvalues, max_energy=max_energy)


def z_eh(ia: PrecoderLike, eh: MaxEHResult) -> np.ndarray:
    """Per-user squared chordal distance between the IA and max-EH precoders."""
    V = _precoders(ia)
    return np.array([chordal_distance_sq(V[j], eh.precoders[j]) for j in range(V.shape[0])])


def z_bar(cfg: SystemConfig, c: float, P: Optional[float] = None, K: Optional[int] = None, k: int = 0) -> float:
    """
    Largest common distance keeping the rate-loss bound at d log2(c).

    (c - 1) / (M_d (K - 1)) * (P / sigma_ID^2)^-1 for receiver ``k``.
    """
    K = cfg.K if K is None else K
    P = cfg.P[k] if P is None else P
    if K < 2:
        raise DegenerateK("the rate-loss threshold needs at least two users")
    if c < 1.0:
        raise BadZ(f"rate-loss factor must be >= 1, got {c}")
    if P <= 0.0:
        raise BadZ(f"power must be positive, got {P}")
    return (c - 1.0) / (cfg.M_d * (K - 1)) * sigma_id2(cfg, k) / P


def design_z(
    cfg: SystemConfig,
    ia: PrecoderLike,
    eh: MaxEHResult,
    c: float,
    P: Optional[float] = None,
) -> np.ndarray:
    """Constant-rate-loss design z_k = min(z_bar(P), z_k^EH)."""
    thresholds = np.array([z_bar(cfg, c, P=P, k=k) for k in range(cfg.K)])
    return np.minimum(thresholds, z_eh(ia, eh))


@dataclass
class UserBalance:
    """Per-transmitter outcome of the balanced design."""

    precoder: np.ndarray
    X: Optional[np.ndarray] = None
    sigma_y: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None
    sigma_z: Optional[np.ndarray] = None
    trace: List[float] = field(default_factory=list)
    cross_term: float = 0.0
    iterations: int = 0
    converged: bool = True
    used_max_eh: bool = False
    start: str = "uniform"


@dataclass
class BalancedResult:
    """Balanced precoders with their realized distances and design components."""

    precoders: np.ndarray
    per_user_z: np.ndarray
    target_z: np.ndarray
    z_eh: np.ndarray
    used_max_eh: List[bool]
    objective_trace: List[List[float]]
    components: List[Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]]
    cross_terms: List[float]
    converged: List[bool]
    iterations: List[int]
    method: str = "icd"
    starts: List[str] = field(default_factory=list)


def _energy(G: np.ndarray, V: np.ndarray) -> float:
    return float(np.real(np.trace(V.conj().T @ G @ V)))


def _null_directions(G: np.ndarray, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Null-space basis V_n and the d energy-carrying null directions S."""
    Vn = null_space(V)
    A = Vn.conj().T @ G @ V
    try:
        S = orthonormalize(A)
    except RankDeficient:
        logger.warning("null-space energy coupling is rank deficient; completing S arbitrarily")
        S, _ = qr_positive(A, allow_singular=True)
    return Vn, S


def _fit_to_budget(direction: np.ndarray, z: float) -> np.ndarray:
    """
    Entries proportional to ``direction`` with squared sum ``z``, clipped at 1.

    Clipped entries are fixed at 1 and the remaining budget is spread over
    the others; repeated until nothing exceeds 1.
    """
    d = direction.size
    if z >= d:
        return np.ones(d)
    direction = np.maximum(np.real(direction), 0.0)
    sigma = np.zeros(d)
    clipped = np.zeros(d, dtype=bool)
    for _ in range(d):
        free = ~clipped
        remaining = max(z - float(clipped.sum()), 0.0)
        c = direction[free]
        norm = np.linalg.norm(c)
        if norm == 0.0:
            sigma[free] = np.sqrt(remaining / c.size)
        else:
            sigma[free] = np.sqrt(remaining) * c / norm
        over = free & (sigma > 1.0)
        if not over.any():
            break
        sigma[over] = 1.0
        clipped |= over
    return np.minimum(sigma, 1.0)


def _column_directions(B: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(B, axis=0)
    safe = np.where(norms > 0.0, norms, 1.0)
    return B / safe


@dataclass
class _UserProblem:
    """Fixed data of one transmitter's balanced design."""

    G: np.ndarray
    V: np.ndarray
    Vn: np.ndarray
    S: np.ndarray
    A: np.ndarray  # V^H G V
    T: np.ndarray  # V^H G V_n S
    c: np.ndarray  # diag(S^H V_n^H G V_n S)

    @classmethod
    def build(cls, G: np.ndarray, V: np.ndarray) -> "_UserProblem":
        Vn, S = _null_directions(G, V)
        VnS = Vn @ S
        return cls(
            G=G,
            V=V,
            Vn=Vn,
            S=S,
            A=V.conj().T @ G @ V,
            T=V.conj().T @ G @ VnS,
            c=np.real(np.einsum("md,mn,nd->d", VnS.conj(), G, VnS)),
        )

    @property
    def d(self) -> int:
        return self.V.shape[1]

    def assemble(self, X: np.ndarray, sigma_z: np.ndarray) -> np.ndarray:
        return _assemble(self.V, self.Vn, X, np.sqrt(1.0 - sigma_z**2), self.S, sigma_z)

    def energy(self, X: np.ndarray, sigma_z: np.ndarray) -> float:
        return _energy(self.G, self.assemble(X, sigma_z))


def _align(X: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Rotate the phase of every column of X so that diag(X^H T) is real and >= 0."""
    u = np.einsum("md,md->d", X.conj(), T)
    phases = np.where(np.abs(u) > 0.0, u / np.where(np.abs(u) > 0.0, np.abs(u), 1.0), 1.0)
    return X * phases


def _x_step(problem: _UserProblem, X: np.ndarray, sigma_z: np.ndarray) -> np.ndarray:
    """
    Unitary X for fixed distances.

    Each pass replaces X by the unitary polar factor of A X Y^2 + B, with
    B = T Z Y. The energy is convex in X, so its linearisation at the
    current X is a minorizer and no pass lowers the energy. With Y^2 dropped
    the update reduces to the cross-term maximizer polar(B).
    """
    sigma_y = np.sqrt(1.0 - sigma_z**2)
    B = problem.T * (sigma_z * sigma_y)
    for _ in range(X_INNER_ITERS):
        X_new = _align(nearest_unitary(problem.A @ X * sigma_y**2 + B), problem.T)
        moved = np.linalg.norm(X_new - X)
        X = X_new
        if moved <= 1e-13:
            break
    return X


def _z_step(a: np.ndarray, c: np.ndarray, r: np.ndarray, z: float) -> np.ndarray:
    """
    Distances maximising sum_i a_i y_i^2 + c_i z_i^2 + 2 r_i y_i z_i with
    sum_i z_i^2 = z, y_i = sqrt(1 - z_i^2) and r_i >= 0.

    Every (y_i, z_i) is the top eigenvector of [[a_i, r_i], [r_i, c_i - mu]];
    mu is found by bisection so the budget is met. Users whose share jumps
    at mu (r_i = 0) are flat there and take the interpolated share.
    """
    d = a.size
    if z <= 0.0:
        return np.zeros(d)
    if z >= d:
        return np.ones(d)

    def shares(mu: float) -> np.ndarray:
        return np.sin(0.5 * np.arctan2(2.0 * r, a - c + mu)) ** 2

    scale = float(np.max(np.abs(a) + np.abs(c) + 2.0 * r)) + 1.0
    lo, hi = -scale, scale
    for _ in range(200):
        if shares(lo).sum() >= z:
            break
        lo *= 2.0
    for _ in range(200):
        if shares(hi).sum() <= z:
            break
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if shares(mid).sum() >= z:
            lo = mid
        else:
            hi = mid

    s_lo, s_hi = shares(lo), shares(hi)
    total_lo, total_hi = float(s_lo.sum()), float(s_hi.sum())
    weight = 1.0 if total_lo <= total_hi else float(np.clip((z - total_hi) / (total_lo - total_hi), 0.0, 1.0))
    return np.sqrt(np.clip(weight * s_lo + (1.0 - weight) * s_hi, 0.0, 1.0))


def _assemble(V, Vn, X, sigma_y, S, sigma_z) -> np.ndarray:
    return V @ X * sigma_y + Vn @ S * sigma_z


def _cross_term(T: np.ndarray, X: np.ndarray, sigma_y: np.ndarray, sigma_z: np.ndarray) -> float:
    return float(np.sum(sigma_y * sigma_z * np.real(np.diag(X.conj().T @ T))))


def _uniform_point(d: int, z: float) -> Tuple[np.ndarray, np.ndarray]:
    return np.eye(d, dtype=complex), np.full(d, np.sqrt(min(z / d, 1.0)))


def _closed_form_point(problem: _UserProblem, z: float) -> Tuple[np.ndarray, np.ndarray]:
    """Z from the null-space energy profile, X from the columns of V^H G V Y^-1."""
    sigma_z = _fit_to_budget(np.sqrt(np.maximum(problem.c, 0.0)), z)
    sigma_y = np.sqrt(1.0 - sigma_z**2)
    zero = sigma_y <= 1e-12
    if zero.any():
        logger.warning(f"Y has {int(zero.sum())} zero diagonal entries; using its pseudo-inverse")
    y_inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, sigma_y))
    X = nearest_unitary(_column_directions(problem.A * y_inv))
    return X, sigma_z


def _user_balance(problem: _UserProblem, X, sigma_z, trace, iterations=0, converged=True, start="uniform"):
    sigma_y = np.sqrt(1.0 - sigma_z**2)
    return UserBalance(
        precoder=orthonormalize(problem.assemble(X, sigma_z)),
        X=X,
        sigma_y=sigma_y,
        S=problem.S,
        sigma_z=sigma_z,
        trace=trace,
        cross_term=_cross_term(problem.T, X, sigma_y, sigma_z),
        iterations=iterations,
        converged=converged,
        start=start,
    )


def _climb(problem: _UserProblem, X, sigma_z, z: float, max_iters: int, tol: float, start: str) -> UserBalance:
    X = _align(X, problem.T)
    energy = problem.energy(X, sigma_z)
    trace = [energy]
    converged = False
    iterations = 0

    for iterations in range(1, max_iters + 1):
        X_new = _x_step(problem, X, sigma_z)
        a = np.real(np.einsum("md,mn,nd->d", X_new.conj(), problem.A, X_new))
        r = np.real(np.einsum("md,md->d", X_new.conj(), problem.T))
        sigma_z_new = _z_step(a, problem.c, np.maximum(r, 0.0), z)
        candidate = problem.energy(X_new, sigma_z_new)
        logger.debug(f"ICD iteration {iterations} from the {start} start: energy {candidate:.12g}")
        # a lower candidate is round-off at a fixed point
        improvement = max(candidate - energy, 0.0)
        if candidate >= energy:
            X, sigma_z, energy = X_new, sigma_z_new, candidate
        trace.append(energy)
        if improvement <= tol:
            converged = True
            break

    return _user_balance(problem, X, sigma_z, trace, iterations, converged, start)


def _balance_iterative(G: np.ndarray, V: np.ndarray, z: float, max_iters: int, tol: float) -> UserBalance:
    problem = _UserProblem.build(G, V)
    best = _climb(problem, *_uniform_point(problem.d, z), z, max_iters, tol, "uniform")
    other = _climb(problem, *_closed_form_point(problem, z), z, max_iters, tol, "closed_form")
    if other.trace[-1] > best.trace[-1]:
        best = other
    return best


def _balance_noniterative(G: np.ndarray, V: np.ndarray, z: float) -> UserBalance:
    problem = _UserProblem.build(G, V)
    X, sigma_z = _closed_form_point(problem, z)
    energy = problem.energy(X, sigma_z)
    X_u, sigma_z_u = _uniform_point(problem.d, z)
    uniform = problem.energy(X_u, sigma_z_u)
    if uniform > energy:
        logger.debug(f"closed-form point harvests {energy:.6g} < {uniform:.6g}; keeping the uniform split")
        return _user_balance(problem, X_u, sigma_z_u, [uniform])
    return _user_balance(problem, X, sigma_z, [energy], start="closed_form")


def _balanced(
    cfg: SystemConfig,
    ch: ChannelSet,
    ia: PrecoderLike,
    z,
    method: str,
    max_iters: int,
    tol: float,
    eh: Optional[MaxEHResult],
) -> BalancedResult:
    V = _precoders(ia)
    targets = _per_user(z, cfg.K)
    stacked = stack_channels(cfg, ch)
    eh = eh if eh is not None else max_eh_precoders(cfg, ch, stacked)
    thresholds = z_eh(V, eh)

    users: List[UserBalance] = []
    for j in range(cfg.K):
        G = stacked.grams[j]
        if targets[j] > thresholds[j]:
            users.append(
                UserBalance(
                    precoder=eh.precoders[j].copy(),
                    trace=[_energy(G, eh.precoders[j])],
                    used_max_eh=True,
                )
            )
        elif method == "icd":
            users.append(_balance_iterative(G, V[j], float(targets[j]), max_iters, tol))
        else:
            users.append(_balance_noniterative(G, V[j], float(targets[j])))

    precoders = np.stack([u.precoder for u in users])
    realized = np.array([chordal_distance_sq(V[j], precoders[j]) for j in range(cfg.K)])
    if not all(u.converged for u in users):
        logger.debug(f"ICD hit its {max_iters}-iteration cap for some users")
    return BalancedResult(
        precoders=precoders,
        per_user_z=realized,
        target_z=targets,
        z_eh=thresholds,
        used_max_eh=[u.used_max_eh for u in users],
        objective_trace=[u.trace for u in users],
        components=[
            None if u.used_max_eh else (u.X, np.diag(u.sigma_y), u.S, np.diag(u.sigma_z)) for u in users
        ],
        cross_terms=[u.cross_term for u in users],
        converged=[u.converged for u in users],
        iterations=[u.iterations for u in users],
        method=method,
        starts=["max_eh" if u.used_max_eh else u.start for u in users],
    )


def balanced_precoders_iterative(
    cfg: SystemConfig,
    ch: ChannelSet,
    ia: PrecoderLike,
    z,
    max_iters: int = DEFAULT_ICD_ITERS,
    tol: float = DEFAULT_ICD_TOL,
    eh: Optional[MaxEHResult] = None,
) -> BalancedResult:
    """
    Iterative CD decomposition design.

    For every user S is fixed first. Then the X update (polar factor of
    A X Y^2 + V^H G V_n S Z Y, repeated until X settles) alternates with the
    Z update (exact maximizer of the energy over the distance budget for
    the current X). Neither update lowers tr(V_bal^H G V_bal). Iteration
    stops once one step improves that objective by no more than ``tol``
    (absolute, in the units of ``objective_trace``) or after ``max_iters``
    steps.

    The ascent is run from the uniform split (X = I, Z = sqrt(z/d) I) and
    from the non-iterative design point; the better end point is kept and
    ``starts`` names its origin, so the result never harvests less than the
    non-iterative design.
    """
    return _balanced(cfg, ch, ia, z, "icd", max_iters, tol, eh)


def balanced_precoders_noniterative(
    cfg: SystemConfig,
    ch: ChannelSet,
    ia: PrecoderLike,
    z,
    eh: Optional[MaxEHResult] = None,
) -> BalancedResult:
    """
    Single-shot design.

    Z follows the null-space energy profile and X is the unitary polar factor
    of the column-normalised V^H G V Y^-1. When that point harvests less than
    the uniform split (X = I, Z = sqrt(z/d) I) the uniform split is returned,
    which keeps every user above the lower energy bound.
    """
    return _balanced(cfg, ch, ia, z, "cd", 0, 0.0, eh)


def energy_bounds(
    cfg: SystemConfig,
    ch: ChannelSet,
    ia: PrecoderLike,
    eh: MaxEHResult,
    z,
) -> Tuple[float, float]:
    """Lower and upper bounds on the total harvested energy of the balanced design."""
    V = _precoders(ia)
    targets = _per_user(z, cfg.K)
    thresholds = z_eh(V, eh)
    if np.any(targets > thresholds + 1e-12):
        raise BadZ("energy bounds need z_j <= z_j^EH for every user")
    stacked = stack_channels(cfg, ch)
    lower = 0.0
    for j in range(cfg.K):
        G = stacked.grams[j]
        Vn, S = _null_directions(G, V[j])
        ratio = targets[j] / cfg.d
        lower += cfg.p[j] * (_energy(G, V[j]) * (1.0 - ratio) + _energy(G, Vn @ S) * ratio)
    upper = float(np.sum(np.asarray(cfg.P) * eh.eigenvalues[:, 0]))
    return cfg.zeta * lower, cfg.zeta * upper


def expected_energy_bounds(cfg: SystemConfig) -> Tuple[float, float]:
    """
    Reference values for the mean total harvested energy over CN(0, 1) channels.

    Returns (zeta rho_bar K N sum P, zeta rho_bar K N d ((KN + d)/(KNd + 1))^(2/3) sum P)
    with rho_bar the mean harvesting share.
    """
    K, N, d = cfg.K, cfg.N, cfg.d
    scale = cfg.zeta * float(np.mean(cfg.rho_bar)) * K * N * float(np.sum(cfg.P))
    return scale, scale * d * ((K * N + d) / (K * N * d + 1)) ** (2.0 / 3.0)

