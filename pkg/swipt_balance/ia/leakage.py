"""
Interference leakage minimization by alternating least-eigenspace updates.
"""

import logging

import numpy as np

from swipt_balance.ia.base import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    IASolution,
    InitMode,
    IterativeIASolverBase,
    stream_powers,
)
from swipt_balance.model import ChannelSet, SystemConfig, require_feasible
from swipt_balance.numerics import SeedLike, least_subspace

logger = logging.getLogger(__name__)


class LeakageMinIASolver(IterativeIASolverBase):
    """Alternating minimization of the power-weighted interference leakage."""

    name = "leakage"
    single_user_shortcut = True

    def _receive_covariance(self, k: int, precoders: np.ndarray) -> np.ndarray:
        p = stream_powers(self.cfg)
        Q = np.zeros((self.cfg.N, self.cfg.N), dtype=complex)
        for j in range(self.cfg.K):
            if j == k:
                continue
            A = self.ch.H[k, j] @ precoders[j]
            Q += p[j] * (A @ A.conj().T)
        return Q

    def _reverse_covariance(self, j: int, decoders: np.ndarray) -> np.ndarray:
        p = stream_powers(self.cfg)
        Q = np.zeros((self.cfg.M, self.cfg.M), dtype=complex)
        for k in range(self.cfg.K):
            if k == j:
                continue
            B = self.ch.H[k, j].conj().T @ decoders[k]
            Q += p[k] * (B @ B.conj().T)
        return Q

    def _update_decoders(self, precoders: np.ndarray) -> np.ndarray:
        return np.stack(
            [least_subspace(self._receive_covariance(k, precoders), self.cfg.d) for k in range(self.cfg.K)]
        )

    def _update_precoders(self, decoders: np.ndarray) -> np.ndarray:
        return np.stack(
            [least_subspace(self._reverse_covariance(j, decoders), self.cfg.d) for j in range(self.cfg.K)]
        )

    def get_cost(self, precoders: np.ndarray, decoders: np.ndarray) -> float:
        p = stream_powers(self.cfg)
        cost = 0.0
        for k in range(self.cfg.K):
            for j in range(self.cfg.K):
                if j != k:
                    cost += p[j] * float(
                        np.linalg.norm(decoders[k].conj().T @ self.ch.H[k, j] @ precoders[j]) ** 2
                    )
        return cost


def solve_leakage_min(
    cfg: SystemConfig,
    ch: ChannelSet,
    rng_seed: SeedLike = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    initialize_with: InitMode = "random",
    raise_on_failure: bool = False,
) -> IASolution:
    """Leakage-minimizing IA precoders and zero-forcing-style decoders."""
    require_feasible(cfg)
    solver = LeakageMinIASolver(
        cfg,
        ch,
        rng_seed=rng_seed,
        max_iters=max_iters,
        tol=tol,
        initialize_with=initialize_with,
        raise_on_failure=raise_on_failure,
    )
    solution = solver.solve()
    logger.debug(f"leakage IA: {solution.iterations} sweeps, leakage {solution.leakage:.3e}")
    return solution
