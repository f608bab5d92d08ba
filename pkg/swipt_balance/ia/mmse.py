"""
Alternating sum-MSE minimization with orthonormal transceivers.

This is the standard alternating MMSE scheme and is used as the stand-in for
MMSE-based IA; solutions carry the solver label ``mmse``.
"""

import logging

import numpy as np
from scipy import linalg

from swipt_balance.ia.base import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    IASolution,
    InitMode,
    IterativeIASolverBase,
    mmse_decoders,
)
from swipt_balance.model import ChannelSet, SystemConfig, require_feasible, sigma_id2_all
from swipt_balance.numerics import SeedLike, orthonormalize

logger = logging.getLogger(__name__)


class MMSEIASolver(IterativeIASolverBase):
    """MMSE receive filters followed by the reciprocal transmit-filter update."""

    name = "mmse"

    def _update_decoders(self, precoders: np.ndarray) -> np.ndarray:
        return mmse_decoders(self.cfg, self.ch, precoders)

    def _update_precoders(self, decoders: np.ndarray) -> np.ndarray:
        p = self.cfg.p
        noise = sigma_id2_all(self.cfg)
        precoders = np.empty((self.cfg.K, self.cfg.M, self.cfg.d), dtype=complex)
        for j in range(self.cfg.K):
            # reciprocal network: receivers transmit through H_kj^H
            reverse = np.einsum("knm,knd->kmd", self.ch.H[:, j].conj(), decoders)
            A = np.einsum("k,kmd,kld->ml", p, reverse, reverse.conj()) + noise[j] * np.eye(self.cfg.M)
            precoders[j] = orthonormalize(linalg.solve(A, reverse[j], assume_a="pos"))
        return precoders

    def get_cost(self, precoders: np.ndarray, decoders: np.ndarray) -> float:
        """Sum MSE of all streams with the optimal (unconstrained) linear receivers."""
        p = self.cfg.p
        noise = sigma_id2_all(self.cfg)
        total = 0.0
        for k in range(self.cfg.K):
            received = np.einsum("jnm,jme->jne", self.ch.H[k], precoders)
            C = np.einsum("j,jne,jle->nl", p, received, received.conj()) + noise[k] * np.eye(self.cfg.N)
            desired = received[k]
            gain = desired.conj().T @ linalg.solve(C, desired, assume_a="pos")
            total += float(np.real(p[k] * self.cfg.d - p[k] ** 2 * np.trace(gain)))
        return total


def solve_mmse(
    cfg: SystemConfig,
    ch: ChannelSet,
    rng_seed: SeedLike = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    initialize_with: InitMode = "random",
    raise_on_failure: bool = False,
) -> IASolution:
    """MMSE-based IA transceivers; decoders are the orthonormalized MMSE filters."""
    require_feasible(cfg)
    solver = MMSEIASolver(
        cfg,
        ch,
        rng_seed=rng_seed,
        max_iters=max_iters,
        tol=tol,
        initialize_with=initialize_with,
        raise_on_failure=raise_on_failure,
    )
    solution = solver.solve()
    logger.debug(f"mmse IA: {solution.iterations} sweeps, leakage {solution.leakage:.3e}")
    return solution
