"""
Closed-form subspace IA for three users with square channels.
"""

import logging

import numpy as np
from scipy import linalg

from swipt_balance.errors import DimensionError, SingularChannel
from swipt_balance.ia.base import IASolution, IASolverBase, interference_leakage
from swipt_balance.model import ChannelSet, SystemConfig
from swipt_balance.numerics import dominant_subspace, orthonormalize

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e8


class ClosedFormIASolver(IASolverBase):
    """
    Classic three-user construction.

    V_1 is spanned by d eigenvectors of
    E = H_31^{-1} H_32 H_12^{-1} H_13 H_23^{-1} H_21, the other precoders
    follow from V_1 so that interference aligns at every receiver.
    """

    name = "subspace3"

    def __init__(self, cfg: SystemConfig, ch: ChannelSet):
        if cfg.K != 3:
            raise DimensionError(f"closed-form subspace IA needs K = 3, got K = {cfg.K}")
        if cfg.M != cfg.N:
            raise DimensionError(f"closed-form subspace IA needs M = N, got {cfg.M}x{cfg.N}")
        if cfg.M < 2 * cfg.d:
            raise DimensionError(f"closed-form subspace IA needs M >= 2d, got M={cfg.M}, d={cfg.d}")
        super().__init__(cfg, ch)
        for k in range(3):
            for j in range(3):
                if k != j and np.linalg.cond(ch.H[k, j]) >= MAX_CONDITION:
                    raise SingularChannel(f"cross channel H[{k}][{j}] is numerically singular")

    def _calc_E(self) -> np.ndarray:
        H = self.ch.H
        return (
            linalg.solve(H[2, 0], H[2, 1])
            @ linalg.solve(H[0, 1], H[0, 2])
            @ linalg.solve(H[1, 2], H[1, 0])
        )

    def _update_precoders(self) -> np.ndarray:
        H = self.ch.H
        eigenvalues, eigenvectors = linalg.eig(self._calc_E())
        order = np.argsort(-np.abs(eigenvalues), kind="stable")
        V1 = orthonormalize(eigenvectors[:, order[: self.cfg.d]])
        V2 = orthonormalize(linalg.solve(H[2, 1], H[2, 0] @ V1))
        V3 = orthonormalize(linalg.solve(H[1, 2], H[1, 0] @ V1))
        return np.stack([V1, V2, V3])

    def _update_decoders(self, precoders: np.ndarray) -> np.ndarray:
        d = self.cfg.d
        decoders = []
        for k in range(3):
            interference = np.hstack([self.ch.H[k, j] @ precoders[j] for j in range(3) if j != k])
            left, _, _ = linalg.svd(interference)
            # complement of the aligned d-dimensional interference span
            complement = left[:, d:]
            desired = complement.conj().T @ self.ch.H[k, k] @ precoders[k]
            W = dominant_subspace(desired @ desired.conj().T, d)
            decoders.append(complement @ W)
        return np.stack(decoders)

    def solve(self) -> IASolution:
        V = self._update_precoders()
        U = self._update_decoders(V)
        return IASolution(
            precoders=V,
            decoders=U,
            leakage=interference_leakage(self.ch, V, U),
            iterations=0,
            converged=True,
            solver=self.name,
        )


def solve_subspace_3user(cfg: SystemConfig, ch: ChannelSet) -> IASolution:
    """Closed-form IA for (M x M, d)^3 systems."""
    solution = ClosedFormIASolver(cfg, ch).solve()
    logger.debug(f"subspace3 IA: leakage {solution.leakage:.3e}")
    return solution
