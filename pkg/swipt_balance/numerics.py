"""
Linear-algebra and sampling primitives shared by every other module.

All functions are pure: they never mutate their inputs and only draw random
numbers from the generator built from the seed they are handed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Union

import numpy as np
from scipy import linalg

from swipt_balance.errors import DimensionError, NotHermitian, RankDeficient

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.integer, np.random.SeedSequence, np.random.Generator, None]

ORTHO_TOL = 1e-10
RANK_TOL = 1e-12
HERMITIAN_TOL = 1e-8
PSD_TOL = 1e-10


@dataclass(frozen=True)
class EigenResult:
    """Eigen-decomposition of a Hermitian PSD matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        W = self.eigenvectors
        return (W * self.eigenvalues) @ W.conj().T


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` (generators pass through untouched)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_seeds(seed: int, n: int) -> List[int]:
    """Derive ``n`` independent 32-bit trial seeds from a master seed."""
    if n < 0:
        raise ValueError("n must be non-negative")
    state = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)
    return [int(s) for s in state]


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got array with shape {A.shape}")
    return A


def qr_positive(A, allow_singular: bool = False):
    """
    Economic QR factorisation with a real non-negative diagonal on R.

    The phase of each column of Q is rotated so that ``R[i, i] >= 0``. Columns
    whose diagonal entry is numerically zero keep the phase returned by
    LAPACK; with ``allow_singular=False`` such columns raise RankDeficient.
    """
    A = _as_matrix(A)
    rows, cols = A.shape
    if rows < cols:
        raise DimensionError(f"QR needs rows >= cols, got {A.shape}")
    Q, R = linalg.qr(A, mode="economic")
    diag = np.diag(R)
    scale = max(np.abs(diag).max(initial=0.0), np.linalg.norm(A, 2), 1e-300)
    phases = np.ones(cols, dtype=complex)
    nonzero = np.abs(diag) > RANK_TOL * scale
    if not allow_singular and not np.all(nonzero):
        raise RankDeficient("matrix is not of full column rank")
    phases[nonzero] = diag[nonzero] / np.abs(diag[nonzero])
    Q = Q * phases
    R = phases.conj()[:, None] * R
    # diagonal is real after the rotation; drop the round-off imaginary part
    R[np.diag_indices(cols)] = np.real(np.diag(R))
    return Q, R


def orthonormalize(A) -> np.ndarray:
    """
    Return the orthonormal factor of the QR decomposition of ``A``.

    Raises RankDeficient when the smallest singular value of ``A`` is below
    ``1e-12`` times the largest.
    """
    A = _as_matrix(A)
    if A.shape[0] < A.shape[1]:
        raise DimensionError(f"orthonormalize needs rows >= cols, got {A.shape}")
    s = linalg.svdvals(A)
    if s.size == 0 or s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(
            f"columns are linearly dependent (singular values {s[-1]:.3e} / {s[0] if s.size else 0.0:.3e})"
        )
    Q, _ = qr_positive(A)
    return Q


def nearest_unitary(B) -> np.ndarray:
    """Unitary polar factor of a square matrix (closest unitary in Frobenius norm)."""
    B = _as_matrix(B)
    if B.shape[0] != B.shape[1]:
        raise DimensionError(f"polar factor needs a square matrix, got {B.shape}")
    U, _ = linalg.polar(B)
    return U


def herm_eig(A) -> EigenResult:
    """
    Eigen-decomposition of a Hermitian positive semidefinite matrix.

    The input is symmetrised as ``(A + A^H)/2`` before decomposition. The
    eigenvalues come back in descending order.
    """
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"herm_eig needs a square matrix, got {A.shape}")
    norm = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > HERMITIAN_TOL * max(norm, 1e-300):
        raise NotHermitian("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    w, W = linalg.eigh(A)
    if w.size and w[0] < -PSD_TOL * max(1.0, norm):
        raise NotHermitian(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    order = np.argsort(w, kind="stable")[::-1]
    return EigenResult(eigenvalues=w[order], eigenvectors=W[:, order])


def dominant_subspace(A, d: int) -> np.ndarray:
    """Eigenvectors of the ``d`` largest eigenvalues of a Hermitian PSD matrix."""
    return herm_eig(A).eigenvectors[:, :d]


def least_subspace(A, d: int) -> np.ndarray:
    """Eigenvectors of the ``d`` smallest eigenvalues, least dominant first."""
    W = herm_eig(A).eigenvectors
    return W[:, ::-1][:, :d]


def null_space(V) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns of ``V``."""
    V = _as_matrix(V)
    M, d = V.shape
    if M <= d:
        raise DimensionError(f"null space needs M > d, got M={M}, d={d}")
    U, _, _ = linalg.svd(V, full_matrices=True)
    return U[:, d:]


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples of the given shape."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def sample_gaussian_matrix(rows: int, cols: int, rng_seed: SeedLike = None) -> np.ndarray:
    """``rows x cols`` matrix with i.i.d. CN(0, 1) entries."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return complex_normal(make_rng(rng_seed), (rows, cols))


def sample_grassmann(M: int, d: int, rng_seed: SeedLike = None) -> np.ndarray:
    """Haar-uniform point of the Grassmannian G(M, d) as an ``M x d`` orthonormal matrix."""
    if d < 1 or M < d:
        raise DimensionError(f"Grassmannian sample needs M >= d >= 1, got M={M}, d={d}")
    return orthonormalize(sample_gaussian_matrix(M, d, rng_seed))


def sample_grassmann_batch(count: int, M: int, d: int, rng_seed: SeedLike = None) -> np.ndarray:
    """``count`` independent Grassmannian samples stacked as ``(count, M, d)``."""
    if d < 1 or M < d:
        raise DimensionError(f"Grassmannian sample needs M >= d >= 1, got M={M}, d={d}")
    G = complex_normal(make_rng(rng_seed), (count, M, d))
    Q, R = np.linalg.qr(G)
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return Q * phases[:, None, :]


def is_orthonormal(Q, tol: float = 1e-9) -> bool:
    Q = _as_matrix(Q)
    return bool(np.linalg.norm(Q.conj().T @ Q - np.eye(Q.shape[1])) < tol)
