"""
Grassmannian geometry: chordal distance, CD decomposition of one orthonormal
matrix relative to another, prescribed-distance displacement and random
Grassmannian codebooks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from swipt_balance.errors import BadDistance, DimensionError, RankDeficient, TooLarge
from swipt_balance.numerics import (
    RANK_TOL,
    SeedLike,
    null_space,
    qr_positive,
    sample_grassmann_batch,
)

logger = logging.getLogger(__name__)

MAX_CODEBOOK_BITS = 16
DISTANCE_TOL = 1e-9

_HEADER_DTYPE = np.dtype("<i8")
_ENTRY_DTYPE = np.dtype("<c16")


def chordal_distance_sq(A: np.ndarray, B: np.ndarray) -> float:
    """Squared chordal distance d - ||A^H B||_F^2 between two orthonormal M x d matrices."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2:
        raise DimensionError(f"chordal distance needs equal M x d shapes, got {A.shape} and {B.shape}")
    d = A.shape[1]
    value = d - float(np.linalg.norm(A.conj().T @ B) ** 2)
    return float(np.clip(value, 0.0, d))


def projector_distance_sq(A: np.ndarray, B: np.ndarray) -> float:
    """The same distance written as 1/2 ||A A^H - B B^H||_F^2."""
    return 0.5 * float(np.linalg.norm(A @ A.conj().T - B @ B.conj().T) ** 2)


@dataclass(frozen=True)
class CDDecomposition:
    """
    target = base X Y + base_null S Z with X unitary, S orthonormal and
    Y, Z upper triangular with non-negative real diagonals.
    """

    X: np.ndarray
    Y: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    base: np.ndarray
    target: np.ndarray
    base_null: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.base @ self.X @ self.Y + self.base_null @ self.S @ self.Z

    @property
    def distance_sq(self) -> float:
        """tr(Z^H Z), equal to the chordal distance between target and base."""
        return float(np.real(np.trace(self.Z.conj().T @ self.Z)))


def _check_pair(target: np.ndarray, base: np.ndarray) -> Tuple[int, int]:
    if target.shape != base.shape or target.ndim != 2:
        raise DimensionError(f"target {target.shape} and base {base.shape} must both be M x d")
    M, d = base.shape
    if M < 2 * d:
        raise DimensionError(f"CD decomposition requires M >= 2d, got M={M}, d={d}")
    return M, d


def cd_decompose(
    target: np.ndarray,
    base: np.ndarray,
    strict: bool = False,
    base_null: Optional[np.ndarray] = None,
) -> CDDecomposition:
    """
    Decompose ``target`` relative to ``base``.

    X Y is the QR factorisation of base^H target and S Z the economic QR of
    base_null^H target, both with non-negative real diagonals. A singular
    base^H target (target touching the null space of base) keeps its zero
    diagonal entries in Y unless ``strict`` is set, in which case
    RankDeficient is raised.
    """
    target = np.asarray(target, dtype=complex)
    base = np.asarray(base, dtype=complex)
    _check_pair(target, base)
    if base_null is None:
        base_null = null_space(base)

    inner = base.conj().T @ target
    if strict and np.linalg.svd(inner, compute_uv=False)[-1] <= RANK_TOL:
        raise RankDeficient("base^H target is singular (maximal chordal distance)")
    X, Y = qr_positive(inner, allow_singular=True)
    S, Z = qr_positive(base_null.conj().T @ target, allow_singular=True)
    return CDDecomposition(X=X, Y=Y, S=S, Z=Z, base=base, target=target, base_null=base_null)


def displace(
    base: np.ndarray,
    z: float,
    X: np.ndarray,
    S: np.ndarray,
    sigma_z: np.ndarray,
    base_null: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Move ``base`` to a point at squared chordal distance ``z``.

    Returns base X Sigma_Y + base_null S Sigma_Z with
    Sigma_Y = (I - Sigma_Z^2)^(1/2). ``sigma_z`` is either the diagonal of
    Sigma_Z or the diagonal matrix itself.
    """
    base = np.asarray(base, dtype=complex)
    M, d = base.shape
    sigma_z = np.asarray(sigma_z, dtype=float)
    if sigma_z.ndim == 2:
        sigma_z = np.real(np.diag(sigma_z))
    if sigma_z.shape != (d,):
        raise DimensionError(f"Sigma_Z must carry {d} diagonal entries, got shape {sigma_z.shape}")
    if np.any(sigma_z < -DISTANCE_TOL) or np.any(sigma_z > 1.0 + DISTANCE_TOL):
        raise BadDistance("Sigma_Z entries must lie in [0, 1]")
    if abs(float(np.sum(sigma_z**2)) - z) > DISTANCE_TOL:
        raise BadDistance(f"trace(Sigma_Z^2) = {np.sum(sigma_z ** 2):.12g} does not match z = {z:.12g}")
    if base_null is None:
        base_null = null_space(base)
    if S.shape != (M - d, d) or X.shape != (d, d):
        raise DimensionError(f"X must be {d}x{d} and S {(M - d)}x{d}, got {X.shape} and {S.shape}")
    sigma_z = np.clip(sigma_z, 0.0, 1.0)
    sigma_y = np.sqrt(1.0 - sigma_z**2)
    return base @ X * sigma_y + base_null @ S * sigma_z


@dataclass(frozen=True)
class Codebook:
    """Random Grassmannian codebook of 2^bits orthonormal M x d entries."""

    M: int
    d: int
    bits: int
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (2**self.bits, self.M, self.d):
            raise DimensionError(
                f"codebook entries have shape {self.entries.shape}, "
                f"expected {(2 ** self.bits, self.M, self.d)}"
            )

    def __len__(self) -> int:
        return self.entries.shape[0]

    def save(self, path: Union[str, Path]) -> Path:
        """Write header (M, d, bits as little-endian int64) then row-major complex128 entries."""
        path = Path(path)
        with open(path, "wb") as f:
            f.write(np.array([self.M, self.d, self.bits], dtype=_HEADER_DTYPE).tobytes())
            f.write(np.ascontiguousarray(self.entries, dtype=_ENTRY_DTYPE).tobytes())
        logger.info(f"Saved {len(self)}-entry codebook to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Codebook":
        raw = Path(path).read_bytes()
        header_size = 3 * _HEADER_DTYPE.itemsize
        M, d, bits = (int(v) for v in np.frombuffer(raw[:header_size], dtype=_HEADER_DTYPE))
        if bits > MAX_CODEBOOK_BITS:
            raise TooLarge(f"codebook file declares {bits} bits (cap {MAX_CODEBOOK_BITS})")
        entries = np.frombuffer(raw[header_size:], dtype=_ENTRY_DTYPE)
        if entries.size != (2**bits) * M * d:
            raise DimensionError(f"codebook file {path} is truncated or malformed")
        return cls(M=M, d=d, bits=bits, entries=entries.reshape(2**bits, M, d).astype(complex))


def build_codebook(M: int, d: int, bits: int, rng_seed: SeedLike = None) -> Codebook:
    """2^bits independent Haar-uniform Grassmannian points."""
    if bits < 0:
        raise DimensionError("codebook bits must be non-negative")
    if bits > MAX_CODEBOOK_BITS:
        raise TooLarge(f"codebook of {bits} bits exceeds the {MAX_CODEBOOK_BITS}-bit cap")
    entries = sample_grassmann_batch(2**bits, M, d, rng_seed)
    return Codebook(M=M, d=d, bits=bits, entries=entries)


def codebook_distances(target: np.ndarray, cb: Codebook) -> np.ndarray:
    """Squared chordal distance from ``target`` to every codebook entry."""
    target = np.asarray(target)
    if target.shape != (cb.M, cb.d):
        raise DimensionError(f"target shape {target.shape} does not match codebook {(cb.M, cb.d)}")
    overlap = np.einsum("imd,me->ide", cb.entries.conj(), target)
    return np.clip(cb.d - np.sum(np.abs(overlap) ** 2, axis=(1, 2)), 0.0, cb.d)


def quantize(target: np.ndarray, cb: Codebook) -> Tuple[int, np.ndarray]:
    """Index and entry of the closest codebook point (lowest index wins ties)."""
    index = int(np.argmin(codebook_distances(target, cb)))
    return index, cb.entries[index].copy()


def quantization_bound_proxy(M: int, d: int, bits: int) -> float:
    """Distortion scaling 2^(-b / (d (M - d))) of a b-bit codebook."""
    return float(2.0 ** (-bits / (d * (M - d))))
