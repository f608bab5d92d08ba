"""
Tests for the linear-algebra and sampling primitives.
"""

import unittest

import numpy as np

from swipt_balance.errors import DimensionError, NotHermitian, RankDeficient
from swipt_balance.numerics import (
    dominant_subspace,
    herm_eig,
    is_orthonormal,
    least_subspace,
    nearest_unitary,
    null_space,
    orthonormalize,
    qr_positive,
    sample_gaussian_matrix,
    sample_grassmann,
    sample_grassmann_batch,
    trial_seeds,
)


def _projector(Q):
    return Q @ Q.conj().T


class TestOrthonormalize(unittest.TestCase):
    """orthonormalize and the phase-fixed QR"""

    def test_identity_is_unchanged(self):
        np.testing.assert_allclose(orthonormalize(np.eye(3)), np.eye(3), atol=1e-12)

    def test_single_column_is_normalized(self):
        Q = orthonormalize(np.array([3.0, 4.0]))
        np.testing.assert_allclose(Q, np.array([[0.6], [0.8]]), atol=1e-12)

    def test_random_matrix_spans_same_space(self):
        A = sample_gaussian_matrix(4, 2, 3)
        Q = orthonormalize(A)
        self.assertLess(np.linalg.norm(Q.conj().T @ Q - np.eye(2)), 1e-10)
        self.assertLess(np.linalg.norm(_projector(Q) @ A - A), 1e-10)

    def test_triangular_diagonal_is_real_positive(self):
        A = sample_gaussian_matrix(5, 3, 11)
        Q, R = qr_positive(A)
        diag = np.diag(R)
        self.assertTrue(np.all(np.real(diag) > 0))
        np.testing.assert_allclose(np.imag(diag), 0.0, atol=1e-14)
        np.testing.assert_allclose(Q @ R, A, atol=1e-12)

    def test_deterministic(self):
        A = sample_gaussian_matrix(4, 2, 5)
        np.testing.assert_array_equal(orthonormalize(A), orthonormalize(A.copy()))

    def test_rank_deficient_raises(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with self.assertRaises(RankDeficient):
            orthonormalize(A)

    def test_singular_qr_allowed_on_request(self):
        A = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        with self.assertRaises(RankDeficient):
            qr_positive(A)
        Q, R = qr_positive(A, allow_singular=True)
        np.testing.assert_allclose(Q @ R, A, atol=1e-12)

    def test_wide_matrix_raises(self):
        with self.assertRaises(DimensionError):
            orthonormalize(np.ones((2, 3)))

    def test_nearest_unitary(self):
        B = sample_gaussian_matrix(3, 3, 8)
        U = nearest_unitary(B)
        self.assertTrue(is_orthonormal(U))
        np.testing.assert_allclose(nearest_unitary(U), U, atol=1e-10)


class TestHermEig(unittest.TestCase):
    """herm_eig ordering, reconstruction and input checks"""

    def test_diagonal_sorted_descending(self):
        result = herm_eig(np.diag([1.0, 4.0, 2.0]))
        np.testing.assert_allclose(result.eigenvalues, [4.0, 2.0, 1.0])

    def test_identity(self):
        result = herm_eig(np.eye(3))
        np.testing.assert_allclose(result.eigenvalues, [1.0, 1.0, 1.0])
        self.assertTrue(is_orthonormal(result.eigenvectors))

    def test_gram_matches_singular_values(self):
        H = sample_gaussian_matrix(4, 4, 1)
        result = herm_eig(H.conj().T @ H)
        s = np.linalg.svd(H, compute_uv=False)
        np.testing.assert_allclose(result.eigenvalues, s**2, rtol=1e-9)

    def test_reconstruction_on_seeded_psd(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            B = sample_gaussian_matrix(4, 3, rng)
            A = B @ B.conj().T
            result = herm_eig(A)
            self.assertLess(np.linalg.norm(result.reconstruct() - A), 1e-8 * np.linalg.norm(A))
            self.assertTrue(np.all(result.eigenvalues >= -1e-10))

    def test_non_hermitian_raises(self):
        with self.assertRaises(NotHermitian):
            herm_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_indefinite_raises(self):
        with self.assertRaises(NotHermitian):
            herm_eig(np.diag([1.0, -1.0]))

    def test_dominant_and_least_subspaces(self):
        A = np.diag([1.0, 5.0, 3.0, 0.5])
        top = dominant_subspace(A, 2)
        low = least_subspace(A, 2)
        np.testing.assert_allclose(_projector(top), np.diag([0.0, 1.0, 1.0, 0.0]), atol=1e-12)
        np.testing.assert_allclose(_projector(low), np.diag([1.0, 0.0, 0.0, 1.0]), atol=1e-12)
        self.assertAlmostEqual(abs(low[3, 0]), 1.0)


class TestNullSpace(unittest.TestCase):
    """null_space complements"""

    def test_first_columns_of_identity(self):
        N = null_space(np.eye(4)[:, :2])
        np.testing.assert_allclose(_projector(N), np.diag([0.0, 0.0, 1.0, 1.0]), atol=1e-12)

    def test_two_dimensional_complement(self):
        v = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
        N = null_space(v)
        w = np.array([[1.0], [-1.0]]) / np.sqrt(2.0)
        np.testing.assert_allclose(_projector(N), _projector(w), atol=1e-12)

    def test_completes_a_unitary(self):
        V = sample_grassmann(5, 2, 4)
        N = null_space(V)
        self.assertLess(np.linalg.norm(N.conj().T @ V), 1e-10)
        full = np.hstack([V, N])
        self.assertLess(np.linalg.norm(full.conj().T @ full - np.eye(5)), 1e-9)

    def test_square_input_raises(self):
        with self.assertRaises(DimensionError):
            null_space(np.eye(2))


class TestSampling(unittest.TestCase):
    """Seeded Gaussian and Grassmannian sampling"""

    def test_same_seed_same_matrix(self):
        np.testing.assert_array_equal(sample_gaussian_matrix(2, 2, 7), sample_gaussian_matrix(2, 2, 7))

    def test_different_seeds_differ(self):
        self.assertFalse(np.allclose(sample_gaussian_matrix(4, 4, 1), sample_gaussian_matrix(4, 4, 2)))

    def test_unit_variance(self):
        x = sample_gaussian_matrix(10_000, 1, 9).ravel()
        self.assertLess(abs(np.mean(x)), 0.05)
        self.assertAlmostEqual(np.mean(np.abs(x) ** 2), 1.0, delta=0.05)

    def test_bad_dimensions_raise(self):
        with self.assertRaises(DimensionError):
            sample_gaussian_matrix(0, 2, 1)
        with self.assertRaises(DimensionError):
            sample_grassmann(2, 3, 1)

    def test_grassmann_sample_is_orthonormal(self):
        Q = sample_grassmann(4, 2, 3)
        self.assertLess(np.linalg.norm(Q.conj().T @ Q - np.eye(2)), 1e-10)
        scalar = sample_grassmann(1, 1, 3)
        self.assertAlmostEqual(abs(scalar[0, 0]), 1.0)

    def test_mean_chordal_distance_of_uniform_lines(self):
        A = sample_grassmann_batch(10_000, 4, 1, 21)
        B = sample_grassmann_batch(10_000, 4, 1, 22)
        overlap = np.abs(np.einsum("tmd,tme->tde", A.conj(), B)) ** 2
        distances = 1.0 - overlap.sum(axis=(1, 2))
        self.assertAlmostEqual(float(np.mean(distances)), 0.75, delta=0.02)

    def test_batch_entries_are_orthonormal(self):
        batch = sample_grassmann_batch(20, 5, 2, 1)
        for Q in batch:
            self.assertTrue(is_orthonormal(Q, 1e-10))

    def test_trial_seeds_reproducible(self):
        self.assertEqual(trial_seeds(7, 5), trial_seeds(7, 5))
        self.assertNotEqual(trial_seeds(7, 5), trial_seeds(8, 5))


if __name__ == "__main__":
    unittest.main()
