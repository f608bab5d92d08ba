"""
Tests for chordal distances, CD decomposition, displacement and codebooks.
"""

import tempfile
import unittest
from pathlib import Path

import numpy as np

from swipt_balance.errors import BadDistance, DimensionError, RankDeficient, TooLarge
from swipt_balance.grassmann import (
    Codebook,
    build_codebook,
    cd_decompose,
    chordal_distance_sq,
    codebook_distances,
    displace,
    projector_distance_sq,
    quantization_bound_proxy,
    quantize,
)
from swipt_balance.ia import random_unitary
from swipt_balance.numerics import is_orthonormal, null_space, sample_grassmann


class TestChordalDistance(unittest.TestCase):
    """Squared chordal distance"""

    def test_examples(self):
        e1 = np.array([[1.0], [0.0]])
        e2 = np.array([[0.0], [1.0]])
        diag = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
        V = sample_grassmann(4, 2, 1)
        self.assertAlmostEqual(chordal_distance_sq(V, V), 0.0, places=12)
        self.assertAlmostEqual(chordal_distance_sq(e1, e2), 1.0)
        self.assertAlmostEqual(chordal_distance_sq(e1, diag), 0.5)

    def test_definitions_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            A = sample_grassmann(5, 2, rng)
            B = sample_grassmann(5, 2, rng)
            self.assertAlmostEqual(chordal_distance_sq(A, B), projector_distance_sq(A, B), delta=1e-9)
            self.assertAlmostEqual(chordal_distance_sq(A, B), chordal_distance_sq(B, A), delta=1e-12)

    def test_invariant_under_rotation(self):
        A = sample_grassmann(5, 2, 4)
        B = sample_grassmann(5, 2, 5)
        R = random_unitary(2, 6)
        self.assertAlmostEqual(chordal_distance_sq(A @ R, B), chordal_distance_sq(A, B), delta=1e-12)
        self.assertAlmostEqual(chordal_distance_sq(A, A @ R), 0.0, delta=1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            chordal_distance_sq(np.eye(4)[:, :2], np.eye(5)[:, :2])


class TestCDDecomposition(unittest.TestCase):
    """Decomposition of one orthonormal matrix relative to another"""

    def _check(self, target, base):
        cd = cd_decompose(target, base)
        d = base.shape[1]
        self.assertLess(np.linalg.norm(cd.reconstruct() - target), 1e-9)
        self.assertAlmostEqual(cd.distance_sq, chordal_distance_sq(target, base), delta=1e-9)
        gram = cd.Y.conj().T @ cd.Y + cd.Z.conj().T @ cd.Z
        self.assertLess(np.linalg.norm(gram - np.eye(d)), 1e-9)
        self.assertTrue(is_orthonormal(cd.X))
        self.assertTrue(is_orthonormal(cd.S))
        self.assertTrue(np.allclose(np.tril(cd.Y, -1), 0.0))
        self.assertTrue(np.allclose(np.tril(cd.Z, -1), 0.0))
        return cd

    def test_identical_matrices(self):
        base = sample_grassmann(5, 2, 7)
        cd = self._check(base, base)
        np.testing.assert_allclose(cd.X, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(cd.Y, np.eye(2), atol=1e-10)
        self.assertLess(np.linalg.norm(cd.Z), 1e-7)

    def test_random_pairs(self):
        rng = np.random.default_rng(8)
        for M, d in ((4, 2), (5, 2), (6, 3)):
            for _ in range(20):
                self._check(sample_grassmann(M, d, rng), sample_grassmann(M, d, rng))

    def test_maximal_distance(self):
        base = np.eye(4)[:, :2].astype(complex)
        target = np.eye(4)[:, 2:].astype(complex)
        cd = cd_decompose(target, base)
        np.testing.assert_allclose(cd.Y, 0.0, atol=1e-12)
        self.assertAlmostEqual(cd.distance_sq, 2.0)
        self.assertLess(np.linalg.norm(cd.reconstruct() - target), 1e-9)
        with self.assertRaises(RankDeficient):
            cd_decompose(target, base, strict=True)

    def test_needs_enough_antennas(self):
        with self.assertRaises(DimensionError):
            cd_decompose(sample_grassmann(3, 2, 1), sample_grassmann(3, 2, 2))


class TestDisplace(unittest.TestCase):
    """Displacement to a prescribed chordal distance"""

    def setUp(self):
        self.base = sample_grassmann(5, 2, 9)
        self.X = random_unitary(2, 10)
        self.S = sample_grassmann(3, 2, 11)

    def test_zero_distance_keeps_subspace(self):
        V = displace(self.base, 0.0, self.X, self.S, np.zeros(2))
        np.testing.assert_allclose(V, self.base @ self.X, atol=1e-12)

    def test_prescribed_distance(self):
        sigma_z = np.sqrt([0.3, 0.2])
        V = displace(self.base, 0.5, self.X, self.S, np.diag(sigma_z))
        self.assertTrue(is_orthonormal(V))
        self.assertAlmostEqual(chordal_distance_sq(V, self.base), 0.5, delta=1e-9)
        self.assertAlmostEqual(cd_decompose(V, self.base).distance_sq, 0.5, delta=1e-8)

    def test_scalar_case(self):
        base = np.array([[1.0], [0.0]])
        x = np.array([[1.0]])
        s = np.array([[1.0]])
        V = displace(base, 0.25, x, s, np.array([0.5]))
        n = null_space(base)
        np.testing.assert_allclose(V, np.sqrt(0.75) * base + 0.5 * n, atol=1e-12)
        self.assertAlmostEqual(chordal_distance_sq(V, base), 0.25)

    def test_full_displacement(self):
        V = displace(self.base, 2.0, self.X, self.S, np.ones(2))
        self.assertLess(np.linalg.norm(self.base.conj().T @ V), 1e-10)
        self.assertAlmostEqual(chordal_distance_sq(V, self.base), 2.0)

    def test_bad_distances(self):
        with self.assertRaises(BadDistance):
            displace(self.base, 0.5, self.X, self.S, np.array([0.1, 0.1]))
        with self.assertRaises(BadDistance):
            displace(self.base, 1.25, self.X, self.S, np.array([1.1, 0.2]))


class TestCodebook(unittest.TestCase):
    """Random Grassmannian codebooks"""

    def test_sizes(self):
        self.assertEqual(len(build_codebook(5, 2, 0, 1)), 1)
        cb = build_codebook(5, 2, 8, 2)
        self.assertEqual(len(cb), 256)
        self.assertTrue(all(is_orthonormal(entry) for entry in cb.entries))

    def test_seeded(self):
        np.testing.assert_array_equal(build_codebook(4, 2, 4, 3).entries, build_codebook(4, 2, 4, 3).entries)

    def test_too_large(self):
        with self.assertRaises(TooLarge):
            build_codebook(5, 2, 17, 1)

    def test_quantize_exact_entry(self):
        cb = build_codebook(5, 2, 6, 4)
        index, entry = quantize(cb.entries[5], cb)
        self.assertEqual(index, 5)
        self.assertAlmostEqual(chordal_distance_sq(entry, cb.entries[5]), 0.0, places=12)

    def test_quantize_two_lines(self):
        entries = np.array([[[1.0], [0.0]], [[0.0], [1.0]]], dtype=complex)
        cb = Codebook(M=2, d=1, bits=1, entries=entries)
        target = np.array([[0.9], [0.436]])
        target = target / np.linalg.norm(target)
        self.assertEqual(quantize(target, cb)[0], 0)

    def test_quantize_matches_exhaustive_scan(self):
        cb = build_codebook(5, 2, 8, 5)
        rng = np.random.default_rng(6)
        for _ in range(10):
            target = sample_grassmann(5, 2, rng)
            scan = [chordal_distance_sq(target, entry) for entry in cb.entries]
            index, _ = quantize(target, cb)
            self.assertEqual(index, int(np.argmin(scan)))

    def test_mean_quantization_distance(self):
        cb = build_codebook(5, 2, 8, 7)
        rng = np.random.default_rng(8)
        coarse = build_codebook(5, 2, 4, 7)
        targets = [sample_grassmann(5, 2, rng) for _ in range(500)]
        fine_mean = float(np.mean([codebook_distances(t, cb).min() for t in targets]))
        coarse_mean = float(np.mean([codebook_distances(t, coarse).min() for t in targets]))
        self.assertLess(fine_mean, coarse_mean)
        self.assertLess(coarse_mean, 1.2)
        self.assertGreater(quantization_bound_proxy(5, 2, 8), 0.0)

    def test_save_and_load(self):
        cb = build_codebook(4, 2, 3, 9)
        with tempfile.TemporaryDirectory() as tmp:
            path = cb.save(Path(tmp) / "codebook.bin")
            self.assertEqual(path.stat().st_size, 3 * 8 + 8 * 4 * 2 * 16)
            loaded = Codebook.load(path)
        self.assertEqual((loaded.M, loaded.d, loaded.bits), (4, 2, 3))
        np.testing.assert_array_equal(loaded.entries, cb.entries)


if __name__ == "__main__":
    unittest.main()
