"""
Tests for max-EH precoding, distance thresholds, balanced precoders and the
energy bounds.
"""

import unittest

import numpy as np
from scipy import linalg

from swipt_balance.errors import AllPowerToID, BadZ, DegenerateK
from swipt_balance.grassmann import chordal_distance_sq
from swipt_balance.ia import solve_subspace_3user
from swipt_balance.metrics import harvested_energy
from swipt_balance.model import ChannelSet, SystemConfig, realize_channels, stack_channels
from swipt_balance.numerics import is_orthonormal, nearest_unitary, sample_grassmann_batch
from swipt_balance.swipt import (
    _UserProblem,
    _x_step,
    balanced_precoders_iterative,
    balanced_precoders_noniterative,
    design_z,
    energy_bounds,
    expected_energy_bounds,
    max_eh_precoders,
    z_bar,
    z_eh,
)


def _instance(seed, M=5):
    cfg = SystemConfig(M=M, N=M, d=2, K=3).with_snr_db(25.0)
    ch = realize_channels(cfg, seed)
    return cfg, ch, solve_subspace_3user(cfg, ch)


def _lower_energy(G, V, z):
    """(1 - z/d) tr(V^H G V) + (z/d) times the energy of the d null directions V coupled to."""
    d = V.shape[1]
    Vn = linalg.null_space(V.conj().T)
    Q = Vn @ linalg.orth(Vn.conj().T @ G @ V)
    ratio = z / d
    return (1.0 - ratio) * np.real(np.trace(V.conj().T @ G @ V)) + ratio * np.real(np.trace(Q.conj().T @ G @ Q))


class TestMaxEH(unittest.TestCase):
    """Energy-maximizing precoders"""

    def test_diagonal_single_user(self):
        cfg = SystemConfig(M=2, N=2, d=1, K=1, rho=0.0, zeta=0.5, P=2.0)
        ch = ChannelSet(np.diag([2.0, 1.0]).astype(complex)[None, None])
        eh = max_eh_precoders(cfg, ch)
        self.assertAlmostEqual(abs(eh.precoders[0, 0, 0]), 1.0)
        self.assertAlmostEqual(eh.max_energy, 0.5 * 2.0 * 4.0)

    def test_isotropic_gram(self):
        cfg = SystemConfig(M=3, N=3, d=2, K=1, rho=0.0, P=1.0)
        eh = max_eh_precoders(cfg, ChannelSet(np.eye(3, dtype=complex)[None, None]))
        self.assertAlmostEqual(eh.max_energy, cfg.zeta * 2 * 1.0 / 2)

    def test_energy_matches_eigen_sum(self):
        cfg, ch, _ = _instance(1)
        eh = max_eh_precoders(cfg, ch)
        energy = float(np.sum(harvested_energy(cfg, ch, eh.precoders)))
        self.assertAlmostEqual(energy / eh.max_energy, 1.0, delta=1e-8)
        for j in range(3):
            self.assertTrue(is_orthonormal(eh.precoders[j]))

    def test_beats_random_search(self):
        cfg, ch, _ = _instance(2)
        eh = max_eh_precoders(cfg, ch)
        best = 0.0
        for batch in range(10):
            candidates = sample_grassmann_batch(1000, 5, 2, 100 + batch)
            for V in candidates[: 1000 // 3 * 3].reshape(-1, 3, 5, 2):
                best = max(best, float(np.sum(harvested_energy(cfg, ch, V))))
        self.assertLessEqual(best, eh.max_energy * (1.0 + 1e-12))

    def test_no_harvesting_branch(self):
        cfg = SystemConfig(M=4, N=4, d=2, K=3, rho=1.0)
        with self.assertRaises(AllPowerToID):
            max_eh_precoders(cfg, realize_channels(cfg, 3))


class TestThresholds(unittest.TestCase):
    """z_EH, z_bar and the constant-rate-loss design"""

    def test_z_eh_extremes(self):
        cfg, ch, ia = _instance(4)
        eh = max_eh_precoders(cfg, ch)
        values = z_eh(ia, eh)
        for j in range(3):
            self.assertEqual(values[j], chordal_distance_sq(ia.precoders[j], eh.precoders[j]))
            self.assertTrue(0.0 <= values[j] <= 2.0)
        np.testing.assert_allclose(z_eh(eh.precoders, eh), 0.0, atol=1e-12)

    def test_z_bar_arithmetic(self):
        cfg = SystemConfig(M=5, N=5, d=2, K=3, delta2=0.0)
        self.assertAlmostEqual(z_bar(cfg, 2.0, P=100.0), 0.006)
        self.assertAlmostEqual(z_bar(cfg, 2.0, P=200.0), 0.003)
        self.assertAlmostEqual(z_bar(cfg, 1.0, P=100.0), 0.0)

    def test_z_bar_errors(self):
        cfg = SystemConfig(M=5, N=5, d=2, K=3)
        with self.assertRaises(DegenerateK):
            z_bar(cfg, 2.0, K=1)
        with self.assertRaises(BadZ):
            z_bar(cfg, 0.5)

    def test_design_z_is_capped(self):
        cfg, ch, ia = _instance(5)
        eh = max_eh_precoders(cfg, ch)
        design = design_z(cfg, ia, eh, c=1e9)
        np.testing.assert_allclose(design, z_eh(ia, eh))


class TestBalancedIterative(unittest.TestCase):
    """Iterative balanced design"""

    def test_zero_distance_keeps_ia_subspace(self):
        cfg, ch, ia = _instance(6)
        result = balanced_precoders_iterative(cfg, ch, ia, 0.0)
        for j in range(3):
            self.assertLess(chordal_distance_sq(ia.precoders[j], result.precoders[j]), 1e-9)
        e_ia = np.sum(harvested_energy(cfg, ch, ia.precoders))
        e_bal = np.sum(harvested_energy(cfg, ch, result.precoders))
        self.assertAlmostEqual(e_bal / e_ia, 1.0, delta=1e-9)

    def test_beyond_threshold_returns_max_eh(self):
        cfg, ch, ia = _instance(7)
        eh = max_eh_precoders(cfg, ch)
        targets = z_eh(ia, eh) + 0.1
        result = balanced_precoders_iterative(cfg, ch, ia, targets, eh=eh)
        self.assertEqual(result.used_max_eh, [True, True, True])
        np.testing.assert_array_equal(result.precoders, eh.precoders)

    def test_trace_and_constraints(self):
        cfg, ch, ia = _instance(8)
        result = balanced_precoders_iterative(cfg, ch, ia, 0.1, max_iters=8, tol=1e-6)
        self.assertEqual(result.method, "icd")
        for j in range(3):
            self.assertTrue(is_orthonormal(result.precoders[j]))
            if result.used_max_eh[j]:
                continue
            trace = np.array(result.objective_trace[j])
            self.assertTrue(np.all(np.diff(trace) >= 0.0))
            self.assertLessEqual(result.per_user_z[j], 0.1 + 1e-8)
            self.assertGreaterEqual(result.cross_terms[j], -1e-12)
            X, Y, S, Z = result.components[j]
            self.assertTrue(is_orthonormal(X))
            self.assertAlmostEqual(float(np.sum(np.diag(Z) ** 2)), 0.1, delta=1e-9)

    def test_trace_values_are_recomputable(self):
        cfg, ch, ia = _instance(9)
        result = balanced_precoders_iterative(cfg, ch, ia, 0.2)
        stacked = stack_channels(cfg, ch)
        for j in range(3):
            if not result.used_max_eh[j]:
                final = stacked.energy_form(j, result.precoders[j])
                self.assertAlmostEqual(result.objective_trace[j][-1], final, delta=1e-9 * max(final, 1.0))

    def test_negative_target_rejected(self):
        cfg, ch, ia = _instance(11)
        with self.assertRaises(BadZ):
            balanced_precoders_iterative(cfg, ch, ia, -0.1)

    def test_every_user_takes_a_step(self):
        cfg, ch, ia = _instance(26)
        for z in (0.0, 0.1, 0.6):
            result = balanced_precoders_iterative(cfg, ch, ia, z, max_iters=5)
            for j in range(3):
                if result.used_max_eh[j]:
                    continue
                self.assertGreaterEqual(result.iterations[j], 1)
                self.assertEqual(len(result.objective_trace[j]), result.iterations[j] + 1)
                if not result.converged[j]:
                    self.assertEqual(result.iterations[j], 5)

    def test_infinite_tolerance_stops_after_one_step(self):
        cfg, ch, ia = _instance(27)
        eh = max_eh_precoders(cfg, ch)
        targets = np.minimum(0.2, z_eh(ia, eh))
        result = balanced_precoders_iterative(cfg, ch, ia, targets, tol=np.inf, eh=eh)
        self.assertEqual(result.iterations, [1, 1, 1])
        self.assertEqual(result.converged, [True, True, True])

    def test_tolerance_is_absolute_improvement(self):
        tol = 1e-6
        for seed in (28, 29, 30):
            cfg, ch, ia = _instance(seed)
            result = balanced_precoders_iterative(cfg, ch, ia, 0.3, max_iters=40, tol=tol)
            for j in range(3):
                if result.used_max_eh[j]:
                    continue
                steps = np.diff(result.objective_trace[j])
                self.assertTrue(np.all(steps >= 0.0))
                self.assertTrue(np.all(steps[:-1] > tol))
                if result.converged[j]:
                    self.assertLessEqual(steps[-1], tol)

    def test_starts_are_named(self):
        cfg, ch, ia = _instance(31)
        eh = max_eh_precoders(cfg, ch)
        targets = np.array(z_eh(ia, eh))
        targets[0] += 0.1
        targets[1:] = np.minimum(0.2, targets[1:])
        result = balanced_precoders_iterative(cfg, ch, ia, targets, eh=eh)
        self.assertEqual(result.starts[0], "max_eh")
        self.assertTrue(set(result.starts[1:]) <= {"uniform", "closed_form"})
        cd = balanced_precoders_noniterative(cfg, ch, ia, 0.2, eh=eh)
        self.assertTrue(set(cd.starts) <= {"uniform", "closed_form", "max_eh"})


class TestXStep(unittest.TestCase):
    """Unitary update of the iterative design"""

    def _problem(self, seed):
        cfg, ch, ia = _instance(seed)
        return _UserProblem.build(stack_channels(cfg, ch).grams[0], ia.precoders[0])

    def test_passes_never_lower_the_energy(self):
        problem = self._problem(32)
        sigma_z = np.sqrt(np.array([0.1, 0.3]))
        X = np.eye(2, dtype=complex)
        energy = problem.energy(X, sigma_z)
        for _ in range(4):
            X = _x_step(problem, X, sigma_z)
            self.assertTrue(is_orthonormal(X))
            updated = problem.energy(X, sigma_z)
            self.assertGreaterEqual(updated, energy - 1e-12 * abs(energy))
            energy = updated
        coupling = np.real(np.diag(X.conj().T @ problem.T))
        self.assertTrue(np.all(coupling >= 0.0))

    def test_without_quadratic_term_is_polar_of_coupling(self):
        problem = self._problem(33)
        problem.A = np.zeros_like(problem.A)
        sigma_z = np.sqrt(np.array([0.2, 0.4]))
        B = problem.T * (sigma_z * np.sqrt(1.0 - sigma_z**2))
        X = _x_step(problem, np.eye(2, dtype=complex), sigma_z)
        np.testing.assert_allclose(X, nearest_unitary(B), atol=1e-10)
        best = float(np.real(np.trace(X.conj().T @ B)))
        for Q in sample_grassmann_batch(200, 2, 2, 34):
            self.assertLessEqual(float(np.real(np.trace(Q.conj().T @ B))), best + 1e-12)


class TestBalancedNonIterative(unittest.TestCase):
    """Single-shot balanced design"""

    def test_zero_distance(self):
        cfg, ch, ia = _instance(12)
        result = balanced_precoders_noniterative(cfg, ch, ia, 0.0)
        self.assertEqual(result.method, "cd")
        for j in range(3):
            self.assertLess(chordal_distance_sq(ia.precoders[j], result.precoders[j]), 1e-9)

    def test_realized_distance_and_bounds(self):
        cfg, ch, ia = _instance(13)
        eh = max_eh_precoders(cfg, ch)
        z = min(0.1, float(z_eh(ia, eh).min()))
        cd = balanced_precoders_noniterative(cfg, ch, ia, z, eh=eh)
        for j in range(3):
            self.assertAlmostEqual(cd.per_user_z[j], z, delta=1e-8)
        lower, upper = energy_bounds(cfg, ch, ia, eh, z)
        energy = float(np.sum(harvested_energy(cfg, ch, cd.precoders)))
        self.assertLessEqual(energy, upper + 1e-8)
        self.assertLessEqual(lower, energy + 1e-8)

    def test_between_lower_bound_and_iterative_design(self):
        for M in (4, 5):
            for seed in range(40, 70):
                cfg, ch, ia = _instance(seed, M=M)
                eh = max_eh_precoders(cfg, ch)
                stacked = stack_channels(cfg, ch)
                for z in (0.05, 0.1, 0.4):
                    target = np.minimum(z, z_eh(ia, eh))
                    lowers = [_lower_energy(stacked.grams[j], ia.precoders[j], target[j]) for j in range(3)]
                    total, _ = energy_bounds(cfg, ch, ia, eh, target)
                    self.assertAlmostEqual(cfg.zeta * float(np.dot(cfg.p, lowers)), total, delta=1e-9 * total)
                    cd = balanced_precoders_noniterative(cfg, ch, ia, target, eh=eh)
                    icd = balanced_precoders_iterative(cfg, ch, ia, target, eh=eh)
                    for j in range(3):
                        if cd.used_max_eh[j]:
                            continue
                        lower = lowers[j]
                        e_cd = stacked.energy_form(j, cd.precoders[j])
                        e_icd = stacked.energy_form(j, icd.precoders[j])
                        msg = f"M={M} seed={seed} z={z} user={j}"
                        self.assertGreaterEqual(e_cd, lower * (1.0 - 1e-9) - 1e-9, msg)
                        self.assertLessEqual(e_cd, e_icd * (1.0 + 1e-9) + 1e-9, msg)


class TestEnergyBounds(unittest.TestCase):
    """Energy sandwich of the balanced design"""

    def test_sandwich(self):
        for seed in range(14, 24):
            cfg, ch, ia = _instance(seed)
            eh = max_eh_precoders(cfg, ch)
            for z in (0.0, 0.05, 0.2, 0.5):
                target = np.minimum(z, z_eh(ia, eh))
                lower, upper = energy_bounds(cfg, ch, ia, eh, target)
                result = balanced_precoders_iterative(cfg, ch, ia, target, eh=eh)
                energy = float(np.sum(harvested_energy(cfg, ch, result.precoders)))
                self.assertLessEqual(lower, energy + 1e-8)
                self.assertLessEqual(energy, upper + 1e-8)

    def test_zero_distance_lower_bound_is_ia_energy(self):
        cfg, ch, ia = _instance(24)
        eh = max_eh_precoders(cfg, ch)
        lower, _ = energy_bounds(cfg, ch, ia, eh, 0.0)
        self.assertAlmostEqual(lower, float(np.sum(harvested_energy(cfg, ch, ia.precoders))), delta=1e-9 * lower)

    def test_target_beyond_threshold_rejected(self):
        cfg, ch, ia = _instance(25)
        eh = max_eh_precoders(cfg, ch)
        with self.assertRaises(BadZ):
            energy_bounds(cfg, ch, ia, eh, z_eh(ia, eh) + 0.01)

    def test_expected_energy_reference(self):
        cfg = SystemConfig(M=4, N=4, d=2, K=3, P=2.0)
        low, high = expected_energy_bounds(cfg)
        self.assertAlmostEqual(low, 0.5 * 0.5 * 3 * 4 * 6.0)
        self.assertGreater(high, 0.0)


if __name__ == "__main__":
    unittest.main()
