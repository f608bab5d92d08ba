"""
Tests for the system model: configuration, feasibility, noise and channels.
"""

import unittest

import numpy as np
from pydantic import ValidationError

from swipt_balance.errors import DimensionError, InfeasibleSystem, SplitAllEnergy
from swipt_balance.model import (
    ChannelSet,
    SystemConfig,
    check_feasible,
    realize_channels,
    require_feasible,
    sigma_id2,
    stack_channels,
)


class TestSystemConfig(unittest.TestCase):
    """SystemConfig validation and helpers"""

    def test_scalars_broadcast_per_user(self):
        cfg = SystemConfig(M=5, N=5, d=2, K=3, P=10.0, rho=0.3)
        self.assertEqual(cfg.P, (10.0, 10.0, 10.0))
        self.assertEqual(cfg.rho, (0.3, 0.3, 0.3))
        np.testing.assert_allclose(cfg.p, [5.0, 5.0, 5.0])
        np.testing.assert_allclose(cfg.rho_bar, [0.7, 0.7, 0.7])

    def test_defaults(self):
        cfg = SystemConfig(M=4, N=4, d=2, K=3)
        self.assertEqual(cfg.rho, (0.5, 0.5, 0.5))
        self.assertEqual(cfg.zeta, 0.5)
        self.assertEqual(cfg.delta2, 0.1)
        self.assertEqual(cfg.feasibility, "proper")

    def test_range_violations(self):
        with self.assertRaises(ValidationError):
            SystemConfig(M=4, N=4, d=2, K=3, rho=1.5)
        with self.assertRaises(ValidationError):
            SystemConfig(M=4, N=4, d=2, K=3, P=0.0)
        with self.assertRaises(ValidationError):
            SystemConfig(M=4, N=4, d=2, K=3, zeta=1.0)
        with self.assertRaises(ValidationError):
            SystemConfig(M=4, N=4, d=2, K=3, sigma2=0.0)
        with self.assertRaises(ValidationError):
            SystemConfig(M=4, N=4, d=2, K=3, P=[1.0, 2.0])

    def test_with_snr_db(self):
        cfg = SystemConfig(M=5, N=5, d=2, K=3).with_snr_db(20.0)
        np.testing.assert_allclose(cfg.P, [100.0, 100.0, 100.0])

    def test_with_rho(self):
        cfg = SystemConfig(M=5, N=5, d=2, K=3).with_rho(0.2)
        self.assertEqual(cfg.rho, (0.2, 0.2, 0.2))
        with self.assertRaises(ValidationError):
            cfg.with_rho(-0.1)

    def test_grassmann_volume_factor(self):
        self.assertAlmostEqual(SystemConfig(M=5, N=5, d=2, K=3).M_d, 5.0 / 6.0)
        with self.assertRaises(DimensionError):
            _ = SystemConfig(M=2, N=2, d=2, K=1).M_d


class TestFeasibility(unittest.TestCase):
    """Feasibility gates"""

    def test_4x4_system_depends_on_gate(self):
        self.assertTrue(check_feasible(SystemConfig(M=4, N=4, d=2, K=3)))
        self.assertFalse(check_feasible(SystemConfig(M=4, N=4, d=2, K=3, feasibility="strict")))

    def test_5x5_system_feasible_under_both(self):
        self.assertTrue(check_feasible(SystemConfig(M=5, N=5, d=2, K=3)))
        self.assertTrue(check_feasible(SystemConfig(M=5, N=5, d=2, K=3, feasibility="strict")))

    def test_too_few_antennas(self):
        self.assertFalse(check_feasible(SystemConfig(M=2, N=2, d=2, K=3)))
        with self.assertRaises(InfeasibleSystem):
            require_feasible(SystemConfig(M=2, N=2, d=2, K=3))


class TestNoise(unittest.TestCase):
    """Information-decoding noise after the splitter"""

    def test_values(self):
        self.assertAlmostEqual(sigma_id2(SystemConfig(M=5, N=5, d=2, K=3, rho=0.5), 0), 1.2)
        self.assertAlmostEqual(sigma_id2(SystemConfig(M=5, N=5, d=2, K=3, rho=1.0), 1), 1.1)
        self.assertAlmostEqual(sigma_id2(SystemConfig(M=5, N=5, d=2, K=3, rho=0.3, delta2=0.0), 2), 1.0)

    def test_decreasing_in_rho(self):
        values = [sigma_id2(SystemConfig(M=5, N=5, d=2, K=1, rho=r), 0) for r in (0.1, 0.4, 0.7, 1.0)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))

    def test_all_energy_split_raises(self):
        with self.assertRaises(SplitAllEnergy):
            sigma_id2(SystemConfig(M=5, N=5, d=2, K=3, rho=0.0), 0)


class TestChannels(unittest.TestCase):
    """Channel realizations and energy Gram matrices"""

    def setUp(self):
        self.cfg = SystemConfig(M=4, N=4, d=2, K=3, rho=[0.2, 0.5, 0.9])

    def test_seeded_realization(self):
        a = realize_channels(self.cfg, 5)
        b = realize_channels(self.cfg, 5)
        np.testing.assert_array_equal(a.H, b.H)
        self.assertEqual(a.H.shape, (3, 3, 4, 4))
        self.assertEqual(a[1, 2].shape, (4, 4))

    def test_mean_frobenius_power(self):
        rng = np.random.default_rng(0)
        powers = [np.sum(np.abs(realize_channels(self.cfg, rng)[0, 1]) ** 2) for _ in range(1000)]
        self.assertAlmostEqual(float(np.mean(powers)) / 16.0, 1.0, delta=0.05)

    def test_bad_shape_rejected(self):
        with self.assertRaises(DimensionError):
            ChannelSet(np.zeros((2, 3, 4, 4), dtype=complex))

    def test_gram_matches_brute_force(self):
        ch = realize_channels(self.cfg, 3)
        stacked = stack_channels(self.cfg, ch)
        for j in range(3):
            expected = sum(self.cfg.rho_bar[k] * ch[k, j].conj().T @ ch[k, j] for k in range(3))
            np.testing.assert_allclose(stacked.grams[j], expected, atol=1e-10)
            np.testing.assert_allclose(stacked.stacks[j].conj().T @ stacked.stacks[j], expected, atol=1e-10)
            np.testing.assert_allclose(stacked.grams[j], stacked.grams[j].conj().T, atol=1e-12)

    def test_no_energy_branch_gives_zero_gram(self):
        cfg = self.cfg.with_rho(1.0)
        stacked = stack_channels(cfg, realize_channels(cfg, 1))
        np.testing.assert_allclose(stacked.grams, 0.0)

    def test_scalar_channel(self):
        cfg = SystemConfig(M=1, N=1, d=1, K=1, rho=0.0)
        stacked = stack_channels(cfg, ChannelSet(np.full((1, 1, 1, 1), 2.0 + 0j)))
        self.assertAlmostEqual(float(np.real(stacked.grams[0, 0, 0])), 4.0)

    def test_gram_monotone_in_energy_share(self):
        ch = realize_channels(self.cfg, 8)
        low = stack_channels(self.cfg, ch).grams
        high = stack_channels(self.cfg.with_rho([0.1, 0.5, 0.9]), ch).grams
        for j in range(3):
            self.assertGreaterEqual(np.linalg.eigvalsh(high[j] - low[j]).min(), -1e-10)

    def test_energy_form(self):
        ch = realize_channels(self.cfg, 4)
        stacked = stack_channels(self.cfg, ch)
        V = np.eye(4)[:, :2]
        expected = sum(self.cfg.rho_bar[k] * np.sum(np.abs(ch[k, 0] @ V) ** 2) for k in range(3))
        self.assertAlmostEqual(stacked.energy_form(0, V), expected, places=10)


if __name__ == "__main__":
    unittest.main()
