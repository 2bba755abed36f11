import math

import numpy as np
import pytest
from scipy.special import iv

from cbnet.beamforming import (
    CbSelection,
    array_factor,
    cb_energy,
    received_power,
    sample_phase_errors,
)
from cbnet.config import NetworkConfig

CFG = NetworkConfig(node_count=10, mc_samples=1000)
BS3D = np.array([CFG.bs_x, CFG.bs_y, CFG.bs_height])


def _selection(k, center=(100.0, 100.0), spread=10.0, seed=0, sink_first=True):
    rng = np.random.default_rng(seed)
    pts = np.array(center) + rng.uniform(-spread, spread, size=(k, 2))
    return CbSelection(
        node_ids=list(range(k)),
        weights=np.ones(k),
        sink_id=0,
        positions=pts,
    )


class TestArrayFactor:
    def test_single_element(self):
        pos = np.array([[100.0, 100.0, 1.5]])
        af = array_factor(pos, np.ones(1), np.zeros(1), BS3D, CFG.wavelength_m)
        assert af == 1.0

    def test_perfect_coherence_at_target(self):
        rng = np.random.default_rng(1)
        pts = np.column_stack([
            100 + rng.uniform(-50, 50, 10),
            100 + rng.uniform(-50, 50, 10),
            np.full(10, 1.5),
        ])
        af = array_factor(pts, np.ones(10), np.zeros(10), BS3D, CFG.wavelength_m)
        assert af == 10.0

    def test_concentrated_errors_still_coherent(self):
        # expected coherence loss is n/(2*kappa), so the tolerance tracks it
        pos = np.column_stack([np.arange(10.0), np.zeros(10), np.full(10, 1.5)])
        for kappa, tol in ((1e6, 1e-3), (1e8, 1e-6)):
            errors = sample_phase_errors(10, kappa, seed=3)
            af = array_factor(pos, np.ones(10), errors, BS3D, CFG.wavelength_m)
            assert af == pytest.approx(10.0, abs=tol)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(2)
        pos = np.column_stack([rng.uniform(0, 200, 8), rng.uniform(0, 200, 8),
                               np.full(8, 1.5)])
        weights = rng.uniform(0, 1, 8)
        for kappa in (0.0, 1.0, 10.0):
            errors = sample_phase_errors(8, kappa, seed=rng.integers(2 ** 32))
            af = array_factor(pos, weights, errors, BS3D, CFG.wavelength_m)
            assert af <= weights.sum() + 1e-12

    def test_off_target_observation_loses_gain(self):
        pos = np.column_stack([np.linspace(50, 150, 10), np.full(10, 100.0),
                               np.full(10, 1.5)])
        side = np.array([1200.0, 100.0, 20.0])  # orthogonal direction
        af = array_factor(pos, np.ones(10), np.zeros(10), BS3D,
                          CFG.wavelength_m, observation=side)
        assert af < 10.0

    def test_empty_selection_rejected(self):
        with pytest.raises(ValueError):
            array_factor(np.zeros((0, 3)), np.ones(0), np.ones(0), BS3D, 0.125)


class TestPhaseErrors:
    def test_uniform_when_kappa_zero(self):
        draws = sample_phase_errors(10 ** 5, 0.0, seed=0)
        assert draws.min() >= -math.pi and draws.max() <= math.pi
        resultant = np.abs(np.exp(1j * draws).mean())
        assert resultant < 0.02

    def test_huge_kappa_concentrates(self):
        draws = sample_phase_errors(1000, 1e6, seed=1)
        assert np.abs(draws).max() < 0.01

    def test_bessel_ratio_oracle(self):
        draws = sample_phase_errors(10 ** 5, 10.0, seed=2)
        resultant = np.abs(np.exp(1j * draws).mean())
        expected = iv(1, 10.0) / iv(0, 10.0)
        assert resultant == pytest.approx(expected, abs=0.01)

    def test_expected_gain_monotone_in_kappa(self):
        # mean |AF| must not rise as synchronization degrades
        rng = np.random.default_rng(3)
        trials = 10 ** 4
        means = []
        for kappa in (20.0, 5.0, 1.0, 0.0):
            total = 0.0
            draws = sample_phase_errors(trials * 8, kappa,
                                        seed=rng.integers(2 ** 32))
            draws = draws.reshape(trials, 8)
            total = np.abs(np.exp(1j * draws).sum(axis=1))
            means.append((total.mean(), total.std() / math.sqrt(trials)))
        for (hi, se_hi), (lo, se_lo) in zip(means, means[1:]):
            assert hi > lo - 3 * (se_hi + se_lo)

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            sample_phase_errors(5, -1.0, seed=0)


class TestLinkBudget:
    def test_reference_budget_at_1100m(self):
        sel = _selection(10, spread=0.0)  # all at region center -> d = 1100
        budget = received_power(sel, CFG)
        assert budget.received_power_w == pytest.approx(6.15e-9, rel=1e-3)
        assert budget.received_power_dbm == pytest.approx(-52.1, abs=0.05)
        assert budget.distance_m == pytest.approx(1100.0)
        assert budget.snr_db == pytest.approx(71.9, abs=0.1)
        assert budget.rate_bps == pytest.approx(2.388e6, rel=1e-3)

    def test_n_squared_law_exact(self):
        budgets = {}
        for n in range(1, 17):
            sel = _selection(n, spread=0.0)
            budgets[n] = received_power(sel, CFG).received_power_w
        for n in range(1, 17):
            assert budgets[n] / budgets[1] == n * n

    def test_zero_weight_selection_fails_delivery(self):
        sel = _selection(10, spread=0.0)
        sel.weights = np.zeros(10)
        budget = received_power(sel, CFG)
        assert budget.received_power_w == 0.0
        assert not budget.delivered

    def test_inverse_fourth_power_distance(self):
        near = _selection(4, center=(100.0, 650.0), spread=0.0)   # d = 550
        far = _selection(4, center=(100.0, 100.0), spread=0.0)    # d = 1100
        p_near = received_power(near, CFG).received_power_w
        p_far = received_power(far, CFG).received_power_w
        assert p_near / p_far == pytest.approx(16.0, rel=1e-12)

    def test_pure_function(self):
        sel = _selection(6, seed=5)
        errors = sample_phase_errors(6, 10.0, seed=9)
        b1 = received_power(sel, CFG, errors)
        b2 = received_power(sel, CFG, errors)
        assert b1 == b2


class TestCbEnergy:
    def test_zero_weight_node_pays_nothing(self):
        sel = _selection(3, spread=0.0)
        sel.weights = np.array([1.0, 0.0, 1.0])
        per_node, total = cb_energy(sel, 1e6, 2.0e6, CFG)
        assert per_node[1] == 0.0
        assert total == pytest.approx(per_node[0] + per_node[2])

    def test_reference_arithmetic(self):
        sel = _selection(10, spread=0.0)
        rate = received_power(sel, CFG).rate_bps
        _, total = cb_energy(sel, 1e6, rate, CFG)
        assert total == pytest.approx(10 * 0.1 * (1e6 / rate), rel=1e-12)
        assert total == pytest.approx(0.4188, abs=5e-4)

    def test_linear_in_packet_size(self):
        sel = _selection(5, spread=0.0)
        _, full = cb_energy(sel, 2e6, 2.4e6, CFG)
        _, half = cb_energy(sel, 1e6, 2.4e6, CFG)
        assert full == pytest.approx(2 * half, rel=1e-12)

    def test_rejects_zero_rate(self):
        with pytest.raises(ValueError):
            cb_energy(_selection(2), 1e6, 0.0, CFG)
