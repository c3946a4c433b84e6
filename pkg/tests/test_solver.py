"""Backward induction, slope inversion, and threshold extraction."""

import numpy as np
import pytest
from scipy.special import ndtr

from conftest import random_instance, single_device_config

from nemcharge.errors import NumericalInvariantError
from nemcharge.model import Period
from nemcharge.solver import (
    StageValueFunction,
    backward_induction,
    expected_stage_value,
    extract_thresholds,
    invert_slope,
)

OFF1, ON, OFF2 = Period.OFF1, Period.ON, Period.OFF2


def _terminal(table):
    return StageValueFunction(table.y_grid, table.values[-1], table.slopes[-1])


class TestTerminalAndShape:
    def test_terminal_row_is_linear_penalty(self):
        cfg = single_device_config([ON, ON])
        table = backward_induction(cfg)
        np.testing.assert_allclose(table.values[-1], -cfg.tariff.gamma * table.y_grid)
        assert np.all(table.slopes[-1] == -cfg.tariff.gamma)

    def test_single_interval_slope_saturates_at_gamma(self):
        # For T = 1 the slope equals -gamma on [v_bar, inf).
        cfg = single_device_config([ON], v_bar=2.0)
        table = backward_induction(cfg, s_req_max=2 * cfg.v_bar)
        sat = table.y_grid[:-1] >= cfg.v_bar - 1e-12
        np.testing.assert_allclose(table.slopes[0][sat], -cfg.tariff.gamma, atol=1e-8)

    def test_values_non_increasing_in_demand(self):
        rng = np.random.default_rng(3)
        cfg = random_instance(rng)
        table = backward_induction(cfg)
        for t in range(cfg.T + 1):
            diffs = np.diff(table.values[t])
            assert np.all(diffs <= 1e-10), f"t={t}"
        assert table.values[0][0] >= table.values[0][-1]


class TestExpectedStageValue:
    def test_final_interval_consumption_only(self):
        # Deterministic r = 0, y = 0, single device (1, 0.5, 3), retail 0.5:
        # optimal d = 1, surplus U(1) - 0.5 = 0.25.
        cfg = single_device_config([ON], pi_on_plus=0.5)
        table = backward_induction(cfg, s_req_max=4.0)
        value = expected_stage_value(cfg, 0, 0.0, _terminal(table))
        assert value == pytest.approx(0.25, abs=1e-12)

    def test_final_interval_forced_charging(self):
        # y >= v_bar forces v = v_bar: previous case minus the purchase and penalty.
        cfg = single_device_config([ON], pi_on_plus=0.5, v_bar=2.0)
        table = backward_induction(cfg, s_req_max=4.0)
        y = 3.0
        value = expected_stage_value(cfg, 0, y, _terminal(table))
        expected = 0.25 - 0.5 * 2.0 - cfg.tariff.gamma * (y - 2.0)
        assert value == pytest.approx(expected, abs=1e-10)

    def test_matches_dense_integration_oracle(self):
        """Two-interval stochastic case against an independent discretized solve.

        Oracle: 0.01 kWh action lattice; the rectified-normal expectation by
        100k-node trapezoid plus the exact atom; the kinked bill handled by
        prefix/suffix maxima. Shares no code with the solver path.
        """
        vbar, gamma, pi_p, pi_m = 1.2, 1.0, 0.5, 0.15
        mu, sig = 2.0, 1.0
        cfg = single_device_config([ON, ON], mu=mu, sigma=sig, v_bar=vbar,
                                   pi_on_plus=pi_p, pi_on_minus=pi_m)
        table = backward_induction(cfg, s_req_max=2 * vbar, grid_points_per_vbar=80)
        got = expected_stage_value(
            cfg, 0, 1.8, StageValueFunction(table.y_grid, table.values[1], table.slopes[1]))

        step = 0.01
        dev = cfg.devices[0]
        dg = np.arange(int(round(dev.d_bar / step)) + 1) * step
        util = dev.alpha * dg - 0.5 * dev.beta * dg * dg

        def expect_max(bundle, s_grid):
            hi = mu + 8 * sig
            rn = np.linspace(0.0, hi, 100_001)
            w = np.exp(-0.5 * ((rn - mu) / sig) ** 2) / (sig * np.sqrt(2 * np.pi))
            w = w * np.gradient(rn)
            w[0] += ndtr(-mu / sig)
            w /= w.sum()
            suf = np.maximum.accumulate((bundle - pi_p * s_grid)[::-1])[::-1]
            pre = np.maximum.accumulate(bundle - pi_m * s_grid)
            idx = np.searchsorted(s_grid, rn, side="left")
            out = np.full(len(rn), -np.inf)
            ok = idx < len(s_grid)
            out[ok] = suf[idx[ok]] + pi_p * rn[ok]
            ok = idx > 0
            out[ok] = np.maximum(out[ok], pre[idx[ok] - 1] + pi_m * rn[ok])
            return float((w * out).sum())

        def stage_table(y, carry):
            nv = int(np.floor(min(vbar, y) / step + 1e-9)) + 1
            ns = nv + len(dg) - 1
            best = np.full(ns, -np.inf)
            for iv in range(nv):
                cand = util + carry(y - iv * step)
                best[iv:iv + len(dg)] = np.maximum(best[iv:iv + len(dg)], cand)
            return best, np.arange(ns) * step

        y0 = 1.8
        v_grid = np.arange(int(np.floor(min(vbar, y0) / step + 1e-9)) + 1) * step
        stage1 = np.empty(len(v_grid))
        for j, v in enumerate(v_grid):
            bundle, sg = stage_table(y0 - v, lambda yy: -gamma * yy)
            stage1[j] = expect_max(bundle, sg)
        bundle0, sg0 = stage_table(y0, lambda yy: np.interp(y0 - yy, v_grid, stage1))
        oracle_value = expect_max(bundle0, sg0)
        assert got == pytest.approx(oracle_value, abs=2e-3)


class TestBackwardInduction:
    def test_two_interval_offpeak_deterministic_is_linear(self):
        # r = 0 throughout: buy y kWh at the off-peak retail rate, constant
        # consumption surplus per interval.
        cfg = single_device_config([OFF1, OFF1], v_bar=2.0, pi_off_plus=0.3)
        table = backward_induction(cfg)
        l_star = (1.0 - 0.3) / 0.5
        surplus = (1.0 * l_star - 0.25 * l_star ** 2) - 0.3 * l_star
        mask = table.y_grid <= 2 * cfg.v_bar + 1e-12
        expected = 2 * surplus - 0.3 * table.y_grid[mask]
        np.testing.assert_allclose(table.values[0][mask], expected, atol=1e-9)

    def test_rows_pass_invariants_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            cfg = random_instance(rng)
            table = backward_induction(cfg)
            gamma = cfg.tariff.gamma
            stol = 1e-8 * max(1.0, gamma)
            for t in range(cfg.T):
                row = table.values[t]
                scale = max(1.0, np.max(np.abs(row)))
                second = row[2:] - 2 * row[1:-1] + row[:-2]
                assert second.max() <= 1e-8 * scale
                assert table.slopes[t].min() >= -gamma - stol
                assert table.slopes[t].max() <= -cfg.tariff.pi_off_minus + stol

    def test_concavity_failure_reported(self, monkeypatch):
        import nemcharge.solver as solver_mod

        cfg = single_device_config([ON, ON], mu=1.0, sigma=0.5)
        original = solver_mod.kernels.stage_values

        def corrupt(y_eval, *args, **kw):
            out = original(y_eval, *args, **kw)
            out = np.asarray(out).copy()
            if len(out) > 10:
                out[len(out) // 2] -= 1.0  # dent the row: breaks concavity
            return out

        monkeypatch.setattr(solver_mod.kernels, "stage_values", corrupt)
        with pytest.raises(NumericalInvariantError, match="concavity"):
            backward_induction(cfg)


class TestInvertSlope:
    def test_penalty_floor_maps_to_saturation_onset(self):
        cfg = single_device_config([ON, ON, ON], mu=1.0, sigma=0.5, v_bar=1.0)
        table = backward_induction(cfg)
        for t in range(cfg.T):
            onset = invert_slope(table, t, -cfg.tariff.gamma)
            assert onset <= (cfg.T - t) * cfg.v_bar + 1e-9

    def test_price_ceiling_maps_to_zero(self):
        cfg = single_device_config([ON, ON], mu=0.2, sigma=0.3)
        table = backward_induction(cfg)
        # every slope sits strictly below -pi_off_minus
        assert invert_slope(table, 0, -cfg.tariff.pi_off_minus) == 0.0

    def test_below_all_slopes_clamps_to_grid_end(self):
        cfg = single_device_config([ON, ON])
        table = backward_induction(cfg)
        assert invert_slope(table, 0, -10.0) == table.y_grid[-1]


class TestExtractThresholds:
    def test_last_interval_threshold_is_zero(self):
        # tau_{T-1} = 0, so the net-consumption charge is min(v_bar, y).
        rng = np.random.default_rng(5)
        cfg = random_instance(rng)
        table = backward_induction(cfg)
        thr = extract_thresholds(table, cfg.tariff)
        assert thr.tau[-1] == 0.0

    def test_all_onpeak_delta_zero(self):
        cfg = single_device_config([ON] * 4, mu=1.0, sigma=0.5)
        table = backward_induction(cfg)
        thr = extract_thresholds(table, cfg.tariff)
        np.testing.assert_array_equal(thr.delta, 0.0)

    def test_off1_recursion_within_one_step(self):
        cfg = single_device_config([OFF1] * 6 + [ON] * 3 + [OFF2],
                                   mu=1.2, sigma=0.6, v_bar=1.5)
        table = backward_induction(cfg)
        thr = extract_thresholds(table, cfg.tariff)
        assert thr.tau_recursion_residual <= table.grid_step + 1e-9
        diffs = np.diff(thr.tau[:6])
        np.testing.assert_allclose(diffs, -cfg.v_bar, atol=table.grid_step + 1e-9)

    def test_ordering_invariant(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            cfg = random_instance(rng)
            table = backward_induction(cfg)
            thr = extract_thresholds(table, cfg.tariff)
            upper = (cfg.T - 1 - np.arange(cfg.T)) * cfg.v_bar
            assert np.all(thr.delta <= thr.tau + 1e-12)
            assert np.all(thr.tau <= upper + 1e-9)
            assert np.all(thr.delta >= 0.0)

    def test_grid_refinement_moves_tau_at_most_one_coarse_step(self):
        cfg = single_device_config([OFF1] * 3 + [ON] * 2 + [OFF2],
                                   mu=1.0, sigma=0.5, v_bar=1.2)
        coarse = backward_induction(cfg, grid_points_per_vbar=40)
        fine = backward_induction(cfg, grid_points_per_vbar=80)
        tau_c = extract_thresholds(coarse, cfg.tariff).tau
        tau_f = extract_thresholds(fine, cfg.tariff).tau
        np.testing.assert_allclose(tau_c, tau_f, atol=coarse.grid_step + 1e-12)
