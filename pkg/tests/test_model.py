"""Model-layer validation, NEM payment, and marginal-inverse behavior."""

import numpy as np
import pytest

from conftest import make_tariff, single_device_config

from nemcharge.errors import ConfigError
from nemcharge.model import (
    ChargerModel,
    DerModel,
    DeviceModel,
    Period,
    marginal_inverse,
    nem_payment,
    validate,
)

OFF1, ON, OFF2 = Period.OFF1, Period.ON, Period.OFF2


def _config_pieces(**tariff_kw):
    tariff = make_tariff([OFF1, ON, OFF2], **tariff_kw)
    charger = ChargerModel(v_bar=3.6)
    devices = (DeviceModel(1.0, 0.5, 3.0),)
    der = DerModel((0.5,) * 3, (0.2,) * 3)
    return tariff, charger, devices, der


class TestValidate:
    def test_valid_price_chain_accepted(self):
        tariff, charger, devices, der = _config_pieces(
            pi_off_minus=0.05, pi_on_minus=0.10, pi_off_plus=0.30,
            pi_on_plus=0.50, gamma=1.00)
        cfg = validate(tariff, charger, devices, der)
        assert cfg.T == 3
        assert cfg.v_bar == 3.6

    def test_gamma_below_retail_rejected_by_name(self):
        tariff, charger, devices, der = _config_pieces(
            pi_off_minus=0.05, pi_on_minus=0.10, pi_off_plus=0.30,
            pi_on_plus=0.50, gamma=0.40)
        with pytest.raises(ConfigError, match="A1 violated: gamma ≤ pi_on_plus"):
            validate(tariff, charger, devices, der)

    def test_off_plus_above_on_plus_rejected(self):
        tariff, charger, devices, der = _config_pieces(
            pi_off_minus=0.05, pi_on_minus=0.10, pi_off_plus=0.60,
            pi_on_plus=0.50, gamma=1.0)
        with pytest.raises(ConfigError, match="A1 violated: pi_on_plus ≤ pi_off_plus"):
            validate(tariff, charger, devices, der)

    def test_negative_sigma_rejected(self):
        tariff, charger, devices, _ = _config_pieces()
        der = DerModel((0.5, 0.5, 0.5), (0.2, -0.1, 0.2))
        with pytest.raises(ConfigError, match="sigma must be nonnegative"):
            validate(tariff, charger, devices, der)

    def test_noncontiguous_partition_rejected(self):
        tariff = make_tariff([ON, OFF1, OFF2])
        _, charger, devices, der = _config_pieces()
        with pytest.raises(ConfigError, match="contiguous"):
            validate(tariff, charger, devices, der)

    def test_empty_segments_allowed(self):
        for periods in ([ON, ON, ON], [OFF1, OFF1, OFF1], [OFF2, OFF2, OFF2],
                        [OFF1, ON, ON], [ON, OFF2, OFF2]):
            tariff = make_tariff(periods)
            _, charger, devices, _ = _config_pieces()
            der = DerModel((0.5,) * 3, (0.2,) * 3)
            validate(tariff, charger, devices, der)

    def test_relaxed_a1_requires_flag_and_equal_rates(self):
        _, charger, devices, der = _config_pieces()
        relaxed = make_tariff([OFF1, ON, OFF2], pi_on_minus=0.5, pi_on_plus=0.5,
                              pi_off_minus=0.3, pi_off_plus=0.3, relaxed_a1=True)
        validate(relaxed, charger, devices, der)
        # same prices without the flag fail the strict chain
        strict = make_tariff([OFF1, ON, OFF2], pi_on_minus=0.5, pi_on_plus=0.5,
                             pi_off_minus=0.3, pi_off_plus=0.3)
        with pytest.raises(ConfigError, match="A1 violated"):
            validate(strict, charger, devices, der)

    def test_charger_and_device_invariants(self):
        tariff, charger, devices, der = _config_pieces()
        with pytest.raises(ConfigError, match="v_bar"):
            validate(tariff, ChargerModel(v_bar=0.0), devices, der)
        with pytest.raises(ConfigError, match="eta"):
            validate(tariff, ChargerModel(v_bar=1.0, eta=1.5), devices, der)
        with pytest.raises(ConfigError, match="beta"):
            validate(tariff, charger, (DeviceModel(1.0, 0.0, 1.0),), der)


class TestNemPayment:
    def test_import_billed_at_retail(self):
        assert nem_payment(2.0, 0.5, 0.1, 0.0) == pytest.approx(1.0)

    def test_export_credited_at_sell_rate(self):
        assert nem_payment(-2.0, 0.5, 0.1, 0.0) == pytest.approx(-0.2)

    def test_zero_net_pays_fixed_charge_only(self):
        assert nem_payment(0.0, 0.5, 0.1, 0.3) == pytest.approx(0.3)

    def test_piecewise_linear_convex_with_single_kink(self):
        z = np.linspace(-5, 5, 1001)
        pay = np.array([nem_payment(zi, 0.5, 0.1, 0.2) for zi in z])
        second = pay[2:] - 2 * pay[1:-1] + pay[:-2]
        assert np.all(second >= -1e-12)  # convex
        kinks = np.nonzero(second > 1e-9)[0]
        assert len(kinks) == 1
        assert abs(z[kinks[0] + 1]) < 1e-9  # kink at z = 0
        # continuity across the kink
        eps = 1e-9
        assert nem_payment(eps, 0.5, 0.1, 0.2) == pytest.approx(
            nem_payment(-eps, 0.5, 0.1, 0.2), abs=1e-8)


class TestMarginalInverse:
    def test_interior_inverse(self):
        assert marginal_inverse(DeviceModel(1.0, 0.5, 3.0), 0.5) == pytest.approx(1.0)

    def test_price_above_alpha_clamps_to_zero(self):
        assert marginal_inverse(DeviceModel(1.0, 0.5, 3.0), 1.2) == 0.0

    def test_clamps_to_cap(self):
        assert marginal_inverse(DeviceModel(1.0, 0.1, 3.0), 0.2) == 3.0

    def test_non_increasing_and_bounded(self):
        dev = DeviceModel(1.2, 0.4, 2.5)
        prices = np.linspace(0.0, 2.0, 200)
        values = [marginal_inverse(dev, p) for p in prices]
        assert all(0.0 <= v <= dev.d_bar for v in values)
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


class TestEtaRescaling:
    def test_rescaled_demand_matches_unit_efficiency_solve(self):
        """Solving with (eta, s_req) equals solving with (1, s_req / eta)."""
        from dataclasses import replace

        from nemcharge.config import default_day_config
        from nemcharge.sim import run_trials

        day = default_day_config()
        sim = replace(day.sim, n_trials=50, horizon_hours=4.0,
                      s_req_values_kwh=(6.0,))
        out_eta = run_trials(replace(day, eta=0.8), sim)
        sim_unit = replace(sim, s_req_values_kwh=(6.0 / 0.8,))
        out_unit = run_trials(replace(day, eta=1.0), sim_unit)
        np.testing.assert_allclose(out_eta.surplus_opt, out_unit.surplus_opt, rtol=1e-12)
        np.testing.assert_allclose(out_eta.surplus_base, out_unit.surplus_base, rtol=1e-12)
