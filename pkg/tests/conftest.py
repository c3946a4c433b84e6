"""Shared fixtures and deterministic instance generators."""

from __future__ import annotations

import numpy as np
import pytest

from nemcharge import kernels
from nemcharge.model import (
    ChargerModel,
    DerModel,
    DeviceModel,
    Period,
    TariffSchedule,
    ValidatedConfig,
    validate,
)


def make_tariff(periods, pi_on_plus=0.5, pi_on_minus=0.15, pi_off_plus=0.3,
                pi_off_minus=0.1, gamma=1.0, **kw) -> TariffSchedule:
    return TariffSchedule(horizon_T=len(periods), period_of=tuple(periods),
                          pi_on_plus=pi_on_plus, pi_on_minus=pi_on_minus,
                          pi_off_plus=pi_off_plus, pi_off_minus=pi_off_minus,
                          gamma=gamma, **kw)


def single_device_config(periods, mu=0.0, sigma=0.0, v_bar=2.0,
                         alpha=1.0, beta=0.5, d_bar=3.0, **tariff_kw) -> ValidatedConfig:
    """Deterministic-DER-by-default config with one quadratic device."""
    T = len(periods)
    mu_seq = (mu,) * T if np.isscalar(mu) else tuple(mu)
    sg_seq = (sigma,) * T if np.isscalar(sigma) else tuple(sigma)
    return validate(make_tariff(periods, **tariff_kw), ChargerModel(v_bar=v_bar),
                    (DeviceModel(alpha, beta, d_bar),), DerModel(mu_seq, sg_seq))


def random_instance(rng: np.random.Generator, T_range=(3, 6), n_devices=1,
                    v_bar_range=(0.6, 1.4), der_scale=1.0) -> ValidatedConfig:
    """Random valid instance: contiguous random partition, A1-satisfying prices."""
    T = int(rng.integers(T_range[0], T_range[1] + 1))
    n1 = int(rng.integers(0, T + 1))
    n2 = int(rng.integers(0, T - n1 + 1))
    periods = (Period.OFF1,) * n1 + (Period.ON,) * n2 + (Period.OFF2,) * (T - n1 - n2)
    lo = rng.uniform(0.05, 0.15)
    steps = rng.uniform((0.05, 0.1, 0.05), (0.2, 0.25, 0.2))
    pi_off_m = lo
    pi_on_m = lo + steps[0]
    pi_off_p = pi_on_m + steps[1]
    pi_on_p = pi_off_p + steps[2]
    gamma = pi_on_p + rng.uniform(0.3, 0.8)
    tariff = make_tariff(periods, pi_on_plus=pi_on_p, pi_on_minus=pi_on_m,
                         pi_off_plus=pi_off_p, pi_off_minus=pi_off_m, gamma=gamma)
    v_bar = float(np.round(rng.uniform(*v_bar_range), 2))
    devices = tuple(
        DeviceModel(alpha=float(rng.uniform(0.9, 1.6)),
                    beta=float(rng.uniform(0.35, 0.8)),
                    d_bar=float(np.round(rng.uniform(1.0, 2.5), 2)))
        for _ in range(n_devices)
    )
    mu = tuple(float(rng.uniform(0.3, 2.2)) * der_scale for _ in range(T))
    sigma = tuple(float(rng.uniform(0.2, 0.9)) * der_scale for _ in range(T))
    return validate(tariff, ChargerModel(v_bar), devices, DerModel(mu, sigma))


@pytest.fixture(params=sorted(kernels.available_backends()))
def kernel_lane(request, monkeypatch):
    """Run the test under each available kernel lane (c and/or py)."""
    impl = kernels.available_backends()[request.param]
    monkeypatch.setattr(kernels, "decide_batch", impl.decide_batch)
    monkeypatch.setattr(kernels, "stage_values", impl.stage_values)
    monkeypatch.setattr(kernels, "slope_inverse", impl.slope_inverse)
    return request.param
