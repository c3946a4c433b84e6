"""Per-interval decision engines: the threshold policy and the open-loop baseline.

The threshold policy is the closed-form optimum of one interval given the
solved value table: constant retail-rate consumption while generation is
scarce, constant sell-rate consumption while it is abundant, and exact
matching of total consumption plus charging to the available generation
in between (the net-zero zone). Charging lifts off zero only once the
remaining demand exceeds the interval's procrastination threshold.

The baseline ignores realized generation entirely: consumption sits at the
retail-rate surplus maximizer and charging follows a schedule fixed at
plug-in time (off-peak intervals in order, spilling to the latest on-peak
intervals only when off-peak capacity cannot finish in time).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalInvariantError
from .model import DpState, Period, ValidatedConfig, marginal_inverse
from .solver import ThresholdTable, ValueTable


class Zone(enum.Enum):
    NET_CONSUMPTION = "NetConsumption"
    NET_ZERO = "NetZero"
    NET_PRODUCTION = "NetProduction"


_ZONE_BY_CODE = {
    kernels.ZONE_CONSUMPTION: Zone.NET_CONSUMPTION,
    kernels.ZONE_ZERO: Zone.NET_ZERO,
    kernels.ZONE_PRODUCTION: Zone.NET_PRODUCTION,
}


@dataclass(frozen=True)
class Decision:
    """One interval's decision: charge v, consumptions d, net consumption z."""

    v: float
    d: tuple[float, ...]
    z: float
    zone: Zone
    nu: float  # marginal price; the net-zero dual when zone is NET_ZERO


def zone_thresholds(
    t: int, y: float, thresholds: ThresholdTable, cfg: ValidatedConfig
) -> tuple[float, float]:
    """DER levels bounding the net-zero zone at state (t, y)."""
    tariff = cfg.tariff
    l_plus = sum(marginal_inverse(dev, tariff.pi_plus(t)) for dev in cfg.devices)
    l_minus = sum(marginal_inverse(dev, tariff.pi_minus(t)) for dev in cfg.devices)
    v_plus = min(cfg.v_bar, max(y - thresholds.tau[t], 0.0))
    v_minus = min(cfg.v_bar, max(y - thresholds.delta[t], 0.0))
    return l_plus + v_plus, l_minus + v_minus


def decide(
    state: DpState,
    thresholds: ThresholdTable,
    table: ValueTable,
    cfg: ValidatedConfig,
) -> Decision:
    """Optimal decision at one state under the threshold policy."""
    t = state.t
    if not 0 <= t < cfg.T:
        raise ValueError(f"t={t} outside horizon 0..{cfg.T - 1}")
    if state.y < 0 or state.r < 0:
        raise ValueError("state y and r must be nonnegative")
    tariff = cfg.tariff
    v, d, z, zone, nu = kernels.decide_batch(
        np.array([state.y]), np.array([state.r]),
        tariff.pi_plus(t), tariff.pi_minus(t),
        float(thresholds.tau[t]), float(thresholds.delta[t]),
        table.y_grid, table.slopes[t + 1],
        cfg.alpha, cfg.beta, cfg.d_bar, cfg.v_bar)
    if zone[0] == kernels.ZONE_ZERO and abs(z[0]) > 10 * kernels.BISECT_TOL_KWH:
        raise NumericalInvariantError(
            f"net-zero bisection failed to bracket at t={t}, y={state.y}, r={state.r} "
            f"(residual {z[0]:.3e}); thresholds and value table are inconsistent")
    return Decision(float(v[0]), tuple(d[0]), float(z[0]), _ZONE_BY_CODE[int(zone[0])], float(nu[0]))


def baseline_charge_plan(t: int, y: float, cfg: ValidatedConfig) -> np.ndarray:
    """Remaining open-loop charge schedule from interval t with demand y.

    Off-peak intervals are filled chronologically; any shortfall spills to
    on-peak intervals latest-first. Recomputing the tail of the plan at a
    later interval reproduces the original schedule, so the policy can be
    stated per state.
    """
    T, v_bar = cfg.T, cfg.v_bar
    periods = cfg.tariff.period_of
    plan = np.zeros(T - t)
    remaining = y
    for u in range(t, T):
        if periods[u] is not Period.ON:
            amount = min(v_bar, remaining)
            plan[u - t] = amount
            remaining -= amount
    if remaining > 0:
        for u in range(T - 1, t - 1, -1):
            if periods[u] is Period.ON:
                amount = min(v_bar, remaining)
                plan[u - t] = amount
                remaining -= amount
                if remaining <= 0:
                    break
    return plan


def baseline_decide(state: DpState, cfg: ValidatedConfig) -> Decision:
    """Renewable-independent open-loop decision at one state."""
    t = state.t
    if not 0 <= t < cfg.T:
        raise ValueError(f"t={t} outside horizon 0..{cfg.T - 1}")
    tariff = cfg.tariff
    pi_p = tariff.pi_plus(t)
    v = float(baseline_charge_plan(t, state.y, cfg)[0])
    d = tuple(marginal_inverse(dev, pi_p) for dev in cfg.devices)
    z = v + sum(d) - state.r
    if z > 0:
        zone, nu = Zone.NET_CONSUMPTION, pi_p
    elif z < 0:
        zone, nu = Zone.NET_PRODUCTION, tariff.pi_minus(t)
    else:
        zone, nu = Zone.NET_ZERO, pi_p
    return Decision(v, d, z, zone, nu)
