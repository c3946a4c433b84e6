"""Backward induction of the expected value function and the procrastination thresholds.

The expected value of remaining demand, V(t, y), is represented piecewise
linearly on a uniform demand grid whose step divides the charge cap, so
every kink location (multiple of the cap) is a grid point. Row T is the
terminal penalty -gamma*y with slope exactly -gamma. Each earlier row is
the quadrature expectation of the closed-form single-interval optimum
against the rectified-normal generation law.

Structural facts maintained (and checked) for every solved row:

* values are non-increasing and concave in y;
* every right-segment slope lies in [-gamma, -pi_off_minus];
* the slope equals -gamma once the remaining demand can no longer be
  completed, i.e. for y >= (T - t) * v_bar.

Thresholds: tau (grid-purchase) and delta (DER-allocation) per interval.
In the on-peak and trailing off-peak periods tau_t = (T-t-1)*v_bar in
closed form; in the leading off-peak period tau_t is read off the next
stage's slope field at the off-peak retail rate. delta_t is zero except
in an on-peak period followed by a nonempty trailing off-peak, where it
is read off at the on-peak sell rate. Within a period the thresholds obey
tau_t = tau_{t+1} + v_bar and delta_t = delta_{t+1}; the solver computes
each interval independently and records the worst recursion residual.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._fmt import fmt9
from .dists import DEFAULT_QUAD_NODES, rectified_normal_quadrature
from .errors import NumericalInvariantError
from .model import Period, TariffSchedule, ValidatedConfig

DEFAULT_GRID_POINTS_PER_VBAR = 40

#: relative tolerance for concavity / slope-bound / saturation checks
INVARIANT_RTOL = 1e-8


@dataclass(frozen=True)
class StageValueFunction:
    """One row of the value table: piecewise-linear V(t, .) on the demand grid."""

    y_grid: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __call__(self, y: float | np.ndarray) -> float | np.ndarray:
        return np.interp(np.clip(y, 0.0, self.y_grid[-1]), self.y_grid, self.values)


@dataclass(frozen=True)
class ValueTable:
    """Expected value functions for t = 0..T; row T is the terminal penalty."""

    y_grid: np.ndarray          # (m,) strictly increasing, uniform
    values: np.ndarray          # (T+1, m)
    slopes: np.ndarray          # (T+1, m-1) right-segment slopes
    v_bar: float
    gamma: float

    @property
    def horizon_T(self) -> int:
        return self.values.shape[0] - 1

    @property
    def grid_step(self) -> float:
        return float(self.y_grid[1] - self.y_grid[0])

    def stage(self, t: int) -> StageValueFunction:
        return StageValueFunction(self.y_grid, self.values[t], self.slopes[t])

    def value_at(self, t: int, y: float) -> float:
        return float(np.interp(np.clip(y, 0.0, self.y_grid[-1]), self.y_grid, self.values[t]))


@dataclass(frozen=True)
class ThresholdTable:
    """Per-interval procrastination thresholds and their recursion residuals."""

    tau: np.ndarray             # (T,) grid-purchase threshold, kWh
    delta: np.ndarray           # (T,) DER-allocation threshold, kWh
    grid_step: float
    tau_recursion_residual: float
    delta_recursion_residual: float


def invert_slope(table: ValueTable, t: int, p: float) -> float:
    """Largest demand still worth holding at marginal value p (slope inverse).

    For interior p this is the right end of the last segment whose slope
    is still >= p (flat runs at exactly p resolve to their right edge,
    minimizing downstream charge amounts); p above every slope maps to 0,
    p below every slope maps to the last grid point. At p = -gamma the
    saturated tail would make the maximal selection useless, so the onset
    of the -gamma region is returned instead.
    """
    return float(kernels.slope_inverse(table.y_grid, table.slopes[t], float(p),
                                       floor=-table.gamma))


def expected_stage_value(
    cfg: ValidatedConfig,
    t: int,
    y: float,
    value_next: StageValueFunction,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> float:
    """Expectation over this interval's DER of the optimal stage reward plus carry-over.

    ``value_next`` must be concave and non-increasing; the closed-form
    decision logic relies on both.
    """
    tariff = cfg.tariff
    pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
    nodes, weights = rectified_normal_quadrature(cfg.der.mu[t], cfg.der.sigma[t], quad_nodes)
    tau = kernels.slope_inverse(value_next.y_grid, value_next.slopes, -pi_p,
                                floor=-tariff.gamma)
    delta = kernels.slope_inverse(value_next.y_grid, value_next.slopes, -pi_m,
                                  floor=-tariff.gamma)
    out = kernels.stage_values(
        np.array([float(y)]), value_next.y_grid, value_next.values, value_next.slopes,
        nodes, weights, pi_p, pi_m, tariff.pi_zero, float(tau), float(delta),
        cfg.alpha, cfg.beta, cfg.d_bar, cfg.v_bar)
    return float(out[0])


def _check_row(t: int, grid: np.ndarray, values: np.ndarray, slopes: np.ndarray,
               horizon_T: int, v_bar: float, gamma: float, pi_off_minus: float,
               relaxed: bool) -> None:
    scale = max(1.0, float(np.max(np.abs(values))))
    tol = INVARIANT_RTOL * scale
    second = values[2:] - 2.0 * values[1:-1] + values[:-2]
    if second.size and float(second.max()) > tol:
        raise NumericalInvariantError(
            f"concavity violated at t={t}: max second difference {second.max():.3e} "
            f"exceeds tolerance {tol:.3e} (grid or quadrature too coarse)")
    stol = INVARIANT_RTOL * max(1.0, gamma)
    if slopes.size:
        if float(slopes.min()) < -gamma - stol:
            raise NumericalInvariantError(f"slope below -gamma at t={t}")
        # The upper slope bound -pi_off_minus assumes the standard price chain.
        if not relaxed and float(slopes.max()) > -pi_off_minus + stol:
            raise NumericalInvariantError(f"slope above -pi_off_minus at t={t}")
        saturated = grid[:-1] >= (horizon_T - t) * v_bar - 1e-12
        if saturated.any() and float(np.max(np.abs(slopes[saturated] + gamma))) > stol:
            raise NumericalInvariantError(f"saturated slope differs from -gamma at t={t}")


def backward_induction(
    cfg: ValidatedConfig,
    s_req_max: float | None = None,
    grid_points_per_vbar: int = DEFAULT_GRID_POINTS_PER_VBAR,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    der_support: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> ValueTable:
    """Solve the value recursion from the deadline back to plug-in time.

    ``der_support`` replaces the rectified-normal quadrature with an explicit
    per-interval (nodes, weights) support; equivalence tests pass the
    brute-force oracle's discretization here so both routes face the same
    generation law and differences reduce to pure action discretization.
    """
    if grid_points_per_vbar < 4:
        raise ValueError("grid_points_per_vbar must be >= 4")
    tariff = cfg.tariff
    T, v_bar, gamma = cfg.T, cfg.v_bar, tariff.gamma
    if s_req_max is None:
        s_req_max = T * v_bar
    step = v_bar / grid_points_per_vbar
    m = int(np.ceil(s_req_max / step - 1e-9)) + 1
    grid = np.arange(m) * step

    values = np.empty((T + 1, m))
    slopes = np.empty((T + 1, max(m - 1, 0)))
    values[T] = -gamma * grid
    slopes[T] = -gamma

    for t in range(T - 1, -1, -1):
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        if der_support is not None:
            nodes, weights = der_support[t]
        else:
            nodes, weights = rectified_normal_quadrature(cfg.der.mu[t], cfg.der.sigma[t], quad_nodes)
        tau = float(kernels.slope_inverse(grid, slopes[t + 1], -pi_p, floor=-gamma))
        delta = float(kernels.slope_inverse(grid, slopes[t + 1], -pi_m, floor=-gamma))
        values[t] = kernels.stage_values(
            grid, grid, values[t + 1], slopes[t + 1], nodes, weights,
            pi_p, pi_m, tariff.pi_zero, tau, delta,
            cfg.alpha, cfg.beta, cfg.d_bar, v_bar)
        slopes[t] = np.diff(values[t]) / step
        _check_row(t, grid, values[t], slopes[t], T, v_bar, gamma,
                   tariff.pi_off_minus, tariff.relaxed_a1)

    return ValueTable(grid, values, slopes, v_bar, gamma)


def extract_thresholds(table: ValueTable, tariff: TariffSchedule) -> ThresholdTable:
    """Per-interval thresholds from the solved table, with recursion residuals."""
    T = tariff.horizon_T
    v_bar = table.v_bar
    tau = np.empty(T)
    delta = np.empty(T)
    off2_nonempty = tariff.off2_nonempty
    for t in range(T):
        period = tariff.period_of[t]
        if period is Period.OFF1:
            tau[t] = invert_slope(table, t + 1, -tariff.pi_off_plus)
        else:
            tau[t] = (T - t - 1) * v_bar
        if tariff.relaxed_a1:
            # Equal sell and retail rates collapse the two thresholds.
            delta[t] = tau[t]
        elif period is Period.ON and off2_nonempty:
            delta[t] = invert_slope(table, t + 1, -tariff.pi_on_minus)
        else:
            delta[t] = 0.0

    step = table.grid_step
    tau_res = 0.0
    delta_res = 0.0
    for t in range(T - 1):
        same = tariff.period_of[t] is tariff.period_of[t + 1]
        if same and tariff.period_of[t] is Period.OFF1:
            tau_res = max(tau_res, abs(tau[t] - (tau[t + 1] + v_bar)))
        if same and tariff.period_of[t] is Period.ON and off2_nonempty and not tariff.relaxed_a1:
            delta_res = max(delta_res, abs(delta[t] - delta[t + 1]))
    if tau_res > step + 1e-9 or delta_res > step + 1e-9:
        raise NumericalInvariantError(
            f"threshold recursion residual exceeds one grid step "
            f"(tau {tau_res:.3e}, delta {delta_res:.3e}, step {step:.3e})")

    upper = (T - 1 - np.arange(T)) * v_bar
    if np.any(delta > tau + 1e-9) or np.any(tau > upper + 1e-9):
        raise NumericalInvariantError("threshold ordering 0 <= delta <= tau <= (T-t-1)*v_bar violated")
    delta = np.minimum(delta, tau)
    return ThresholdTable(tau, delta, step, tau_res, delta_res)


def write_value_table_csv(table: ValueTable, path) -> None:
    """Rows t=0..T per grid point; the last point repeats its left segment slope."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y_kwh", "value_usd", "slope_usd_per_kwh"])
        for t in range(table.values.shape[0]):
            row_slopes = table.slopes[t]
            for j, y in enumerate(table.y_grid):
                s = row_slopes[min(j, len(row_slopes) - 1)] if len(row_slopes) else -table.gamma
                writer.writerow([t, fmt9(y), fmt9(table.values[t, j]), fmt9(s)])


def write_thresholds_csv(thresholds: ThresholdTable, tariff: TariffSchedule, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "period", "tau_kwh", "delta_kwh"])
        for t in range(len(thresholds.tau)):
            writer.writerow([
                t, tariff.period_of[t].value,
                fmt9(thresholds.tau[t]), fmt9(thresholds.delta[t]),
            ])
