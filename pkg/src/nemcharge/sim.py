"""Monte Carlo evaluation harness: threshold policy versus open-loop baseline.

Each trial draws a plug-in time (uniform over windows that fit in the TOU
day), an initial charging demand (truncated normal on (0, T*v_bar], or an
empirical list), and one generation trajectory; both policies then play the
*same* trajectory (common random numbers) and their accumulated surpluses
are compared.

Randomness is counter-based and fully specified so aggregate statistics are
reproducible: trial i of a sweep point with tag g uses a Philox-4x64
generator keyed ``[seed, g * 2^32 + i]`` and draws, in order, one uniform
for the plug-in slot, one uniform for the initial demand, and T standard
normals for the trajectory. Results are accumulated by trial index, so any
execution order yields identical aggregates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from ._fmt import fmt9
from .config import (
    DayConfig,
    SimSettings,
    admissible_plugin_indices,
    window_config,
    with_price_gap,
)
from .dists import truncated_normal_ppf
from .errors import ConfigError, NumericalInvariantError
from .model import Period, ValidatedConfig
from .solver import (
    ThresholdTable,
    ValueTable,
    backward_induction,
    extract_thresholds,
)

#: demand below this is treated as fully charged (floating-point hygiene;
#: one picowatt-hour, far below every tolerance in the system)
Y_SNAP_KWH = 1e-12

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class SolvedWindow:
    """Value table and thresholds for one scheduling window."""

    cfg: ValidatedConfig
    table: ValueTable
    thresholds: ThresholdTable


def solve_window(cfg: ValidatedConfig, grid_points_per_vbar: int = 40,
                 quad_nodes: int = 64) -> SolvedWindow:
    table = backward_induction(cfg, grid_points_per_vbar=grid_points_per_vbar,
                               quad_nodes=quad_nodes)
    thresholds = extract_thresholds(table, cfg.tariff)
    return SolvedWindow(cfg, table, thresholds)


@dataclass
class TrialsOutcome:
    """Per-trial surpluses and terminal demands, indexed by trial id."""

    seed: int
    stream_tag: int
    horizon_T: int
    demand_cap: float
    plugin_idx: np.ndarray
    s_req: np.ndarray
    surplus_opt: np.ndarray
    surplus_base: np.ndarray
    y_final_opt: np.ndarray
    y_final_base: np.ndarray

    @property
    def n_trials(self) -> int:
        return len(self.s_req)

    def gap_stats(self) -> tuple[float, float, float, float, float]:
        """(mean_opt, mean_base, gap_pct, ci95_lo, ci95_hi).

        The gap estimator uses the paired per-trial differences (common
        random numbers); the CI treats the baseline mean as the scale.
        """
        diff = self.surplus_opt - self.surplus_base
        mean_opt = float(self.surplus_opt.mean())
        mean_base = float(self.surplus_base.mean())
        denom = abs(mean_base)
        gap = 100.0 * float(diff.mean()) / denom
        half = 100.0 * _Z95 * float(diff.std(ddof=1)) / math.sqrt(len(diff)) / denom
        return mean_opt, mean_base, gap, gap - half, gap + half


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    mean_opt: float
    mean_base: float
    gap_pct: float
    ci95_lo: float
    ci95_hi: float


def _trial_generator(seed: int, stream_tag: int, trial: int) -> np.random.Generator:
    if not 0 <= trial < 2**32 or not 0 <= stream_tag < 2**32:
        raise ValueError("trial and stream_tag must fit in 32 bits")
    key = np.array([seed & (2**64 - 1), (stream_tag << 32) + trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_trials(day: DayConfig, sim: SimSettings, horizon_T: int, stream_tag: int):
    admissible = admissible_plugin_indices(day, horizon_T)
    curves = {
        int(p): (
            np.array([day.mu_by_hour[min(int(math.floor((p + i) * day.interval_hours + 1e-9)), 23)]
                      for i in range(horizon_T)]) * day.interval_hours,
            np.array([day.sigma_by_hour[min(int(math.floor((p + i) * day.interval_hours + 1e-9)), 23)]
                      for i in range(horizon_T)]) * day.interval_hours,
        )
        for p in admissible
    }
    n = sim.n_trials
    cap = horizon_T * day.v_bar
    plugin = np.empty(n, dtype=np.int64)
    s_req = np.empty(n)
    r = np.empty((n, horizon_T))
    for i in range(n):
        gen = _trial_generator(sim.seed, stream_tag, i)
        u_p = gen.random()
        plugin[i] = admissible[min(int(u_p * len(admissible)), len(admissible) - 1)]
        u_s = gen.random()
        if sim.s_req_values_kwh is not None:
            vals = sim.s_req_values_kwh
            sample = vals[min(int(u_s * len(vals)), len(vals) - 1)]
        else:
            sample = float(truncated_normal_ppf(u_s, sim.s_req_mean_kwh,
                                                sim.s_req_sd_kwh, 0.0, cap))
        # Efficiency rescaling, then clamp the effective demand to (0, cap].
        s_req[i] = min(max(sample / day.eta, Y_SNAP_KWH), cap)
        mu, sigma = curves[int(plugin[i])]
        r[i] = np.maximum(0.0, mu + sigma * gen.standard_normal(horizon_T))
    return plugin, s_req, r


def _simulate_threshold(solved: SolvedWindow, s0: np.ndarray, r: np.ndarray):
    """Play the threshold policy on each row of r; returns (surplus, terminal demand)."""
    cfg = solved.cfg
    tariff = cfg.tariff
    tab, thr = solved.table, solved.thresholds
    y = s0.copy()
    surplus = np.zeros(len(s0))
    for t in range(cfg.T):
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        v, d, z, zone, _ = kernels.decide_batch(
            y, r[:, t], pi_p, pi_m, float(thr.tau[t]), float(thr.delta[t]),
            tab.y_grid, tab.slopes[t + 1], cfg.alpha, cfg.beta, cfg.d_bar, cfg.v_bar)
        bad = (zone == kernels.ZONE_ZERO) & (np.abs(z) > 10 * kernels.BISECT_TOL_KWH)
        if bad.any():
            raise NumericalInvariantError(
                f"net-zero bisection failed at t={t} for {int(bad.sum())} trials")
        utility = (cfg.alpha * d - 0.5 * cfg.beta * d * d).sum(axis=1)
        payment = np.where(z >= 0.0, z * pi_p, z * pi_m) + tariff.pi_zero
        surplus += utility - payment
        y = np.maximum(y - v, 0.0)
        y[y < Y_SNAP_KWH] = 0.0
    surplus -= tariff.gamma * y
    return surplus, y


def baseline_plan_matrix(cfg: ValidatedConfig, s0: np.ndarray) -> np.ndarray:
    """Open-loop charge schedule per trial: (n, T).

    Off-peak intervals fill chronologically; any remainder spills onto
    on-peak intervals starting from the latest.
    """
    T, v_bar = cfg.T, cfg.v_bar
    periods = cfg.tariff.period_of
    off = np.array([p is not Period.ON for p in periods])
    off_before = np.concatenate(([0.0], np.cumsum(off)[:-1])) * v_bar
    total_off = off.sum() * v_bar
    on_after = np.array([sum(1 for u in range(t + 1, T) if periods[u] is Period.ON)
                         for t in range(T)], dtype=float)
    spill_need = np.maximum(s0 - total_off, 0.0)[:, None]
    plan = np.where(off[None, :],
                    np.clip(s0[:, None] - off_before[None, :], 0.0, v_bar),
                    np.clip(spill_need - on_after[None, :] * v_bar, 0.0, v_bar))
    return plan


def _simulate_baseline(cfg: ValidatedConfig, s0: np.ndarray, r: np.ndarray):
    tariff = cfg.tariff
    plan = baseline_plan_matrix(cfg, s0)
    surplus = np.zeros(len(s0))
    for t in range(cfg.T):
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        l_plus = np.clip((cfg.alpha - pi_p) / cfg.beta, 0.0, cfg.d_bar)
        utility = float((cfg.alpha * l_plus - 0.5 * cfg.beta * l_plus * l_plus).sum())
        z = plan[:, t] + l_plus.sum() - r[:, t]
        payment = np.where(z >= 0.0, z * pi_p, z * pi_m) + tariff.pi_zero
        surplus += utility - payment
    y_final = np.maximum(s0 - plan.sum(axis=1), 0.0)
    y_final[y_final < Y_SNAP_KWH] = 0.0
    surplus -= tariff.gamma * y_final
    return surplus, y_final


def run_trials(day: DayConfig, sim: SimSettings | None = None,
               stream_tag: int = 0) -> TrialsOutcome:
    """Run the paired Monte Carlo comparison; aborts on a completion breach."""
    sim = day.sim if sim is None else sim
    if sim.n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    horizon_T = day.horizon_intervals(sim.horizon_hours)
    plugin, s_req, r = _draw_trials(day, sim, horizon_T, stream_tag)
    cap = horizon_T * day.v_bar

    surplus_opt = np.empty(sim.n_trials)
    surplus_base = np.empty(sim.n_trials)
    y_final_opt = np.empty(sim.n_trials)
    y_final_base = np.empty(sim.n_trials)
    for p in np.unique(plugin):
        idx = np.nonzero(plugin == p)[0]
        cfg = window_config(day, int(p), horizon_T)
        solved = solve_window(cfg, sim.grid_points_per_vbar, sim.quad_nodes)
        so, yo = _simulate_threshold(solved, s_req[idx], r[idx])
        sb, yb = _simulate_baseline(cfg, s_req[idx], r[idx])
        surplus_opt[idx] = so
        y_final_opt[idx] = yo
        surplus_base[idx] = sb
        y_final_base[idx] = yb

    breach = (y_final_opt > 0.0) & (s_req <= cap + 1e-9)
    if breach.any():
        first = int(np.nonzero(breach)[0][0])
        raise NumericalInvariantError(
            f"threshold policy left unmet demand on {int(breach.sum())} trials "
            f"with feasible s_req (first: trial {first}, y_T={y_final_opt[first]:.3e})")

    return TrialsOutcome(sim.seed, stream_tag, horizon_T, cap, plugin, s_req,
                         surplus_opt, surplus_base, y_final_opt, y_final_base)


def sweep_horizon(day: DayConfig, lengths, sim: SimSettings | None = None) -> list[SweepRow]:
    """One paired run per horizon length (hours); stream tag = length."""
    sim = day.sim if sim is None else sim
    rows = []
    for length in lengths:
        point = replace(sim, horizon_hours=float(length))
        outcome = run_trials(day, point, stream_tag=int(length))
        mo, mb, gap, lo, hi = outcome.gap_stats()
        rows.append(SweepRow("horizon", float(length), mo, mb, gap, lo, hi))
    return rows


def sweep_price_gap(day: DayConfig, gaps, sim: SimSettings | None = None,
                    ) -> tuple[list[SweepRow], list[tuple[float, str]]]:
    """One paired run per retail-minus-sell gap, re-solving thresholds each time.

    Gaps whose tariff fails validation are skipped and reported.
    """
    sim = day.sim if sim is None else sim
    rows = []
    skipped = []
    for gap in gaps:
        shifted = with_price_gap(day, float(gap))
        try:
            window_config(shifted, 0, 1)  # A1 check for this gap
        except ConfigError as exc:
            skipped.append((float(gap), str(exc)))
            continue
        tag = 10_000 + int(round(float(gap) * 1000))
        outcome = run_trials(shifted, sim, stream_tag=tag)
        mo, mb, gp, lo, hi = outcome.gap_stats()
        rows.append(SweepRow("price-gap", float(gap), mo, mb, gp, lo, hi))
    return rows, skipped


def expected_surplus_on_support(
    solved: SolvedWindow,
    s_req: float,
    support: list[tuple[np.ndarray, np.ndarray]],
    max_paths: int = 2_000_000,
) -> float:
    """Exact expected surplus of the threshold policy on a finite DER support.

    Enumerates every generation trajectory (the support is small), so the
    only approximation left in an oracle comparison is the oracle's own
    action grid.
    """
    cfg = solved.cfg
    tariff = cfg.tariff
    tab, thr = solved.table, solved.thresholds
    y = np.array([float(s_req)])
    prob = np.array([1.0])
    total = 0.0
    for t in range(cfg.T):
        nodes, node_probs = support[t]
        q = len(nodes)
        if len(y) * q > max_paths:
            raise ValueError("support too large to enumerate")
        yy = np.repeat(y, q)
        pp = np.repeat(prob, q) * np.tile(node_probs, len(y))
        rr = np.tile(nodes, len(y))
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        v, d, z, _, _ = kernels.decide_batch(
            yy, rr, pi_p, pi_m, float(thr.tau[t]), float(thr.delta[t]),
            tab.y_grid, tab.slopes[t + 1], cfg.alpha, cfg.beta, cfg.d_bar, cfg.v_bar)
        utility = (cfg.alpha * d - 0.5 * cfg.beta * d * d).sum(axis=1)
        payment = np.where(z >= 0.0, z * pi_p, z * pi_m) + tariff.pi_zero
        total += float((pp * (utility - payment)).sum())
        y = np.maximum(yy - v, 0.0)
        y[y < Y_SNAP_KWH] = 0.0
        prob = pp
    total -= tariff.gamma * float((prob * y).sum())
    return total


def write_results_csv(outcome: TrialsOutcome, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "policy", "surplus_usd", "y_T_kwh"])
        for i in range(outcome.n_trials):
            writer.writerow([i, "optimal", fmt9(outcome.surplus_opt[i]),
                             fmt9(outcome.y_final_opt[i])])
            writer.writerow([i, "baseline", fmt9(outcome.surplus_base[i]),
                             fmt9(outcome.y_final_base[i])])


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", "mean_opt", "mean_base",
                         "gap_pct", "ci95_lo", "ci95_hi"])
        for row in rows:
            writer.writerow([row.param, fmt9(row.value), fmt9(row.mean_opt),
                             fmt9(row.mean_base), fmt9(row.gap_pct),
                             fmt9(row.ci95_lo), fmt9(row.ci95_hi)])
