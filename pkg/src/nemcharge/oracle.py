"""Independent brute-force validation solver.

Solves the same sequential problem as the closed-form path by exhaustive
enumeration over discretized actions and states, with the generation law
reduced to a small probability-weighted support (atom at zero plus
equal-mass quantile midpoints). Deliberately shares no code with the
solver/policy modules so it can serve as a second, independent route to
the optimum in equivalence tests.

The per-interval maximization is split to stay tractable: the inner
``max`` over (v, d) at fixed total consumption ``s = v + sum(d)`` does not
depend on the realized generation, so a table C(s, y) is built once per
interval by a max-plus sweep over the charge grid, and each support point
only has to maximize ``C(s, y) - payment(s - r)`` over ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .model import ValidatedConfig

MAX_HORIZON = 8
MAX_DEVICES = 2


@dataclass(frozen=True)
class OracleConfig:
    """Discretization of the brute-force solve."""

    action_step: float = 0.01
    r_nodes: int = 5
    y_step: float | None = None  # defaults to action_step

    def __post_init__(self):
        if self.action_step <= 0:
            raise ValueError("action_step must be positive")
        if self.r_nodes < 3:
            raise ValueError("r_nodes must be >= 3")
        y_step = self.action_step if self.y_step is None else self.y_step
        if y_step > self.action_step + 1e-15:
            raise ValueError("y_step must not exceed action_step")
        ratio = self.action_step / y_step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("action_step must be an integer multiple of y_step")
        object.__setattr__(self, "y_step", y_step)


def quantile_support(mu: float, sigma: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Discrete stand-in for max(0, N(mu, sigma^2)).

    Atom at zero with the exact rectification mass, plus n_nodes - 1
    equal-probability quantile midpoints of the positive part.
    """
    if sigma <= 0.0:
        return np.array([max(mu, 0.0)]), np.array([1.0])
    p0 = float(ndtr(-mu / sigma))
    if 1.0 - p0 < 1e-12:
        return np.array([0.0]), np.array([1.0])
    m = n_nodes - 1
    u = p0 + (np.arange(m) + 0.5) / m * (1.0 - p0)
    nodes = np.maximum(mu + sigma * ndtri(u), 0.0)
    probs = np.full(m, (1.0 - p0) / m)
    return np.concatenate(([0.0], nodes)), np.concatenate(([p0], probs))


@dataclass
class OracleSolution:
    """Discrete value table plus everything needed to replay greedy decisions."""

    cfg: ValidatedConfig
    ocfg: OracleConfig
    y_grid: np.ndarray                    # (ny,) state grid
    values: np.ndarray                    # (T+1, ny)
    support: list[tuple[np.ndarray, np.ndarray]]  # per-t (nodes, probs)
    _c_tables: list[np.ndarray] = field(repr=False, default_factory=list)
    _v_argmax: list[np.ndarray] = field(repr=False, default_factory=list)
    _s_values: np.ndarray = field(repr=False, default=None)
    _d1_argmax: np.ndarray = field(repr=False, default=None)

    def expected_surplus(self, s_req: float) -> float:
        iy = int(round(s_req / self.ocfg.y_step))
        iy = min(max(iy, 0), len(self.y_grid) - 1)
        return float(self.values[0, iy])

    def greedy(self, t: int, y: float, r: float) -> tuple[float, tuple[float, ...], float]:
        """Optimal discretized (v, d, z) at a state; y must sit on the state grid."""
        step = self.ocfg.action_step
        iy = int(round(y / self.ocfg.y_step))
        if not 0 <= iy < len(self.y_grid):
            raise ValueError(f"y={y} outside the oracle state grid")
        tariff = self.cfg.tariff
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        net = self._s_values - r
        pay = np.where(net >= 0.0, net * pi_p, net * pi_m) + tariff.pi_zero
        column = self._c_tables[t][:, iy] - pay
        i_s = int(np.argmax(column))
        iv = int(self._v_argmax[t][i_s, iy])
        i_d = i_s - iv
        v = iv * step
        if self._d1_argmax is None:
            d = (i_d * step,)
        else:
            j1 = int(self._d1_argmax[i_d])
            d = (j1 * step, (i_d - j1) * step)
        return v, d, v + i_d * step - r

    def greedy_v_profile(self, t: int, r: float) -> np.ndarray:
        """Greedy charge at every grid state for a fixed generation level."""
        step = self.ocfg.action_step
        tariff = self.cfg.tariff
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        net = self._s_values - r
        pay = np.where(net >= 0.0, net * pi_p, net * pi_m) + tariff.pi_zero
        scores = self._c_tables[t] - pay[:, None]
        i_s = np.argmax(scores, axis=0)
        iv = self._v_argmax[t][i_s, np.arange(len(self.y_grid))]
        return iv.astype(float) * step


def _utility_envelope(cfg: ValidatedConfig, step: float) -> tuple[np.ndarray, np.ndarray | None]:
    """Best total utility per total-consumption grid level, plus the split argmax."""
    grids = []
    for dev in cfg.devices:
        n = int(math.floor(dev.d_bar / step + 1e-9)) + 1
        d = np.arange(n) * step
        grids.append(dev.alpha * d - 0.5 * dev.beta * d * d)
    if len(grids) == 1:
        return grids[0], None
    u1, u2 = grids
    n_tot = len(u1) + len(u2) - 1
    env = np.full(n_tot, -np.inf)
    split = np.zeros(n_tot, dtype=np.int32)
    for j1 in range(len(u1)):
        cand = u1[j1] + u2
        seg = env[j1:j1 + len(u2)]
        better = cand > seg
        seg[better] = cand[better]
        split[j1:j1 + len(u2)][better] = j1
    return env, split


def oracle_solve(
    cfg: ValidatedConfig,
    ocfg: OracleConfig = OracleConfig(),
    s_req_max: float | None = None,
) -> OracleSolution:
    """Exhaustive discrete DP over the full horizon.

    Refuses instances beyond T = 8 or K = 2; cost grows as
    O(T * |y| * (|v| * |d|^K + |r| * |s|)).
    """
    T = cfg.T
    if T > MAX_HORIZON:
        raise ValueError(f"oracle limited to T <= {MAX_HORIZON} (got {T})")
    if len(cfg.devices) > MAX_DEVICES:
        raise ValueError(f"oracle limited to K <= {MAX_DEVICES} (got {len(cfg.devices)})")

    step = ocfg.action_step
    y_step = ocfg.y_step
    ratio = int(round(step / y_step))
    v_bar, gamma = cfg.v_bar, cfg.tariff.gamma
    if s_req_max is None:
        s_req_max = T * v_bar

    nv = int(math.floor(v_bar / step + 1e-9)) + 1
    ny = int(math.floor(s_req_max / y_step + 1e-9)) + 1
    y_grid = np.arange(ny) * y_step

    u_env, d1_split = _utility_envelope(cfg, step)
    nd = len(u_env)
    ns = nv + nd - 1
    s_values = np.arange(ns) * step

    support = [quantile_support(cfg.der.mu[t], cfg.der.sigma[t], ocfg.r_nodes) for t in range(T)]

    values = np.empty((T + 1, ny))
    values[T] = -gamma * y_grid
    c_tables: list[np.ndarray] = [None] * T
    v_argmax: list[np.ndarray] = [None] * T

    tariff = cfg.tariff
    for t in range(T - 1, -1, -1):
        w_next = values[t + 1]
        c_table = np.full((ns, ny), -np.inf)
        av = np.zeros((ns, ny), dtype=np.int32)
        for iv in range(nv):
            ivy = iv * ratio
            if ivy >= ny:
                break
            cand = u_env[:, None] + w_next[None, : ny - ivy]
            seg = c_table[iv:iv + nd, ivy:ny]
            better = cand > seg
            seg[better] = cand[better]
            av[iv:iv + nd, ivy:ny][better] = iv
        pi_p, pi_m = tariff.pi_plus(t), tariff.pi_minus(t)
        w_t = np.zeros(ny)
        nodes, probs = support[t]
        for rk, pk in zip(nodes, probs):
            net = s_values - rk
            pay = np.where(net >= 0.0, net * pi_p, net * pi_m) + tariff.pi_zero
            w_t += pk * np.max(c_table - pay[:, None], axis=0)
        values[t] = w_t
        c_tables[t] = c_table
        v_argmax[t] = av

    return OracleSolution(cfg, ocfg, y_grid, values, support,
                          c_tables, v_argmax, s_values, d1_split)


def oracle_thresholds(sol: OracleSolution) -> tuple[np.ndarray, np.ndarray]:
    """Empirical per-interval thresholds from the greedy action table.

    Scans the state grid at r = 0 (net-consumption regime) for where the
    greedy charge lifts off zero, reporting y - v there; the analogous scan
    at a generation level beyond every net-zero zone yields the
    DER-allocation threshold.
    """
    cfg = sol.cfg
    T = cfg.T
    step = sol.ocfg.action_step
    tau_emp = np.full(T, np.nan)
    delta_emp = np.full(T, np.nan)
    for t in range(T):
        pi_m = cfg.tariff.pi_minus(t)
        l_minus = sum(min(max((d.alpha - pi_m) / d.beta, 0.0), d.d_bar) for d in cfg.devices)
        for out, r_probe in ((tau_emp, 0.0), (delta_emp, l_minus + cfg.v_bar + 1.0)):
            v_prof = sol.greedy_v_profile(t, r_probe)
            lift = np.nonzero(v_prof > 0.5 * step)[0]
            if lift.size:
                i0 = lift[0]
                out[t] = sol.y_grid[i0] - v_prof[i0]
            else:
                out[t] = sol.y_grid[-1]
    return tau_emp, delta_emp
