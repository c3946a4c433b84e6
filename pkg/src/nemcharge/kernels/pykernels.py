"""NumPy implementation of the hot decision kernels.

Semantics shared with the compiled lane (``_ckernels``):

*   ``slope_inverse`` is the subdifferential inverse of a concave
    piecewise-linear value function: the smallest grid point whose
    right-segment slope has dropped to ``p`` (within a tie epsilon),
    or the last grid point when every slope is still above ``p``.
*   ``decide_batch`` evaluates the three-zone closed-form optimum of one
    interval: constant consumption at the retail/sell marginal in the
    net-consumption/net-production zones, and a bisection on the dual
    price ``nu`` in the net-zero zone where total consumption plus
    charging is matched to the available generation.

The net-zero response jumps where the slope inverse crosses a grid kink;
the bisection therefore finishes by back-filling the charge from the
residual ``v = r - sum(d)``, which lands inside the flat segment and
zeroes the net consumption exactly.
"""

from __future__ import annotations

import numpy as np

SLOPE_TIE_EPS = 1e-9

ZONE_CONSUMPTION = 0
ZONE_ZERO = 1
ZONE_PRODUCTION = 2

BISECT_TOL_KWH = 1e-9
BISECT_MAX_ITER = 200
_BRACKET_EPS = 1e-15


def slope_inverse(y_grid, slopes, p, floor=None):
    """Demand level at which the right-segment slope reaches p (vectorized in p).

    Interior p: the right end of the last segment whose slope is still >= p
    (maximal subdifferential selection, so flat runs at exactly p resolve to
    their right edge and downstream charge amounts are minimized). p at the
    ``floor`` (the terminal-penalty slope): the onset of the floor-slope
    region instead, which is the meaningful finite answer there.
    """
    y_grid = np.asarray(y_grid)
    neg = -np.asarray(slopes)  # non-decreasing by concavity
    p_arr = np.asarray(p, dtype=float)
    k_hi = np.searchsorted(neg, -p_arr + SLOPE_TIE_EPS, side="right")
    if floor is None:
        return y_grid[np.minimum(k_hi, len(y_grid) - 1)]
    k_lo = np.searchsorted(neg, -p_arr - SLOPE_TIE_EPS, side="left")
    at_floor = p_arr <= floor + SLOPE_TIE_EPS
    k = np.where(at_floor, k_lo, k_hi)
    return y_grid[np.minimum(k, len(y_grid) - 1)]


def _consumption_at(nu, alpha, beta, dbar):
    """Per-device consumption at marginal price nu; nu may be an array."""
    nu = np.asarray(nu)
    return np.clip((alpha - nu[..., None]) / beta, 0.0, dbar)


def _netzero_solve(y, r, v_plus, v_minus, pi_plus, pi_minus, y_grid, slopes_next,
                   alpha, beta, dbar, vbar, tol_kwh, max_iter):
    """Bisect nu in [pi_minus, pi_plus] so consumption + charging matches r.

    The returned charge is the matching residual r - sum(d), clamped to the
    zone's exact range [v_plus, v_minus]; the lower clamp keeps the
    completion guarantee free of bisection-tolerance dust.
    """
    neg = -np.asarray(slopes_next)
    last = len(y_grid) - 1
    lo = np.full(y.shape, pi_minus)
    hi = np.full(y.shape, pi_plus)
    for _ in range(max_iter):
        nu = 0.5 * (lo + hi)
        sum_d = _consumption_at(nu, alpha, beta, dbar).sum(axis=-1)
        k = np.searchsorted(neg, nu + SLOPE_TIE_EPS, side="right")
        y_star = y_grid[np.minimum(k, last)]
        err = sum_d + np.clip(y - y_star, 0.0, vbar) - r
        if np.all(np.abs(err) <= tol_kwh):
            break
        go_up = err > 0.0
        lo = np.where(go_up, nu, lo)
        hi = np.where(go_up, hi, nu)
        if np.max(hi - lo) < _BRACKET_EPS:
            break
    nu = 0.5 * (lo + hi)
    d = _consumption_at(nu, alpha, beta, dbar)
    v = np.clip(r - d.sum(axis=-1), v_plus, v_minus)
    return nu, d, v


def decide_batch(y, r, pi_plus, pi_minus, tau, delta, y_grid, slopes_next,
                 alpha, beta, dbar, vbar,
                 tol_kwh=BISECT_TOL_KWH, max_iter=BISECT_MAX_ITER):
    """Optimal (v, d, z, zone, nu) for each state in a batch at one interval.

    ``tau``/``delta`` are this interval's procrastination thresholds;
    ``y_grid``/``slopes_next`` describe the next interval's expected value
    function (used only inside the net-zero zone). Zone boundary ties are
    classified net-zero, where all branch formulas coincide.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    l_plus = np.clip((alpha - pi_plus) / beta, 0.0, dbar)
    l_minus = np.clip((alpha - pi_minus) / beta, 0.0, dbar)
    v_plus = np.clip(y - tau, 0.0, vbar)
    v_minus = np.clip(y - delta, 0.0, vbar)
    bound_plus = l_plus.sum() + v_plus
    bound_minus = l_minus.sum() + v_minus

    n, k = y.shape[0], alpha.shape[0]
    v = np.empty(n)
    d = np.empty((n, k))
    nu = np.empty(n)
    zone = np.empty(n, dtype=np.int8)

    cons = r < bound_plus
    prod = r > bound_minus
    mid = ~(cons | prod)

    v[cons] = v_plus[cons]
    d[cons] = l_plus
    nu[cons] = pi_plus
    zone[cons] = ZONE_CONSUMPTION

    v[prod] = v_minus[prod]
    d[prod] = l_minus
    nu[prod] = pi_minus
    zone[prod] = ZONE_PRODUCTION

    if mid.any():
        nu_m, d_m, v_m = _netzero_solve(
            y[mid], r[mid], v_plus[mid], v_minus[mid], pi_plus, pi_minus,
            y_grid, slopes_next, alpha, beta, dbar, vbar, tol_kwh, max_iter)
        nu[mid] = nu_m
        d[mid] = d_m
        v[mid] = v_m
        zone[mid] = ZONE_ZERO

    z = v + d.sum(axis=1) - r
    return v, d, z, zone, nu


def stage_values(y_eval, y_grid, values_next, slopes_next, r_nodes, r_weights,
                 pi_plus, pi_minus, pi_zero, tau, delta,
                 alpha, beta, dbar, vbar,
                 tol_kwh=BISECT_TOL_KWH, max_iter=BISECT_MAX_ITER):
    """Expected one-interval value at each ``y_eval`` point.

    For every quadrature node the closed-form decision is taken, the stage
    reward accumulated, and the next-stage value function (piecewise linear
    on ``y_grid``) evaluated at the post-charge demand.
    """
    y_eval = np.asarray(y_eval, dtype=float)
    m, q = len(y_eval), len(r_nodes)
    yy = np.repeat(y_eval, q)
    rr = np.tile(np.asarray(r_nodes, dtype=float), m)
    v, d, z, _, _ = decide_batch(
        yy, rr, pi_plus, pi_minus, tau, delta, y_grid, slopes_next,
        alpha, beta, dbar, vbar, tol_kwh, max_iter)
    utility = (alpha * d - 0.5 * beta * d * d).sum(axis=1)
    payment = np.where(z >= 0.0, z * pi_plus, z * pi_minus) + pi_zero
    carry = np.interp(np.clip(yy - v, 0.0, y_grid[-1]), y_grid, values_next)
    return (utility - payment + carry).reshape(m, q) @ np.asarray(r_weights)
