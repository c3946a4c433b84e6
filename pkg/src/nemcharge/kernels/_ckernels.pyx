# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``pykernels``: scalar loops over batch elements.

Must stay semantically aligned with the NumPy lane; the parity tests in
``tests/test_kernels.py`` compare both on random batches.
"""

import numpy as np

from libc.math cimport fabs

cdef double SLOPE_TIE_EPS = 1e-9
cdef double BRACKET_EPS = 1e-15

ZONE_CONSUMPTION = 0
ZONE_ZERO = 1
ZONE_PRODUCTION = 2


cdef inline double _clip(double x, double lo, double hi) nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef Py_ssize_t _first_leq(double[::1] slopes, double target) nogil:
    """First index whose (non-increasing) slope is <= target; len(slopes) if none."""
    cdef Py_ssize_t lo = 0, hi = slopes.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if slopes[mid] <= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef Py_ssize_t _first_lt(double[::1] slopes, double target) nogil:
    """First index whose (non-increasing) slope is < target; len(slopes) if none."""
    cdef Py_ssize_t lo = 0, hi = slopes.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if slopes[mid] < target:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline double _sum_consumption(double nu, double[::1] alpha, double[::1] beta,
                                    double[::1] dbar) nogil:
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(alpha.shape[0]):
        total += _clip((alpha[i] - nu) / beta[i], 0.0, dbar[i])
    return total


cdef inline double _interp(double[::1] grid, double[::1] vals, double x) nogil:
    """Linear interpolation on a uniform ascending grid, clamped at the ends."""
    cdef Py_ssize_t m = grid.shape[0]
    if m == 1:
        return vals[0]
    cdef double pos = (x - grid[0]) / (grid[1] - grid[0])
    if pos <= 0.0:
        return vals[0]
    if pos >= m - 1:
        return vals[m - 1]
    cdef Py_ssize_t i = <Py_ssize_t> pos
    if i > m - 2:
        i = m - 2
    cdef double w = pos - i
    return vals[i] * (1.0 - w) + vals[i + 1] * w


cdef double _netzero_nu(double y, double r, double pi_plus, double pi_minus,
                        double[::1] y_grid, double[::1] slopes_next,
                        double[::1] alpha, double[::1] beta, double[::1] dbar,
                        double vbar, double tol_kwh, int max_iter) nogil:
    cdef double lo = pi_minus, hi = pi_plus
    cdef double nu, err, y_star
    cdef Py_ssize_t k, last = y_grid.shape[0] - 1
    cdef int it
    for it in range(max_iter):
        nu = 0.5 * (lo + hi)
        k = _first_lt(slopes_next, -nu - SLOPE_TIE_EPS)
        if k > last:
            k = last
        y_star = y_grid[k]
        err = _sum_consumption(nu, alpha, beta, dbar) + _clip(y - y_star, 0.0, vbar) - r
        if fabs(err) <= tol_kwh:
            break
        if err > 0.0:
            lo = nu
        else:
            hi = nu
        if hi - lo < BRACKET_EPS:
            break
    return 0.5 * (lo + hi)


def slope_inverse(y_grid, slopes, p, floor=None):
    """Scalar/array wrapper matching pykernels.slope_inverse."""
    cdef double[::1] g = np.ascontiguousarray(y_grid, dtype=np.float64)
    cdef double[::1] s = np.ascontiguousarray(slopes, dtype=np.float64)
    p_arr = np.atleast_1d(np.asarray(p, dtype=np.float64))
    out = np.empty(p_arr.shape[0])
    cdef double[::1] pv = p_arr
    cdef double[::1] ov = out
    cdef bint has_floor = floor is not None
    cdef double floor_val = floor if has_floor else 0.0
    cdef Py_ssize_t i, k, last = g.shape[0] - 1
    for i in range(pv.shape[0]):
        if has_floor and pv[i] <= floor_val + SLOPE_TIE_EPS:
            k = _first_leq(s, pv[i] + SLOPE_TIE_EPS)
        else:
            k = _first_lt(s, pv[i] - SLOPE_TIE_EPS)
        if k > last:
            k = last
        ov[i] = g[k]
    return out if np.ndim(p) else float(out[0])


def decide_batch(y, r, double pi_plus, double pi_minus, double tau, double delta,
                 y_grid, slopes_next, alpha, beta, dbar, double vbar,
                 double tol_kwh=1e-9, int max_iter=200):
    y_arr = np.ascontiguousarray(np.atleast_1d(y), dtype=np.float64)
    r_arr = np.ascontiguousarray(np.atleast_1d(r), dtype=np.float64)
    cdef double[::1] yv = y_arr
    cdef double[::1] rv = r_arr
    cdef double[::1] g = np.ascontiguousarray(y_grid, dtype=np.float64)
    cdef double[::1] s = np.ascontiguousarray(slopes_next, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(beta, dtype=np.float64)
    cdef double[::1] db = np.ascontiguousarray(dbar, dtype=np.float64)

    cdef Py_ssize_t n = yv.shape[0], k = a.shape[0]
    v_out = np.empty(n)
    d_out = np.empty((n, k))
    z_out = np.empty(n)
    nu_out = np.empty(n)
    zone_out = np.empty(n, dtype=np.int8)
    cdef double[::1] vv = v_out
    cdef double[:, ::1] dv = d_out
    cdef double[::1] zv = z_out
    cdef double[::1] nuv = nu_out
    cdef signed char[::1] zonev = zone_out

    cdef double sum_lp = _sum_consumption(pi_plus, a, b, db)
    cdef double sum_lm = _sum_consumption(pi_minus, a, b, db)
    cdef double yi, ri, v_plus, v_minus, nu, vi, sum_d
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            yi = yv[i]
            ri = rv[i]
            v_plus = _clip(yi - tau, 0.0, vbar)
            v_minus = _clip(yi - delta, 0.0, vbar)
            if ri < sum_lp + v_plus:
                zonev[i] = 0
                nu = pi_plus
                vi = v_plus
            elif ri > sum_lm + v_minus:
                zonev[i] = 2
                nu = pi_minus
                vi = v_minus
            else:
                zonev[i] = 1
                nu = _netzero_nu(yi, ri, pi_plus, pi_minus, g, s, a, b, db,
                                 vbar, tol_kwh, max_iter)
                vi = 0.0  # filled from the residual below
            sum_d = 0.0
            for j in range(k):
                dv[i, j] = _clip((a[j] - nu) / b[j], 0.0, db[j])
                sum_d += dv[i, j]
            if zonev[i] == 1:
                vi = _clip(ri - sum_d, v_plus, v_minus)
            vv[i] = vi
            nuv[i] = nu
            zv[i] = vi + sum_d - ri
    return v_out, d_out, z_out, zone_out, nu_out


def stage_values(y_eval, y_grid, values_next, slopes_next, r_nodes, r_weights,
                 double pi_plus, double pi_minus, double pi_zero,
                 double tau, double delta,
                 alpha, beta, dbar, double vbar,
                 double tol_kwh=1e-9, int max_iter=200):
    cdef double[::1] ye = np.ascontiguousarray(y_eval, dtype=np.float64)
    cdef double[::1] g = np.ascontiguousarray(y_grid, dtype=np.float64)
    cdef double[::1] vn = np.ascontiguousarray(values_next, dtype=np.float64)
    cdef double[::1] s = np.ascontiguousarray(slopes_next, dtype=np.float64)
    cdef double[::1] rn = np.ascontiguousarray(r_nodes, dtype=np.float64)
    cdef double[::1] rw = np.ascontiguousarray(r_weights, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(beta, dtype=np.float64)
    cdef double[::1] db = np.ascontiguousarray(dbar, dtype=np.float64)

    cdef Py_ssize_t m = ye.shape[0], q = rn.shape[0], nk = a.shape[0]
    out = np.empty(m)
    cdef double[::1] ov = out

    # Consumption and utility are constant inside the two outer zones.
    cdef double sum_lp = _sum_consumption(pi_plus, a, b, db)
    cdef double sum_lm = _sum_consumption(pi_minus, a, b, db)
    cdef double u_plus = 0.0, u_minus = 0.0, li
    cdef Py_ssize_t i, j, kk
    for j in range(nk):
        li = _clip((a[j] - pi_plus) / b[j], 0.0, db[j])
        u_plus += a[j] * li - 0.5 * b[j] * li * li
        li = _clip((a[j] - pi_minus) / b[j], 0.0, db[j])
        u_minus += a[j] * li - 0.5 * b[j] * li * li

    cdef double yi, ri, v_plus, v_minus, nu, vi, sum_d, util, z, pay, acc, ymax
    ymax = g[g.shape[0] - 1]
    with nogil:
        for i in range(m):
            yi = ye[i]
            v_plus = _clip(yi - tau, 0.0, vbar)
            v_minus = _clip(yi - delta, 0.0, vbar)
            acc = 0.0
            for kk in range(q):
                ri = rn[kk]
                if ri < sum_lp + v_plus:
                    vi = v_plus
                    sum_d = sum_lp
                    util = u_plus
                elif ri > sum_lm + v_minus:
                    vi = v_minus
                    sum_d = sum_lm
                    util = u_minus
                else:
                    nu = _netzero_nu(yi, ri, pi_plus, pi_minus, g, s, a, b, db,
                                     vbar, tol_kwh, max_iter)
                    sum_d = 0.0
                    util = 0.0
                    for j in range(nk):
                        li = _clip((a[j] - nu) / b[j], 0.0, db[j])
                        sum_d += li
                        util += a[j] * li - 0.5 * b[j] * li * li
                    vi = _clip(ri - sum_d, v_plus, v_minus)
                z = vi + sum_d - ri
                pay = z * (pi_plus if z >= 0.0 else pi_minus) + pi_zero
                acc += rw[kk] * (util - pay + _interp(g, vn, _clip(yi - vi, 0.0, ymax)))
            ov[i] = acc
    return out
