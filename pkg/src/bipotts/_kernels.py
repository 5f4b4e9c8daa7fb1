"""Jitted inner loops for the heat-bath chain and its greedy coupling.

Everything here is deterministic given the stream key and the absolute step
index; the Python-level APIs in dynamics.py and coupling.py call these same
functions, so chunked, bulk, and threaded runs produce identical trajectories.
Spin resampling is inverse-CDF over q weights (q is tiny, alias tables would
be overkill).
"""

from __future__ import annotations

import numba
import numpy as np

from .rng import uniform01

# per-step salt layout
SALT_VERTEX = np.uint64(0)
SALT_SPIN = np.uint64(1)
SALT_X_RES = np.uint64(2)
SALT_Y_RES = np.uint64(3)
SALT_INIT_LEFT = np.uint64(8)
SALT_INIT_RIGHT = np.uint64(9)

_NJIT = dict(cache=True, nogil=True)


@numba.njit(**_NJIT)
def _fill_weights(counts, n, beta, w):
    """Unnormalized heat-bath weights exp(beta*counts/n), max-shifted. Returns the sum."""
    q = counts.size
    m = counts[0]
    for k in range(1, q):
        if counts[k] > m:
            m = counts[k]
    s = 0.0
    for k in range(q):
        w[k] = np.exp(beta * (counts[k] - m) / n)
        s += w[k]
    return s


@numba.njit(**_NJIT)
def _pick(w, total, u):
    """Inverse-CDF draw from unnormalized weights; u uniform on [0, 1)."""
    target = u * total
    cum = 0.0
    for k in range(w.size):
        cum += w[k]
        if target < cum:
            return k
    return w.size - 1


@numba.njit(**_NJIT)
def chain_step(left, right, lcounts, rcounts, beta, key, step):
    """One heat-bath update in place. Returns (side, site, old_spin, new_spin)."""
    n = left.size
    q = lcounts.size
    w = np.empty(q)
    u0 = uniform01(key, np.uint64(step), SALT_VERTEX)
    v = int(u0 * 2 * n)
    u1 = uniform01(key, np.uint64(step), SALT_SPIN)
    if v < n:
        total = _fill_weights(rcounts, n, beta, w)
        k = _pick(w, total, u1)
        old = left[v]
        lcounts[old] -= 1
        lcounts[k] += 1
        left[v] = k
        return 0, v, old, k
    site = v - n
    total = _fill_weights(lcounts, n, beta, w)
    k = _pick(w, total, u1)
    old = right[site]
    rcounts[old] -= 1
    rcounts[k] += 1
    right[site] = k
    return 1, site, old, k


@numba.njit(**_NJIT)
def run_chain(left, right, lcounts, rcounts, beta, key, step0, steps, record_every, rec):
    """Advance `steps` updates, recording count snapshots every `record_every` steps.

    rec has shape (1 + steps // record_every, 2q); row i holds the counts at
    step offset i * record_every.
    """
    q = lcounts.size
    row = 0
    for k in range(q):
        rec[row, k] = lcounts[k]
        rec[row, q + k] = rcounts[k]
    for t in range(steps):
        chain_step(left, right, lcounts, rcounts, beta, key, step0 + t)
        if (t + 1) % record_every == 0:
            row += 1
            for k in range(q):
                rec[row, k] = lcounts[k]
                rec[row, q + k] = rcounts[k]


@numba.njit(**_NJIT)
def occupation(left, right, lcounts, rcounts, beta, key, step0, steps, qpow, visits):
    """Visit counts of full configurations over a long run (small instances only)."""
    n = left.size
    idx = 0
    for i in range(n):
        idx += left[i] * qpow[i]
    for j in range(n):
        idx += right[j] * qpow[n + j]
    for t in range(steps):
        side, site, old, new = chain_step(left, right, lcounts, rcounts, beta, key, step0 + t)
        if side == 0:
            idx += (new - old) * qpow[site]
        else:
            idx += (new - old) * qpow[n + site]
        visits[idx] += 1


@numba.njit(**_NJIT)
def coupled_step(xl, xr, yl, yr, xlc, xrc, ylc, yrc, beta, key, step, dist):
    """One greedy-coupled update of both chains in place. Returns the new distance.

    The shared vertex resamples to the same spin with the largest possible
    probability (coordinatewise minimum of the two update laws); residual mass
    is drawn independently. Identical update laws couple identically.
    """
    n = xl.size
    q = xlc.size
    wx = np.empty(q)
    wy = np.empty(q)
    px = np.empty(q)
    py = np.empty(q)
    pmin = np.empty(q)
    rx = np.empty(q)
    ry = np.empty(q)

    u0 = uniform01(key, np.uint64(step), SALT_VERTEX)
    v = int(u0 * 2 * n)
    if v < n:
        site = v
        sx = _fill_weights(xrc, n, beta, wx)
        sy = _fill_weights(yrc, n, beta, wy)
    else:
        site = v - n
        sx = _fill_weights(xlc, n, beta, wx)
        sy = _fill_weights(ylc, n, beta, wy)

    same = True
    for k in range(q):
        px[k] = wx[k] / sx
        py[k] = wy[k] / sy
        if px[k] != py[k]:
            same = False

    u1 = uniform01(key, np.uint64(step), SALT_SPIN)
    if same:
        kx = _pick(px, 1.0, u1)
        ky = kx
    else:
        pstay = 0.0
        for k in range(q):
            pmin[k] = min(px[k], py[k])
            pstay += pmin[k]
        if u1 < pstay:
            # u1 is uniform on [0, pstay) here, reuse it for the diagonal draw
            kx = _pick(pmin, pstay, u1 / pstay)
            ky = kx
        else:
            rsx = 0.0
            rsy = 0.0
            for k in range(q):
                rx[k] = px[k] - pmin[k]
                ry[k] = py[k] - pmin[k]
                rsx += rx[k]
                rsy += ry[k]
            u2 = uniform01(key, np.uint64(step), SALT_X_RES)
            u3 = uniform01(key, np.uint64(step), SALT_Y_RES)
            kx = _pick(rx, rsx, u2)
            ky = _pick(ry, rsy, u3)

    if v < n:
        oldx = xl[site]
        oldy = yl[site]
        xlc[oldx] -= 1
        xlc[kx] += 1
        xl[site] = kx
        ylc[oldy] -= 1
        ylc[ky] += 1
        yl[site] = ky
    else:
        oldx = xr[site]
        oldy = yr[site]
        xrc[oldx] -= 1
        xrc[kx] += 1
        xr[site] = kx
        yrc[oldy] -= 1
        yrc[ky] += 1
        yr[site] = ky

    if oldx != oldy:
        dist -= 1
    if kx != ky:
        dist += 1
    return dist


@numba.njit(**_NJIT)
def run_coupled(xl, xr, yl, yr, xlc, xrc, ylc, yrc, beta, key, step0, t_max, dist0,
                trace_stride, trace):
    """Run the coupled chains until coalescence or t_max steps.

    Returns (coupling_time, final_distance); coupling_time is -1 on timeout.
    If trace_stride > 0, distances are recorded into `trace` every stride steps
    (slot 0 is the initial distance).
    """
    dist = dist0
    row = 0
    if trace_stride > 0 and trace.size > 0:
        trace[0] = dist
        row = 1
    if dist == 0:
        return 0, 0
    for t in range(t_max):
        dist = coupled_step(xl, xr, yl, yr, xlc, xrc, ylc, yrc, beta, key, step0 + t, dist)
        if trace_stride > 0 and (t + 1) % trace_stride == 0 and row < trace.size:
            trace[row] = dist
            row += 1
        if dist == 0:
            return t + 1, 0
    return -1, dist


@numba.njit(**_NJIT)
def escape_time(left, right, lcounts, rcounts, beta, key, step0, t_max, radius):
    """Steps until the left magnetization enters the l1-ball of `radius` around uniform.

    Returns -1 if the ball is not hit within t_max steps.
    """
    n = left.size
    q = lcounts.size
    dist = 0.0
    for k in range(q):
        dist += abs(lcounts[k] / n - 1.0 / q)
    if dist <= radius:
        return 0
    for t in range(t_max):
        side, site, old, new = chain_step(left, right, lcounts, rcounts, beta, key, step0 + t)
        if side == 0 and old != new:
            dist = 0.0
            for k in range(q):
                dist += abs(lcounts[k] / n - 1.0 / q)
            if dist <= radius:
                return t + 1
    return -1


@numba.njit(**_NJIT)
def init_uniform(spins, q, key, salt):
    for i in range(spins.size):
        u = uniform01(key, np.uint64(i), salt)
        spins[i] = int(u * q)
