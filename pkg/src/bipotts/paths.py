"""Monotone configuration paths and contraction diagnostics for the coupling bound.

A monotone path between two configurations changes one site per flip, moves
sites only from spins with surplus count (relative to the target
magnetization) to spins with deficit, and never revisits a site. Consequently
every magnetization coordinate on each side is monotone along the path, link
distances add up to the endpoint distance, and each flip advances the combined
magnetization l1 distance by exactly 2/n. Flips are ordered so both sides and
all surplus->deficit flows advance proportionally, keeping waypoints close to
the straight line between the endpoint magnetizations; grouping ceil(eps*n/2)
flips per link makes every link's magnetization increment land in [eps, 2*eps)
except for one permitted shorter trailing link.

The target of the construction is the endpoint's magnetization: site labels of
the second configuration are not reproduced (for general endpoint pairs the
per-site flip flow is cyclic and no path can satisfy the surplus->deficit
monotonicity site-exactly), so the final waypoint is a canonical
representative with the requested counts.

The contraction functional aggregates softmax variation along a path: the sum
over spin components of the path integral of |<grad g_k, dx>|. Its discrete
form over path links converges to the continuous line integral as eps -> 0,
and the ratio of aggregate variation to endpoint l1 distance below 1 is the
certificate the coupling-time bound rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import g_jacobian, g_weights
from .model import (
    BipartiteConfig,
    LatticePoint,
    MagnetizationPair,
    ProbVector,
    SpinConfig,
)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach tolerance at maximum depth."""


@dataclass(frozen=True)
class MonotonePath:
    """Waypoint sequence from a start configuration toward a target magnetization."""

    waypoints: tuple[BipartiteConfig, ...]
    epsilon: float

    @property
    def links(self) -> int:
        return len(self.waypoints) - 1

    def magnetizations(self) -> list[MagnetizationPair]:
        out = []
        for cfg in self.waypoints:
            lc = np.bincount(cfg.left.spins, minlength=cfg.q)
            rc = np.bincount(cfg.right.spins, minlength=cfg.q)
            out.append(MagnetizationPair(LatticePoint(lc), LatticePoint(rc)))
        return out


def _side_flows(
    spins: np.ndarray, target_counts: np.ndarray, q: int
) -> list[tuple[list[int], int]]:
    """Flip flows ([site indices], new_spin) moving one side to the target counts.

    The transport plan between surplus and deficit spins is the
    northwest-corner rule; sites are taken in ascending index order.
    """
    counts = np.bincount(spins, minlength=q)
    surplus = {u: int(counts[u] - target_counts[u]) for u in range(q) if counts[u] > target_counts[u]}
    deficit = {v: int(target_counts[v] - counts[v]) for v in range(q) if counts[v] < target_counts[v]}
    sites_by_spin = {u: [int(i) for i in np.flatnonzero(spins == u)] for u in surplus}
    used = {u: 0 for u in surplus}

    flows = []
    d_iter = iter(sorted(deficit))
    v = next(d_iter, None)
    room = deficit.get(v, 0)
    for u in sorted(surplus):
        remaining = surplus[u]
        while remaining > 0:
            take = min(remaining, room)
            sites = sites_by_spin[u][used[u] : used[u] + take]
            used[u] += take
            flows.append((sites, v))
            remaining -= take
            room -= take
            if room == 0:
                v = next(d_iter, None)
                room = deficit.get(v, 0)
    return flows


def _largest_remainder_order(sizes: list[int]) -> list[int]:
    """Index sequence interleaving groups proportionally (within one unit at all times)."""
    total = sum(sizes)
    done = [0] * len(sizes)
    order = []
    for m in range(1, total + 1):
        best = -1
        best_lag = -np.inf
        for idx, size in enumerate(sizes):
            if done[idx] >= size:
                continue
            lag = m * size / total - done[idx]
            if lag > best_lag:
                best_lag = lag
                best = idx
        order.append(best)
        done[best] += 1
    return order


def _schedule_flips(flows: list[tuple[int, list[int], int]]) -> list[tuple[int, int, int]]:
    """Merge flows into one flip sequence with proportional progress.

    flows: (side, sites, new_spin). Scheduling is two-level largest remainder:
    the two sides alternate in proportion to their flip counts, and within a
    side its flows do the same, so every magnetization coordinate stays within
    one flip of the straight-line parametrization and links mix both sides.
    """
    by_side: dict[int, list[tuple[list[int], int]]] = {0: [], 1: []}
    for side, sites, spin in flows:
        by_side[side].append((sites, spin))
    side_orders = {}
    for side, fl in by_side.items():
        order = _largest_remainder_order([len(sites) for sites, _ in fl])
        done = [0] * len(fl)
        seq = []
        for idx in order:
            sites, spin = fl[idx]
            seq.append((side, sites[done[idx]], spin))
            done[idx] += 1
        side_orders[side] = seq
    side_seq = _largest_remainder_order(
        [len(side_orders[0]), len(side_orders[1])]
    )
    cursor = [0, 0]
    merged = []
    for side in side_seq:
        merged.append(side_orders[side][cursor[side]])
        cursor[side] += 1
    return merged


def build_monotone_path(a: BipartiteConfig, b: BipartiteConfig, epsilon: float) -> MonotonePath:
    """Monotone path from `a` to a configuration with `b`'s magnetization pair."""
    if a.n != b.n or a.q != b.q:
        raise ValueError("endpoints must share (q, n)")
    n, q = a.n, a.q
    if not (0.0 < epsilon < 2.0):
        raise ValueError(f"epsilon must lie in (0, 2), got {epsilon}")
    if epsilon * n <= 1.0:
        raise ValueError(
            f"epsilon={epsilon} too small for n={n}: a single flip moves the combined "
            f"magnetization by 2/n, which must stay below 2*epsilon"
        )

    flows = [
        (0, sites, spin)
        for sites, spin in _side_flows(a.left.spins, np.bincount(b.left.spins, minlength=q), q)
    ]
    flows += [
        (1, sites, spin)
        for sites, spin in _side_flows(a.right.spins, np.bincount(b.right.spins, minlength=q), q)
    ]
    merged = _schedule_flips(flows)

    per_link = math.ceil(epsilon * n / 2.0)
    left = a.left.spins.copy()
    right = a.right.spins.copy()
    waypoints = [a]
    for start in range(0, len(merged), per_link):
        for side, site, spin in merged[start : start + per_link]:
            if side == 0:
                left[site] = spin
            else:
                right[site] = spin
        waypoints.append(
            BipartiteConfig(SpinConfig(left.copy(), q), SpinConfig(right.copy(), q))
        )
    return MonotonePath(waypoints=tuple(waypoints), epsilon=epsilon)


def assert_valid(path: MonotonePath) -> None:
    """Audit the defining path properties; raises ValueError on any violation.

    Checks: per-link distances sum to the endpoint distance, every
    magnetization coordinate on each side is monotone in the link index, and
    each link moves the combined magnetization l1 distance by an amount in
    [eps, 2*eps), short trailing link excepted.
    """
    from .model import config_distance

    wps = path.waypoints
    if len(wps) == 1:
        return
    total = config_distance(wps[0], wps[-1])
    link_sum = sum(config_distance(wps[i - 1], wps[i]) for i in range(1, len(wps)))
    if link_sum != total:
        raise ValueError(f"link distances sum to {link_sum}, endpoint distance is {total}")

    mags = path.magnetizations()
    n = wps[0].n
    for side in ("left", "right"):
        series = np.array([getattr(m, side).counts for m in mags])
        diffs = np.diff(series, axis=0)
        for k in range(series.shape[1]):
            col = diffs[:, k]
            if np.any(col > 0) and np.any(col < 0):
                raise ValueError(f"{side} magnetization coordinate {k} is not monotone")

    eps = path.epsilon
    for i in range(1, len(wps)):
        inc = (
            np.abs(mags[i].left.counts - mags[i - 1].left.counts).sum()
            + np.abs(mags[i].right.counts - mags[i - 1].right.counts).sum()
        ) / n
        if i < len(wps) - 1 and not (eps <= inc < 2 * eps):
            raise ValueError(f"link {i} increment {inc} outside [{eps}, {2*eps})")
        if i == len(wps) - 1 and inc >= 2 * eps:
            raise ValueError(f"trailing link increment {inc} too large")


def discrete_aggregate_variation(path: MonotonePath, beta: float) -> tuple[float, float]:
    """Aggregated softmax variation along the path links, one sum per side.

    Each term is |<delta magnetization, grad g_k>| evaluated at the link's
    starting waypoint; these are the Riemann sums of the continuous aggregate
    variation along the path traced by the magnetizations.
    """
    mags = path.magnetizations()
    n = path.waypoints[0].n
    s1 = 0.0
    s2 = 0.0
    for i in range(1, len(mags)):
        for side_idx, prev, cur in (
            (0, mags[i - 1].left, mags[i].left),
            (1, mags[i - 1].right, mags[i].right),
        ):
            delta = (cur.counts - prev.counts) / n
            if not delta.any():
                continue
            jac = g_jacobian(prev.counts / n, beta)
            contrib = float(np.abs(jac @ delta).sum())
            if side_idx == 0:
                s1 += contrib
            else:
                s2 += contrib
    return s1, s2


def _variation_integrand(a: np.ndarray, d: np.ndarray, beta: float):
    def f(t: float) -> float:
        jac = g_jacobian(a + t * d, beta)
        return float(np.abs(jac @ d).sum())

    return f


def _adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, tol, depth):
    mid = 0.5 * (lo + hi)
    lmid = 0.5 * (lo + mid)
    rmid = 0.5 * (mid + hi)
    flm = f(lmid)
    frm = f(rmid)
    left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
    right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
    if abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    if depth <= 0:
        raise QuadratureError(
            f"interval [{lo}, {hi}] did not reach tolerance {tol} at maximum depth"
        )
    return _adaptive_simpson(
        f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1
    ) + _adaptive_simpson(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1)


def continuous_aggregate_variation(
    a_mag: ProbVector | np.ndarray,
    b_mag: ProbVector | np.ndarray,
    beta: float,
    quad_points: int = 16,
    rel_tol: float = 1e-8,
    max_depth: int = 40,
) -> float:
    """Aggregate softmax variation along the straight line from a_mag to b_mag.

    sum_k integral_0^1 |<b - a, grad g_k((1-t)a + t b)>| dt by composite
    adaptive Simpson; the integrand's kinks (inner products crossing zero) are
    resolved by interval halving.
    """
    if quad_points < 2:
        raise ValueError("quad_points must be >= 2")
    a = a_mag.weights if isinstance(a_mag, ProbVector) else np.asarray(a_mag, dtype=np.float64)
    b = b_mag.weights if isinstance(b_mag, ProbVector) else np.asarray(b_mag, dtype=np.float64)
    d = b - a
    if not d.any():
        return 0.0
    f = _variation_integrand(a, d, beta)
    knots = np.linspace(0.0, 1.0, quad_points + 1)
    vals = [f(t) for t in knots]
    rough = sum(
        (knots[i + 1] - knots[i]) / 6.0 * (vals[i] + 4.0 * f(0.5 * (knots[i] + knots[i + 1])) + vals[i + 1])
        for i in range(quad_points)
    )
    tol = rel_tol * max(abs(rough), 1e-12)
    total = 0.0
    for i in range(quad_points):
        lo, hi = knots[i], knots[i + 1]
        fmid = f(0.5 * (lo + hi))
        whole = (hi - lo) / 6.0 * (vals[i] + 4.0 * fmid + vals[i + 1])
        total += _adaptive_simpson(
            f, lo, hi, vals[i], fmid, vals[i + 1], whole, tol / quad_points, max_depth
        )
    return total


def contraction_ratio(
    start: tuple[ProbVector, ProbVector],
    end: tuple[ProbVector, ProbVector],
    beta: float,
    quad_points: int = 16,
) -> float:
    """Aggregate variation along the straight pair-path over the endpoint l1 distance.

    Below 1 for endpoints near the uniform pair in the rapid-mixing regime;
    at and past the transition, paths between ordered states stop contracting.
    """
    dl = float(np.abs(start[0].weights - end[0].weights).sum())
    dr = float(np.abs(start[1].weights - end[1].weights).sum())
    if dl + dr == 0.0:
        raise ValueError("endpoints coincide; contraction ratio undefined")
    var = continuous_aggregate_variation(start[0], end[0], beta, quad_points)
    var += continuous_aggregate_variation(start[1], end[1], beta, quad_points)
    return var / (dl + dr)


def lipschitz_ratio_near_rho(
    beta: float, q: int, radius: float = 1e-3, samples: int = 10_000, seed: int = 0
) -> float:
    """Worst sampled ratio ||g(x) - g(rho)||_1 / ||x - rho||_1 near the uniform vector.

    Samples x with l1 distance in (0, radius]; as radius -> 0 the ratio
    approaches the l1 operator norm of the softmax Jacobian at rho restricted
    to the simplex tangent space, which is beta/q.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    rho = np.full(q, 1.0 / q)
    g_rho = g_weights(rho, beta)
    worst = 0.0
    count = 0
    while count < samples:
        d = rng.standard_normal(q)
        d -= d.mean()
        norm = np.abs(d).sum()
        if norm < 1e-12:
            continue
        r = radius * rng.uniform(1e-3, 1.0)
        x = rho + (r / norm) * d
        if np.any(x < 0):
            continue
        ratio = float(np.abs(g_weights(x, beta) - g_rho).sum()) / r
        worst = max(worst, ratio)
        count += 1
    return worst
