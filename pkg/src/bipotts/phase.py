"""Phase-structure solvers: critical point, mean-field roots, macrostates, mixing threshold.

For q >= 3 the equilibrium transition is first order at

    beta_c(q) = (2(q-1)/(q-2)) * log(q-1),

where q non-uniform maximizers appear at distance from the uniform vector rho.
They sit on the one-parameter family phi(s) (one enlarged coordinate, the rest
equal), with s(beta) the largest root of the scalar fixed-point equation

    s = (1 - exp(-beta*s)) / (1 + (q-1)*exp(-beta*s)).

The dynamical threshold beta_s(q) is where the softmax map first stops pulling
every enlarged coordinate down toward 1/q; it coincides with the spinodal of
the fixed-point equation (first appearance of a positive root) and is strictly
below beta_c. It is computed by locating the tangency of the worst-case excess
h(t) = softmax_gap(t) over t in (1/q, 1], with a brute grid scan available as
an independent oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .free_energy import alpha_diag
from .model import ProbVector, lattice_count_vectors, uniform_prob

CRITICAL_WINDOW = 1e-9


def _require_q3(q: int) -> None:
    if int(q) != q or q <= 2:
        raise ValueError(
            f"phase formulas require integer q >= 3 (first-order regime); got q={q}"
        )


def beta_critical(q: int) -> float:
    """Equilibrium transition point (2(q-1)/(q-2)) log(q-1); singular at q=2."""
    _require_q3(q)
    return 2.0 * (q - 1) / (q - 2) * np.log(q - 1)


def phi(s: float, q: int) -> ProbVector:
    """One-coordinate-enlarged direction: (1+(q-1)s, 1-s, ..., 1-s)/q."""
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"s must lie in [0, 1], got {s}")
    w = np.full(q, (1.0 - s) / q)
    w[0] = (1.0 + (q - 1) * s) / q
    return ProbVector(w)


def _fixed_point_residual(s: float, beta: float, q: int) -> float:
    e = np.exp(-beta * s)
    return (1.0 - e) / (1.0 + (q - 1) * e) - s


def solve_s(beta: float, q: int, tol: float = 1e-12) -> float:
    """Largest root of the mean-field fixed-point equation on [0, 1].

    Below the spinodal the only root is s = 0; that value is returned with a
    warning. At and above beta_c the root satisfies s(beta_c) = (q-2)/(q-1)
    and increases to 1.
    """
    _require_q3(q)
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = np.linspace(1e-8, 1.0, 4001)
    vals = np.array([_fixed_point_residual(s, beta, q) for s in grid])
    i = int(vals.argmax())
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda s: -_fixed_point_residual(s, beta, q),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-14},
    )
    peak_s, peak = float(res.x), float(-res.fun)
    if peak <= 0.0:
        warnings.warn(
            f"no positive fixed point at beta={beta} (below the spinodal); returning s=0",
            stacklevel=2,
        )
        return 0.0
    root = brentq(
        _fixed_point_residual, peak_s, 1.0, args=(beta, q), xtol=1e-15, rtol=8.9e-16
    )
    if abs(_fixed_point_residual(root, beta, q)) > tol:
        raise RuntimeError(f"root residual exceeds tol={tol} at beta={beta}")
    return float(root)


def sup_alpha(q: int, beta: float) -> float:
    """Global maximum of the pair score alpha over the product simplex.

    All maxima lie on the diagonal, so this is twice the best single-vector
    score among the uniform vector and the enlarged-coordinate candidate.
    """
    _require_q3(q)
    best = alpha_diag(beta, uniform_prob(q))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = solve_s(beta, q)
    if s > 0:
        best = max(best, alpha_diag(beta, phi(s, q)))
    return 2.0 * best


@dataclass(frozen=True)
class PhasePoint:
    """Classified phase structure at one inverse temperature."""

    beta: float
    s: float
    macrostates: tuple[ProbVector, ...]
    regime: str  # subcritical | critical | supercritical


def _permutations_of_phi(s: float, q: int) -> list[ProbVector]:
    base = phi(s, q).weights
    out = []
    for i in range(q):
        w = base.copy()
        w[0], w[i] = w[i], w[0]
        out.append(ProbVector(w))
    return out


def macrostates(beta: float, q: int, window: float = CRITICAL_WINDOW) -> PhasePoint:
    """Diagonal maximizers of the pair score and the regime label.

    Exactly critical beta is measure-zero in floating point, so |beta - beta_c|
    <= window classifies as critical (uniform plus all q enlarged candidates).
    """
    _require_q3(q)
    bc = beta_critical(q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = solve_s(beta, q)
    if abs(beta - bc) <= window:
        return PhasePoint(beta, s, tuple([uniform_prob(q)] + _permutations_of_phi(s, q)), "critical")
    if beta < bc:
        return PhasePoint(beta, s, (uniform_prob(q),), "subcritical")
    return PhasePoint(beta, s, tuple(_permutations_of_phi(s, q)), "supercritical")


# --- mixing threshold ---


def _excess(t: float, beta: float, q: int) -> float:
    """Worst-case softmax overshoot at coordinate value t (others spread equally)."""
    a = beta * t
    b = beta * (1.0 - t) / (q - 1)
    m = max(a, b)
    return np.exp(a - m) / (np.exp(a - m) + (q - 1) * np.exp(b - m)) - t


def _max_excess(beta: float, q: int, grid_points: int = 8193) -> tuple[float, float]:
    ts = np.linspace(1.0 / q + 1e-12, 1.0, grid_points)
    vals = np.array([_excess(t, beta, q) for t in ts])
    i = int(vals.argmax())
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, grid_points - 1)]
    res = minimize_scalar(
        lambda t: -_excess(t, beta, q),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-14},
    )
    return float(-res.fun), float(res.x)


def beta_mixing(q: int, tol: float = 1e-10, grid_points: int = 8193) -> float:
    """Dynamical threshold beta_s(q): tangency of the worst-case softmax excess.

    Bisection brackets the first beta at which some t in (1/q, 1] has
    softmax weight >= t; a 2-d Newton polish on (h, dh/dt) = (0, 0) then
    sharpens the tangency to machine precision. beta_s(q) < beta_c(q).
    """
    _require_q3(q)
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 1.0, beta_critical(q)
    trace = []
    m_lo, _ = _max_excess(lo, q, grid_points)
    m_hi, _ = _max_excess(hi, q, grid_points)
    trace.extend([(lo, m_lo), (hi, m_hi)])
    if not (m_lo < -1e-13 < 1e-13 < m_hi):
        raise RuntimeError(f"mixing-threshold bracket failed: {trace}")
    while hi - lo > max(tol, 1e-11):
        mid = 0.5 * (lo + hi)
        m_mid, _ = _max_excess(mid, q, grid_points)
        trace.append((mid, m_mid))
        if m_mid > 1e-13:
            hi = mid
        else:
            lo = mid
    beta = 0.5 * (lo + hi)
    # Newton polish, started from the clearly-positive bump a bit above the
    # bracket so it cannot drift to the degenerate boundary tangency at t=1/q.
    _, t0 = _max_excess(beta + 0.01, q, grid_points)
    beta_n, t_n = _newton_tangency(beta, t0, q)
    if abs(beta_n - beta) < 1e-8 and t_n > 1.0 / q + 0.01:
        return beta_n
    return beta


def _newton_tangency(beta: float, t: float, q: int, iters: int = 60) -> tuple[float, float]:
    """Solve h(t) = 0, dh/dt = 0 for the tangency point (t*, beta_s)."""
    r = q / (q - 1.0)
    for _ in range(iters):
        u = (q * t - 1.0) / (q - 1.0)
        p = 1.0 / (1.0 + (q - 1.0) * np.exp(-beta * u))
        pq = p * (1.0 - p)
        h = p - t
        ht = pq * beta * r - 1.0
        hb = pq * u
        htt = (beta * r) ** 2 * pq * (1.0 - 2.0 * p)
        htb = r * pq * (1.0 + beta * (1.0 - 2.0 * p) * u)
        det = ht * htb - hb * htt
        if det == 0.0:
            break
        dt = (h * htb - hb * ht) / det
        db = (ht * ht - htt * h) / det
        t -= dt
        beta -= db
        if abs(dt) < 1e-15 and abs(db) < 1e-15:
            break
    return float(beta), float(t)


def beta_mixing_grid_oracle(
    q: int,
    simplex_step: float = 1e-3,
    beta_step: float = 1e-3,
    beta_lo: float = 2.0,
    beta_hi: float | None = None,
) -> float:
    """Brute-force threshold: scan beta upward, testing the full simplex grid.

    For each grid point x and coordinate k with x_k > 1/q the condition
    g_k(x) < x_k must hold; the oracle returns the last beta on the scan with
    no violation. Feasible for q = 3 at step 1e-3 (~5e5 grid points).
    """
    _require_q3(q)
    if beta_hi is None:
        beta_hi = beta_critical(q)
    m = int(round(1.0 / simplex_step))
    pts = lattice_count_vectors(q, m) / m
    mask = pts > 1.0 / q + 1e-12
    last_good = None
    for beta in np.arange(beta_lo, beta_hi + beta_step / 2, beta_step):
        e = np.exp(beta * (pts - pts.max(axis=1, keepdims=True)))
        g = e / e.sum(axis=1, keepdims=True)
        if np.any(g[mask] >= pts[mask]):
            break
        last_good = float(beta)
    if last_good is None:
        raise RuntimeError("grid oracle found violations at the scan start; lower beta_lo")
    return last_good
