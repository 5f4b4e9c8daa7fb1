"""Mixing diagnostics: exact TV decay on the projected chain, coupling-time
scaling, and a metastable-escape probe.

The magnetization pair (left counts, right counts) is itself a Markov chain:
update laws depend on the opposite side's magnetization only, so lumping the
full configuration chain over count pairs is exact. Its state space has size
binom(n+q-1, q-1)^2, which keeps exact total-variation curves computable for
small n. These projected TV distances are a lower bound on the full-chain
distance (an honest surrogate, reported as such); the coupling probability
P(X_t != Y_t) is the matching upper bound.

Large-n behaviour is measured by Monte Carlo: coupling times from adversarial
starts fitted against a * n log n, and (past the transition) hitting times of
a neighbourhood of the uniform magnetization started from the fully ordered
state. Escape runs that exhaust their step budget are censored; their reported
times are lower bounds.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import ChainState, g_weights
from .model import LatticePoint, ModelParams, lattice_count_vectors
from .coupling import run_coupling
from .rng import RngSpec

DEFAULT_PROJECTED_CAP = 100_000


@dataclass(frozen=True)
class ProjectedChain:
    """Markov chain of the magnetization pair on the lattice-simplex product."""

    params: ModelParams
    points: tuple[LatticePoint, ...]
    kernel: np.ndarray  # (L^2, L^2), pair state i*L + j

    @property
    def n_side(self) -> int:
        return len(self.points)

    def pair_index(self, left: LatticePoint, right: LatticePoint) -> int:
        lut = {tuple(p.counts.tolist()): i for i, p in enumerate(self.points)}
        return lut[tuple(left.counts.tolist())] * len(self.points) + lut[
            tuple(right.counts.tolist())
        ]


def projected_kernel(params: ModelParams, cap: int = DEFAULT_PROJECTED_CAP) -> ProjectedChain:
    """Transition matrix of the magnetization-pair chain.

    From (z, w): with probability (1/2) * z_m/n * g_k(w) the left point moves
    by (e_k - e_m)/n, and symmetrically on the right.
    """
    vecs = lattice_count_vectors(params.q, params.n)
    num = len(vecs)
    states = num * num
    if states > cap:
        raise ValueError(
            f"projected chain has {states} states for (q={params.q}, n={params.n}), "
            f"exceeding the cap {cap}"
        )
    q, n, beta = params.q, params.n, params.beta
    lut = {tuple(v): i for i, v in enumerate(vecs.tolist())}
    g_of = np.array([g_weights(v / n, beta) for v in vecs])  # update law per opposite point
    kernel = np.zeros((states, states))
    for i, z in enumerate(vecs):
        for j, w in enumerate(vecs):
            s = i * num + j
            for m in range(q):
                if z[m] == 0:
                    continue
                sel = z[m] / n
                for k in range(q):
                    p = 0.5 * sel * g_of[j][k]
                    if k == m:
                        kernel[s, s] += p
                        continue
                    z2 = z.copy()
                    z2[m] -= 1
                    z2[k] += 1
                    kernel[s, lut[tuple(z2.tolist())] * num + j] += p
            for m in range(q):
                if w[m] == 0:
                    continue
                sel = w[m] / n
                for k in range(q):
                    p = 0.5 * sel * g_of[i][k]
                    if k == m:
                        kernel[s, s] += p
                        continue
                    w2 = w.copy()
                    w2[m] -= 1
                    w2[k] += 1
                    kernel[s, i * num + lut[tuple(w2.tolist())]] += p
    points = tuple(LatticePoint(v) for v in vecs)
    return ProjectedChain(params=params, points=points, kernel=kernel)


def stationary_distribution(chain: ProjectedChain) -> np.ndarray:
    """Stationary law of the projected chain by a direct linear solve."""
    k = chain.kernel
    s = k.shape[0]
    a = np.vstack([k.T - np.eye(s), np.ones((1, s))])
    b = np.zeros(s + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


@dataclass(frozen=True)
class TvCurve:
    """Worst-start total variation distance to stationarity per step."""

    times: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        d = self.distances
        if d[0] > 1.0 + 1e-12:
            raise ValueError("d(0) exceeds 1")
        if np.any(np.diff(d) > 1e-12):
            raise ValueError("TV curve is not nonincreasing within tolerance")

    @property
    def t_mix_quarter(self) -> int | None:
        hits = np.flatnonzero(self.distances <= 0.25)
        return int(self.times[hits[0]]) if hits.size else None

    def t_mix(self, eps: float) -> int | None:
        hits = np.flatnonzero(self.distances <= eps)
        return int(self.times[hits[0]]) if hits.size else None


def exact_tv_curve(
    params: ModelParams,
    t_max: int,
    starts: str = "all",
    cap: int = DEFAULT_PROJECTED_CAP,
) -> TvCurve:
    """Exact projected-chain d(t) = max over starts of TV(K^t(x, .), pi).

    `starts` is "all" (every pair state) or "corners" (the q*q fully ordered
    pairs); the corner starts are the adversarial ones and realize the maximum
    in practice.
    """
    chain = projected_kernel(params, cap)
    pi = stationary_distribution(chain)
    num = chain.n_side
    if starts == "all":
        dist = np.eye(num * num)
    elif starts == "corners":
        corner_ids = []
        for a in range(params.q):
            pt = np.zeros(params.q, dtype=np.int64)
            pt[a] = params.n
            corner_ids.append(LatticePoint(pt))
        rows = []
        for a in corner_ids:
            for b in corner_ids:
                rows.append(chain.pair_index(a, b))
        dist = np.zeros((len(rows), num * num))
        dist[np.arange(len(rows)), rows] = 1.0
    else:
        raise ValueError("starts must be 'all' or 'corners'")
    times = np.arange(t_max + 1)
    d = np.empty(t_max + 1)
    for t in range(t_max + 1):
        d[t] = 0.5 * np.abs(dist - pi).sum(axis=1).max()
        if t < t_max:
            dist = dist @ chain.kernel
    return TvCurve(times=times, distances=d)


def _map_replicas(fn, count: int, threads: int):
    if threads <= 1:
        return [fn(r) for r in range(count)]
    out = [None] * count
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for r, res in enumerate(pool.map(fn, range(count))):
            out[r] = res
    return out


@dataclass(frozen=True)
class ScalingFit:
    """Mean coupling times against a * n log n."""

    n_values: np.ndarray
    mean_coupling_times: np.ndarray
    stderrs: np.ndarray
    slope_a: float
    r_squared: float
    timeouts: np.ndarray  # per n, replicas that hit t_max (excluded from means)


def coupling_time_scaling(
    q: int,
    beta: float,
    n_list: list[int],
    replicas: int,
    seed: int,
    t_max_factor: float = 200.0,
    threads: int = 1,
) -> ScalingFit:
    """Coupling times from adversarial starts (all-spin-0 vs all-spin-1 on both sides).

    For each n, `replicas` coupled runs with per-replica streams; the means are
    least-squares fitted through the origin against n log n. Timed-out
    replicas (t_max = t_max_factor * n log n) are excluded from the fit and
    reported.
    """
    from . import phase

    if q >= 3 and beta >= phase.beta_mixing(q):
        import warnings

        warnings.warn(
            f"beta={beta} is at or above the rapid-mixing threshold "
            f"{phase.beta_mixing(q):.6f}; coupling times may not scale like n log n",
            stacklevel=2,
        )
    means, errs, touts = [], [], []
    for idx, n in enumerate(n_list):
        params = ModelParams(q=q, n=n, beta=beta)
        t_max = int(t_max_factor * n * np.log(n))
        x0 = ChainState.ordered(params, 0)
        y0 = ChainState.ordered(params, 1)

        def one(r: int, _x0=x0, _y0=y0, _t=t_max, _idx=idx) -> int:
            res = run_coupling(_x0, _y0, _t, RngSpec(seed=seed, stream=_idx * replicas + r))
            return -1 if res.timed_out else res.coupling_time

        times = np.array(_map_replicas(one, replicas, threads), dtype=np.float64)
        ok = times[times >= 0]
        touts.append(int(np.sum(times < 0)))
        means.append(ok.mean() if ok.size else np.nan)
        errs.append(ok.std(ddof=1) / np.sqrt(ok.size) if ok.size > 1 else np.nan)
    ns = np.asarray(n_list, dtype=np.float64)
    y = np.asarray(means)
    x = ns * np.log(ns)
    good = np.isfinite(y)
    if good.sum() >= 1:
        slope = float((x[good] @ y[good]) / (x[good] @ x[good]))
        ss_res = float(np.sum((y[good] - slope * x[good]) ** 2))
        ss_tot = float(np.sum((y[good] - y[good].mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        slope, r2 = float("nan"), float("nan")
    return ScalingFit(
        n_values=np.asarray(n_list),
        mean_coupling_times=y,
        stderrs=np.asarray(errs),
        slope_a=slope,
        r_squared=r2,
        timeouts=np.asarray(touts),
    )


def mean_coupling_time(
    q: int,
    beta: float,
    n: int,
    replicas: int,
    seed: int,
    t_max: int,
    threads: int = 1,
) -> tuple[float, float, int]:
    """Censored mean coupling time from adversarial starts: (mean, stderr, timeouts).

    Runs that do not coalesce by t_max contribute t_max, so in slow regimes
    the mean is a lower bound on the true value.
    """
    params = ModelParams(q=q, n=n, beta=beta)
    x0 = ChainState.ordered(params, 0)
    y0 = ChainState.ordered(params, 1)

    def one(r: int) -> int:
        res = run_coupling(x0, y0, t_max, RngSpec(seed=seed, stream=r))
        return t_max if res.timed_out else res.coupling_time

    times = np.array(_map_replicas(one, replicas, threads), dtype=np.float64)
    timeouts = int(np.sum(times >= t_max))
    err = times.std(ddof=1) / np.sqrt(times.size) if times.size > 1 else float("nan")
    return float(times.mean()), float(err), timeouts


@dataclass(frozen=True)
class EscapeTable:
    """Hitting times of the near-uniform magnetization set from the ordered start."""

    n_values: np.ndarray
    mean_times: np.ndarray  # censored runs contribute t_max (lower bounds)
    stderrs: np.ndarray
    censored: np.ndarray  # per n, replicas that never entered the target set
    t_maxes: np.ndarray
    radius: float


def escape_radius(q: int, beta: float) -> float:
    """Half the l1 distance from the uniform vector to the ordered macrostate."""
    from . import phase

    s = phase.solve_s(beta, q)
    if s <= 0:
        raise ValueError(
            f"beta={beta} has no ordered macrostate; pass an explicit radius"
        )
    return (q - 1) * s / q


def slow_mixing_probe(
    q: int,
    beta: float,
    n_list: list[int],
    replicas: int,
    seed: int,
    t_max_factor: float = 2000.0,
    radius: float | None = None,
    threads: int = 1,
) -> EscapeTable:
    """Escape times from the fully ordered configuration toward uniform magnetization.

    Measures, per n, the mean number of steps until the left magnetization
    enters the l1-ball of the given radius around uniform (default: half the
    distance to the ordered macrostate direction, which requires beta above
    the spinodal). Runs hitting t_max are censored at t_max, so past the
    transition the reported means are lower bounds that grow super-linearly
    with n.
    """
    if radius is None:
        radius = escape_radius(q, beta)
    means, errs, cens, tms = [], [], [], []
    for idx, n in enumerate(n_list):
        params = ModelParams(q=q, n=n, beta=beta)
        t_max = int(t_max_factor * n * np.log(n))

        def one(r: int, _p=params, _t=t_max, _idx=idx) -> int:
            state = ChainState.ordered(_p, 0)
            rng = RngSpec(seed=seed, stream=_idx * replicas + r)
            t = _kernels.escape_time(
                state.left,
                state.right,
                state.lcounts,
                state.rcounts,
                _p.beta,
                rng.key,
                0,
                _t,
                radius,
            )
            return int(t)

        raw = np.array(_map_replicas(one, replicas, threads), dtype=np.float64)
        censored = raw < 0
        raw[censored] = t_max
        means.append(raw.mean())
        errs.append(raw.std(ddof=1) / np.sqrt(raw.size) if raw.size > 1 else np.nan)
        cens.append(int(censored.sum()))
        tms.append(t_max)
    return EscapeTable(
        n_values=np.asarray(n_list),
        mean_times=np.asarray(means),
        stderrs=np.asarray(errs),
        censored=np.asarray(cens),
        t_maxes=np.asarray(tms),
        radius=float(radius),
    )
