import numpy as np
import pytest

from bipotts import exact, mixing, phase
from bipotts.model import LatticePoint, ModelParams, lattice_count_vectors


class TestProjectedKernel:
    def test_rows_stochastic(self):
        ch = mixing.projected_kernel(ModelParams(q=3, n=4, beta=1.2))
        assert np.abs(ch.kernel.sum(axis=1) - 1).max() <= 1e-12

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            mixing.projected_kernel(ModelParams(q=3, n=40, beta=1.0), cap=100)

    def test_stationary_matches_pushforward(self):
        params = ModelParams(q=3, n=4, beta=1.2)
        ch = mixing.projected_kernel(params)
        pi = mixing.stationary_distribution(ch)
        pf = exact.magnetization_pushforward(exact.build_ensemble(params))
        assert np.abs(pi - pf.probs.ravel()).max() <= 1e-12

    def test_beta_zero_sides_factorize(self):
        # at beta=0 each side is an independent uniform-resampling urn
        q, n = 2, 3
        params = ModelParams(q=q, n=n, beta=0.0)
        ch = mixing.projected_kernel(params)
        vecs = lattice_count_vectors(q, n)
        num = len(vecs)
        urn = np.zeros((num, num))
        lut = {tuple(v): i for i, v in enumerate(vecs.tolist())}
        for i, z in enumerate(vecs):
            for m in range(q):
                if z[m] == 0:
                    continue
                for k in range(q):
                    z2 = z.copy()
                    z2[m] -= 1
                    z2[k] += 1
                    urn[i, lut[tuple(z2.tolist())]] += (z[m] / n) * (1 / q)
        expected = 0.5 * (np.kron(urn, np.eye(num)) + np.kron(np.eye(num), urn))
        assert np.abs(ch.kernel - expected).max() <= 1e-14


class TestTvCurve:
    def test_monotone_and_finite_mixing(self):
        curve = mixing.exact_tv_curve(ModelParams(q=3, n=4, beta=1.0), t_max=120)
        assert np.all(np.diff(curve.distances) <= 1e-12)
        assert curve.distances[0] <= 1.0
        assert curve.t_mix_quarter is not None
        assert curve.distances[-1] < 0.25

    def test_corner_starts_realize_maximum(self):
        params = ModelParams(q=3, n=4, beta=1.0)
        full = mixing.exact_tv_curve(params, t_max=50, starts="all")
        corner = mixing.exact_tv_curve(params, t_max=50, starts="corners")
        assert np.abs(full.distances - corner.distances).max() <= 1e-13

    def test_beta_zero_geometric_rate(self):
        n = 2
        curve = mixing.exact_tv_curve(ModelParams(q=2, n=n, beta=0.0), t_max=60)
        d = curve.distances
        # asymptotic decay rate bounded by the single-site refresh rate
        for t in range(30, 55):
            assert d[t + 1] <= (1 - 1 / (2 * n)) * d[t] + 1e-13

    def test_invalid_starts(self):
        with pytest.raises(ValueError):
            mixing.exact_tv_curve(ModelParams(q=2, n=2, beta=0.5), 10, starts="edges")


class TestSandwich:
    def test_projected_tv_below_coupling_bound(self):
        # lower-bound surrogate (projected TV from the corner pair) stays
        # below the coupling upper bound P(X_t != Y_t) + 3 s.e., Y_0 ~ Gibbs
        from bipotts.coupling import run_coupling
        from bipotts.dynamics import ChainState
        from bipotts.rng import RngSpec

        q, n = 3, 4
        params = ModelParams(q=q, n=n, beta=1.0)
        ch = mixing.projected_kernel(params)
        pi = mixing.stationary_distribution(ch)
        corner = np.zeros(q, dtype=np.int64)
        corner[0] = n
        start_idx = ch.pair_index(LatticePoint(corner), LatticePoint(corner))
        t_max = 100
        dist = np.zeros(len(pi))
        dist[start_idx] = 1.0
        tv = np.empty(t_max + 1)
        for t in range(t_max + 1):
            tv[t] = 0.5 * np.abs(dist - pi).sum()
            if t < t_max:
                dist = dist @ ch.kernel

        ens = exact.build_ensemble(params)
        gen = np.random.default_rng(17)
        reps = 3000
        x_cfg = ChainState.ordered(params, 0)
        meet = np.zeros((reps, t_max + 1))
        for r in range(reps):
            y_idx = gen.choice(len(ens.probs), p=ens.probs)
            y0 = ChainState.from_config(params, exact.index_to_config(int(y_idx), q, n))
            res = run_coupling(x_cfg, y0, t_max, RngSpec(seed=23, stream=r), trace_stride=1)
            tr = res.trace
            for t in range(t_max + 1):
                meet[r, t] = 1.0 if (t < tr.size and tr[t] > 0) or (t >= tr.size and res.timed_out) else 0.0
        # adjusted (Agresti-Coull) s.e.: the plug-in formula degenerates to 0
        # once every replica has coalesced, below the MC resolution
        counts = meet.sum(axis=0)
        p_tilde = (counts + 2) / (reps + 4)
        se = np.sqrt(p_tilde * (1 - p_tilde) / (reps + 4))
        p_hat = meet.mean(axis=0)
        for t in range(1, t_max + 1):
            assert tv[t] <= p_hat[t] + 3 * se[t] + 1e-12


class TestCouplingTimeScaling:
    def test_beta_zero_coupon_collector(self):
        # identity coupling at beta=0: coupling time is the time to refresh
        # every one of the 2n initially discrepant sites at least once
        n = 64
        fit = mixing.coupling_time_scaling(3, 0.0, [n], replicas=200, seed=5)
        expected = 2 * n * (np.log(2 * n) + np.euler_gamma)
        assert fit.timeouts[0] == 0
        assert abs(fit.mean_coupling_times[0] - expected) / expected < 0.1

    def test_deep_subcritical_fit(self):
        fit = mixing.coupling_time_scaling(3, 0.5, [32, 64, 128], replicas=60, seed=6)
        assert fit.r_squared >= 0.95
        assert fit.slope_a > 0
        assert np.all(fit.timeouts == 0)

    def test_warns_above_threshold(self):
        with pytest.warns(UserWarning, match="threshold"):
            mixing.coupling_time_scaling(3, 3.5, [8], replicas=2, seed=7, t_max_factor=5.0)

    def test_threads_do_not_change_results(self):
        a = mixing.coupling_time_scaling(3, 0.5, [32], replicas=16, seed=8, threads=1)
        b = mixing.coupling_time_scaling(3, 0.5, [32], replicas=16, seed=8, threads=4)
        assert np.array_equal(a.mean_coupling_times, b.mean_coupling_times)


class TestSlowMixingProbe:
    def test_radius_default_requires_ordered_macrostate(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(ValueError, match="radius"):
                mixing.escape_radius(3, 0.5)

    def test_deterministic(self):
        beta = phase.beta_critical(3) + 0.5
        a = mixing.slow_mixing_probe(3, beta, [32], replicas=8, seed=9, t_max_factor=50.0)
        b = mixing.slow_mixing_probe(3, beta, [32], replicas=8, seed=9, t_max_factor=50.0)
        assert np.array_equal(a.mean_times, b.mean_times)
        assert np.array_equal(a.censored, b.censored)

    def test_subcritical_control_is_fast(self):
        beta_slow = phase.beta_critical(3) + 0.5
        radius = mixing.escape_radius(3, beta_slow)
        tab = mixing.slow_mixing_probe(
            3, 0.5, [32, 128], replicas=20, seed=10, t_max_factor=100.0, radius=radius
        )
        assert np.all(tab.censored == 0)
        # subcritical escape grows roughly like n log n, far from exponential
        assert tab.mean_times[1] / tab.mean_times[0] < 20

    def test_supercritical_censors(self):
        beta = phase.beta_critical(3) + 0.5
        tab = mixing.slow_mixing_probe(3, beta, [128], replicas=6, seed=11, t_max_factor=100.0)
        assert tab.censored[0] == 6  # never escapes within the budget


def test_mean_coupling_time_censoring():
    m, e, t = mixing.mean_coupling_time(3, 3.5, n=32, replicas=4, seed=12, t_max=500)
    assert t == 4 and m == 500.0
    m2, _, t2 = mixing.mean_coupling_time(3, 0.5, n=32, replicas=4, seed=12, t_max=100_000)
    assert t2 == 0 and m2 < 100_000
