import numpy as np
import pytest

from bipotts import paths, phase
from bipotts.model import ProbVector, config_from_spins, uniform_prob
from bipotts.phase import phi


def stacked_config(counts_left, counts_right, q):
    def stack(c):
        return np.concatenate([np.full(k, j) for j, k in enumerate(c)])

    return config_from_spins(stack(counts_left), stack(counts_right), q)


class TestBuildMonotonePath:
    def test_trivial(self):
        a = config_from_spins([0, 1, 2], [0, 0, 0], 3)
        p = paths.build_monotone_path(a, a, 0.5)
        assert p.links == 0 and len(p.waypoints) == 1
        paths.assert_valid(p)

    def test_left_side_sweep(self):
        a = config_from_spins([0] * 10, [0] * 10, 3)
        b = config_from_spins([1] * 10, [0] * 10, 3)
        p = paths.build_monotone_path(a, b, 0.4)
        assert p.links == 5
        mags = p.magnetizations()
        for i in range(1, len(mags)):
            inc = (
                np.abs(mags[i].left.counts - mags[i - 1].left.counts).sum()
                + np.abs(mags[i].right.counts - mags[i - 1].right.counts).sum()
            ) / 10
            assert inc == pytest.approx(0.4)
        paths.assert_valid(p)

    def test_random_endpoint_audit(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = 60
            a = config_from_spins(rng.integers(0, 3, n), rng.integers(0, 3, n), 3)
            b = config_from_spins(rng.integers(0, 3, n), rng.integers(0, 3, n), 3)
            p = paths.build_monotone_path(a, b, 0.1)
            paths.assert_valid(p)
            end = p.magnetizations()[-1]
            assert np.array_equal(end.left.counts, np.bincount(b.left.spins, minlength=3))
            assert np.array_equal(end.right.counts, np.bincount(b.right.spins, minlength=3))

    def test_epsilon_validation(self):
        a = config_from_spins([0] * 4, [0] * 4, 2)
        b = config_from_spins([1] * 4, [0] * 4, 2)
        for bad in (0.0, 2.0, -1.0):
            with pytest.raises(ValueError):
                paths.build_monotone_path(a, b, bad)
        with pytest.raises(ValueError, match="too small"):
            paths.build_monotone_path(a, b, 0.25)  # eps * n = 1

    def test_mismatched_endpoints(self):
        a = config_from_spins([0] * 4, [0] * 4, 2)
        b = config_from_spins([1] * 5, [0] * 5, 2)
        with pytest.raises(ValueError):
            paths.build_monotone_path(a, b, 0.5)


class TestDiscreteAggregateVariation:
    def test_trivial_path(self):
        a = config_from_spins([0, 1], [0, 1], 3)
        p = paths.build_monotone_path(a, a, 1.0)
        assert paths.discrete_aggregate_variation(p, 2.0) == (0.0, 0.0)

    def test_beta_zero(self):
        a = config_from_spins([0] * 8, [0] * 8, 3)
        b = config_from_spins([1] * 8, [2] * 8, 3)
        p = paths.build_monotone_path(a, b, 0.5)
        assert paths.discrete_aggregate_variation(p, 0.0) == (0.0, 0.0)


class TestContinuousAggregateVariation:
    def test_equal_endpoints(self):
        assert paths.continuous_aggregate_variation(uniform_prob(3), uniform_prob(3), 2.0) == 0.0

    def test_beta_zero(self):
        v = paths.continuous_aggregate_variation(
            uniform_prob(3), ProbVector([0.8, 0.1, 0.1]), 0.0
        )
        assert v == 0.0

    def test_quadrature_stability(self):
        a = uniform_prob(3)
        b = ProbVector([0.8, 0.1, 0.1])
        v1 = paths.continuous_aggregate_variation(a, b, 1.0, quad_points=8)
        v2 = paths.continuous_aggregate_variation(a, b, 1.0, quad_points=16)
        assert abs(v1 - v2) <= 1e-8 * max(abs(v1), 1.0)

    def test_quad_points_validation(self):
        with pytest.raises(ValueError):
            paths.continuous_aggregate_variation(uniform_prob(3), phi(0.5, 3), 1.0, quad_points=1)

    def test_depth_exhaustion_raises(self):
        with pytest.raises(paths.QuadratureError):
            paths.continuous_aggregate_variation(
                uniform_prob(3), phi(0.9, 3), 25.0, quad_points=2, rel_tol=1e-14, max_depth=1
            )

    def test_riemann_convergence(self):
        n, q, beta = 300, 3, 2.0
        a = stacked_config([160, 70, 70], [100, 100, 100], q)
        b = stacked_config([100, 100, 100], [100, 100, 100], q)
        dg = paths.continuous_aggregate_variation(
            ProbVector(np.array([160, 70, 70]) / n), uniform_prob(3), beta
        )
        gaps = []
        for eps in (0.02, 0.01, 0.005):
            p = paths.build_monotone_path(a, b, eps)
            s1, s2 = paths.discrete_aggregate_variation(p, beta)
            assert s2 == 0.0
            gaps.append(abs(s1 + s2 - dg) / dg)
        assert gaps[0] < 0.02
        assert gaps[0] > gaps[1] > gaps[2]


class TestContractionRatio:
    def test_beta_zero(self):
        r = paths.contraction_ratio(
            (ProbVector([0.5, 0.3, 0.2]), uniform_prob(3)),
            (uniform_prob(3), uniform_prob(3)),
            0.0,
        )
        assert r == 0.0

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            paths.contraction_ratio(
                (uniform_prob(3), uniform_prob(3)), (uniform_prob(3), uniform_prob(3)), 1.0
            )

    def test_rapid_regime_contracts(self):
        beta = 0.95 * phase.beta_mixing(3)
        rng = np.random.default_rng(11)
        rho = uniform_prob(3)
        for _ in range(25):
            start = (ProbVector(rng.dirichlet(np.ones(3))), ProbVector(rng.dirichlet(np.ones(3))))
            try:
                assert paths.contraction_ratio(start, (rho, rho), beta) < 1.0
            except ValueError:
                pass

    def test_supercritical_no_contraction(self):
        beta = phase.beta_critical(3) + 1.0
        s = phase.solve_s(beta, 3)
        ordered = phi(s, 3)
        r = paths.contraction_ratio(
            (ordered, ordered), (uniform_prob(3), uniform_prob(3)), beta
        )
        assert r >= 1.0 - 1e-9


class TestLipschitzNearUniform:
    def test_beta_zero(self):
        assert paths.lipschitz_ratio_near_rho(0.0, 3, samples=500) == 0.0

    def test_below_threshold(self):
        beta = 0.9 * phase.beta_mixing(3)
        assert paths.lipschitz_ratio_near_rho(beta, 3, radius=1e-3, samples=3000) < 1.0

    def test_converges_to_jacobian_norm(self):
        # the tangent-space l1 operator norm of the softmax Jacobian at the
        # uniform vector is beta/q
        beta, q = 2.0, 3
        small = paths.lipschitz_ratio_near_rho(beta, q, radius=1e-6, samples=3000)
        assert abs(small - beta / q) <= 1e-4

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            paths.lipschitz_ratio_near_rho(1.0, 3, radius=0.0)


class TestContractionConsistency:
    def test_one_step_bound_along_path(self):
        # when the continuous ratio certifies contraction toward the uniform
        # pair, the exact one-step mean coupling distance obeys the aggregated
        # link bound with the measured slack constant
        from bipotts import coupling, dynamics
        from bipotts.model import ModelParams

        q, n = 3, 300
        beta = 0.95 * phase.beta_mixing(q)
        a = stacked_config([160, 70, 70], [150, 80, 70], q)
        b = stacked_config([101, 100, 99], [100, 100, 100], q)
        ratio = paths.contraction_ratio(
            (ProbVector(np.array([160, 70, 70]) / n), ProbVector(np.array([150, 80, 70]) / n)),
            (ProbVector(np.array([101, 100, 99]) / n), uniform_prob(3)),
            beta,
        )
        assert ratio < 1.0
        path = paths.build_monotone_path(a, b, 0.02)
        paths.assert_valid(path)
        s1, s2 = paths.discrete_aggregate_variation(path, beta)
        params = ModelParams(q=q, n=n, beta=beta)
        xs = dynamics.ChainState.from_config(params, path.waypoints[0])
        ys = dynamics.ChainState.from_config(params, path.waypoints[-1])
        cs = coupling.CouplingState.from_states(xs, ys)
        measured = coupling.one_step_expected_distance(cs)
        dl1 = np.abs(xs.lcounts - ys.lcounts).sum() / n + np.abs(xs.rcounts - ys.rcounts).sum() / n
        eps = path.epsilon
        c_slack = 0.05
        bound = cs.distance * (
            1 - (1 / (2 * n)) * (1 - (s1 + s2 + 4 * c_slack * eps**2) / dl1)
        )
        assert measured <= bound + 1e-12
