import math

import numpy as np
import pytest

from lsmrs import ProposalState, adapt, propose


def make(variant="global", dim=2, **kw):
    return ProposalState(dim=dim, variant=variant, **kw)


class TestPropose:
    def test_global_zero_scale_degenerate(self, rng):
        ps = make("global", scale=0.0)
        current = np.array([1.5, -2.0])
        for _ in range(5):
            assert np.array_equal(propose(ps, current, rng), current)

    def test_haario_initial_fixed_component(self, rng):
        # first 2d steps: N(theta, 0.1^2 / d * I)
        ps = make("haario", dim=2)
        current = np.zeros(2)
        draws = np.array([propose(ps, current, rng) for _ in range(40000)])
        cov = np.cov(draws.T, ddof=0)
        assert np.allclose(np.diag(cov), 0.01 / 2, rtol=0.05)
        assert abs(cov[0, 1]) < 0.001

    def test_global_moment_check(self, rng):
        # empirical covariance of draws from N(theta, delta * Sigma)
        ps = make("global", scale=1.0, cov=np.diag([1.0, 4.0]))
        current = np.array([3.0, -1.0])
        draws = np.array([propose(ps, current, rng) for _ in range(100000)])
        cov = np.cov(draws.T, ddof=0)
        assert np.allclose(np.diag(cov), [1.0, 4.0], rtol=0.05)
        assert np.allclose(draws.mean(axis=0), current, atol=0.05)

    def test_incremental_scale(self, rng):
        ps = make("incremental", dim=1, scale=math.log(2.0))
        draws = np.array([propose(ps, np.zeros(1), rng)[0] for _ in range(50000)])
        assert draws.std() == pytest.approx(2.0, rel=0.05)

    def test_singular_covariance_falls_back(self, rng):
        ps = make("global", scale=0.5, cov=np.array([[1.0, 1.0], [1.0, 1.0]]))
        cand = propose(ps, np.zeros(2), rng)
        assert np.all(np.isfinite(cand))

    def test_dimension_check(self, rng):
        with pytest.raises(ValueError):
            propose(make(dim=2), np.zeros(3), rng)


class TestAdaptGlobal:
    def test_scale_update_arithmetic(self):
        # gamma = h**-psi = 0.1 at h=100 with psi=0.5; one full-acceptance
        # step moves log(delta) by 0.1 * (1 - 0.234)
        ps = make("global", scale=1.0, psi=0.5, target=0.234, step_count=99)
        adapt(ps, 1.0, np.zeros(2))
        assert ps.scale == pytest.approx(math.exp(0.1 * 0.766), rel=1e-12)
        assert ps.step_count == 100

    def test_scale_fixed_at_target(self):
        ps = make("global", scale=0.7)
        for _ in range(25):
            adapt(ps, ps.target, np.array([1.0, 2.0]))
        assert ps.scale == pytest.approx(0.7, rel=1e-12)

    def test_diminishing_adaptation(self, rng):
        ps = make("global", scale=0.3, psi=0.6)
        for _ in range(300):
            a = float(rng.random())
            before = math.log(ps.scale)
            h = ps.step_count + 1
            adapt(ps, a, rng.standard_normal(2))
            assert abs(math.log(ps.scale) - before) <= h ** -0.6 + 1e-12

    def test_mean_cov_recursion(self, rng):
        # mu_h = mu_{h-1} + gamma (theta - mu_{h-1}), Sigma likewise with
        # the outer product of the pre-update residual
        ps = make("global")
        mu, cov = ps.mean.copy(), ps.cov.copy()
        for h in range(1, 30):
            theta = rng.standard_normal(2)
            gamma = h ** -0.6
            delta = theta - mu
            mu = mu + gamma * delta
            cov = cov + gamma * (np.outer(delta, delta) - cov)
            adapt(ps, 0.3, theta)
            assert np.allclose(ps.mean, mu, atol=1e-12)
            assert np.allclose(ps.cov, cov, atol=1e-12)

    def test_cov_exactly_symmetric(self, rng):
        ps = make("global")
        for _ in range(100):
            adapt(ps, float(rng.random()), rng.standard_normal(2))
            assert np.array_equal(ps.cov, ps.cov.T)


class TestAdaptIncremental:
    def test_first_batch_step_is_one(self):
        ps = make("incremental", dim=1, scale=3.0, period=10, target=0.234)
        for h in range(1, 10):
            adapt(ps, 0.1, np.zeros(1))
            assert ps.scale == 3.0  # no change off the batch boundary
        adapt(ps, 0.1, np.zeros(1))  # h = v: below target, step 1/(h/v) = 1
        assert ps.scale == pytest.approx(2.0)

    def test_steps_shrink_and_direction(self):
        ps = make("incremental", dim=1, scale=0.0, period=5, target=0.5)
        deltas = []
        prev = ps.scale
        for h in range(1, 26):
            adapt(ps, 0.9, np.zeros(1))  # above target: upwards
            if h % 5 == 0:
                deltas.append(ps.scale - prev)
                prev = ps.scale
        assert deltas == pytest.approx([1.0, 0.5, 1 / 3, 0.25, 0.2])


class TestAdaptHaario:
    def test_running_covariance_matches_batch(self, rng):
        ps = make("haario")
        values = rng.standard_normal((200, 2)) * np.array([1.0, 3.0])
        for v in values:
            adapt(ps, 0.3, v)
        assert np.allclose(ps.mean, values.mean(axis=0), atol=1e-10)
        assert np.allclose(ps.cov, np.cov(values.T, ddof=0), atol=1e-10)
