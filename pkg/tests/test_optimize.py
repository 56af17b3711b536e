import numpy as np
import pytest

from stackbench.games import BallSet, LinearRegressionGame, LogisticGame, PopulationSpec
from stackbench.optimize import (
    StepSchedule,
    ZeroOrderState,
    agent_gd_step,
    dm_gd_step,
    project_ball,
    sample_sphere,
    zero_order_step,
)

from helpers import mc_smoothed_gradient


class TestProjectBall:
    def test_interior_point_unchanged(self):
        np.testing.assert_array_equal(project_ball(np.array([3.0, 4.0]), BallSet(10, 2)), [3, 4])

    def test_radial_scaling(self):
        np.testing.assert_allclose(project_ball(np.array([3.0, 4.0]), BallSet(1, 2)), [0.6, 0.8])

    def test_degenerate_radius_zero(self):
        np.testing.assert_array_equal(project_ball(np.zeros(2), BallSet(0, 2)), [0, 0])

    def test_boundary_returned_unchanged(self):
        v = np.array([1.0, 0.0])
        assert project_ball(v, BallSet(1.0, 2)) is v

    def test_idempotent_and_nonexpansive(self):
        """Pi(Pi(v)) == Pi(v) and ||Pi(a)-Pi(b)|| <= ||a-b|| on 1000 random pairs."""
        rng = np.random.default_rng(0)
        ball = BallSet(1.7, 3)
        for _ in range(1000):
            a, b = rng.normal(scale=3.0, size=(2, 3))
            pa, pb = project_ball(a, ball), project_ball(b, ball)
            np.testing.assert_allclose(project_ball(pa, ball), pa, atol=1e-15)
            assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12


class TestSampleSphere:
    def test_unit_norm(self):
        rng = np.random.default_rng(1)
        for dim in (1, 2, 3, 7):
            for _ in range(50):
                assert abs(np.linalg.norm(sample_sphere(dim, rng)) - 1.0) <= 1e-12

    def test_dim_one_is_sign(self):
        rng = np.random.default_rng(2)
        draws = {float(sample_sphere(1, rng)[0]) for _ in range(100)}
        assert draws == {1.0, -1.0}

    def test_symmetry_monte_carlo(self):
        n = 100_000
        rng = np.random.default_rng(3)
        u = np.stack([sample_sphere(2, rng) for _ in range(n)])
        # per-coordinate variance is 1/d = 1/2; mean within 3 standard errors
        assert np.all(np.abs(u.mean(axis=0)) <= 3.0 * np.sqrt(0.5 / n))


class TestStepSchedule:
    def test_eta_non_increasing_and_positive(self):
        s = StepSchedule(eta0=0.5, delta0=1.0)
        etas = [s.eta(t, 2) for t in range(1, 200)]
        assert all(e > 0 for e in etas)
        assert all(a >= b for a, b in zip(etas, etas[1:]))

    def test_dim_scaling_factors(self):
        s = StepSchedule(eta0=1.0, delta0=1.0, dim_scaling=True)
        assert s.eta(1, 4) == pytest.approx(0.5)
        assert s.delta(1, 4) == pytest.approx(2.0)

    def test_horizon_tuned_delta_constant(self):
        s = StepSchedule.horizon_tuned(eta0=1.0, delta0=0.5, dim=2, horizon=10_000)
        assert s.delta(1, 2) == s.delta(9999, 2) == pytest.approx(0.5 * 2**0.5 * 0.1)


class TestZeroOrderStep:
    def _schedule(self, eta, delta):
        return StepSchedule(eta0=eta, exponent_eta=0.0, delta0=delta, exponent_delta=0.0)

    def test_zero_loss_keeps_center(self):
        rng = np.random.default_rng(0)
        state = ZeroOrderState.start(np.array([0.3, -0.2]), rng)
        nxt = zero_order_step(state, 0.0, self._schedule(0.1, 1.0), BallSet(10, 2), rng)
        np.testing.assert_array_equal(nxt.phi, state.phi)
        assert nxt.t == state.t + 1

    def test_step_arithmetic(self):
        rng = np.random.default_rng(0)
        state = ZeroOrderState(phi=np.zeros(2), last_u=np.array([0.0, 1.0]), t=1)
        nxt = zero_order_step(state, 1.0, self._schedule(0.1, 1.0), BallSet(10, 2), rng)
        np.testing.assert_allclose(nxt.phi, [0.0, -0.2])

    def test_center_stays_feasible(self):
        rng = np.random.default_rng(4)
        ball = BallSet(0.5, 3)
        state = ZeroOrderState.start(np.zeros(3), rng)
        sched = StepSchedule(eta0=1.0, delta0=0.3)
        for _ in range(200):
            state = zero_order_step(state, rng.normal(), sched, ball, rng)
            assert ball.contains(state.phi)

    def test_zero_delta_rejected(self):
        with pytest.raises(ValueError):
            StepSchedule(eta0=0.1, delta0=0.0)

    def test_smoothed_gradient_identity_quadratic(self):
        """The sphere estimator's expectation matches the smoothed gradient.

        For SR(theta) = ||theta||^2 the smoothed gradient at phi=(1,0) is exactly
        (2, 0); the antithetic Monte Carlo oracle must land within 2%.
        """
        rng = np.random.default_rng(12)
        est = mc_smoothed_gradient(
            lambda th: float(th @ th), np.array([1.0, 0.0]), delta=0.01, n=1_000_000, rng=rng
        )
        assert np.linalg.norm(est - np.array([2.0, 0.0])) <= 0.02 * 2.0

    def test_quadratic_smoke_convergence(self):
        """Driving the estimator with horizon-tuned schedules optimizes a quadratic.

        Last-10% average suboptimality must fall below 5% of the initial one.
        """
        rng = np.random.default_rng(7)
        c = np.array([3.0, -4.0])
        ball = BallSet(10.0, 2)
        T = 20_000
        sched = StepSchedule.horizon_tuned(eta0=0.5, delta0=0.5, dim=2, horizon=T)
        state = ZeroOrderState.start(np.zeros(2), rng)
        sub = np.empty(T)
        for t in range(T):
            theta = state.deployed(sched)
            loss = float((theta - c) @ (theta - c))
            sub[t] = float((state.phi - c) @ (state.phi - c))
            state = zero_order_step(state, loss, sched, ball, rng)
        initial = float(c @ c)  # suboptimality at phi_0 = 0
        assert np.mean(sub[-T // 10 :]) <= 0.05 * initial


class TestAgentStep:
    def test_constrained_step(self):
        g = LogisticGame(np.zeros((1, 1)), np.array([0]), "constrained", B=2.0)
        g2 = LogisticGame(np.zeros((2, 2)), np.array([0, 1]), "constrained", B=2.0)
        out = agent_gd_step(g2, [0.0, 0.0], [1.0, 0.0], 0.1, g2.mu_set)
        np.testing.assert_allclose(out, [0.1, 0.0])

    def test_boundary_saturation(self):
        g = LogisticGame(np.zeros((2, 2)), np.array([0, 1]), "constrained", B=2.0)
        out = agent_gd_step(g, [2.0, 0.0], [1.0, 0.0], 1.0, g.mu_set)
        np.testing.assert_allclose(out, [2.0, 0.0])

    def test_costly_converges_to_fixed_point(self):
        spec = PopulationSpec(p=0.5, alpha=(1.0, 1.0), n=10, seed=0)
        g = LogisticGame.from_population(spec, "costly", lam=1.0)
        theta = np.array([1.0, 1.0])
        mu = np.zeros(2)
        for _ in range(200):
            new = agent_gd_step(g, mu, theta, 0.5)
            if np.linalg.norm(new - mu) < 1e-10:
                mu = new
                break
            mu = new
        np.testing.assert_allclose(mu, theta, atol=1e-9)  # mu_br = theta / lam

    def test_costly_contraction_is_exact(self):
        """One step contracts the distance to theta/lam by exactly (1 - eta*lam)."""
        spec = PopulationSpec(p=0.5, alpha=(1.0, 1.0), n=10, seed=0)
        g = LogisticGame.from_population(spec, "costly", lam=1.0)
        rng = np.random.default_rng(8)
        for _ in range(50):
            mu = rng.normal(size=2)
            theta = rng.normal(size=2)
            eta = 0.25
            before = np.linalg.norm(mu - theta)
            after = np.linalg.norm(agent_gd_step(g, mu, theta, eta) - theta)
            assert after == pytest.approx((1 - eta * 1.0) * before, rel=1e-12)


class TestDmStep:
    def test_fixed_point_at_unconstrained_minimizer(self):
        g = LinearRegressionGame(beta=(1.0, 0.0), B=2.0)
        out = dm_gd_step(g, [0.0, 0.0], [1.0, 0.0], 0.3, g.theta_set)
        np.testing.assert_allclose(out, [1.0, 0.0])

    def test_single_step_toward_beta(self):
        g = LinearRegressionGame(beta=(1.0, 0.0), B=2.0)
        out = dm_gd_step(g, [0.0, 0.0], [0.0, 0.0], 0.5, g.theta_set)
        np.testing.assert_allclose(out, [0.5, 0.0])

    def test_linear_convergence_to_best_response(self):
        g = LinearRegressionGame(beta=(1.0, 0.0), B=2.0)
        mu = np.array([1.0, 0.0])
        theta = np.zeros(2)
        for _ in range(300):
            theta = dm_gd_step(g, mu, theta, 0.2, g.theta_set)
        np.testing.assert_allclose(theta, [0.5, 0.0], atol=1e-10)
