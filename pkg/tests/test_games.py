import math

import numpy as np
import pytest

from stackbench.games import (
    BallSet,
    DimensionMismatchError,
    LinearRegressionGame,
    LogisticGame,
    PopulationSpec,
    generate_population,
)

from helpers import fd_gradient, random_orthogonal, rel_err


@pytest.fixture
def linear_b2():
    return LinearRegressionGame(beta=(1.0, 0.0), sigma2=0.0, B=2.0)


@pytest.fixture
def logistic_constrained():
    spec = PopulationSpec(p=0.3, alpha=(2.0, -1.0), n=60, seed=7)
    return LogisticGame.from_population(spec, "constrained", B=2.0)


@pytest.fixture
def logistic_costly():
    spec = PopulationSpec(p=0.5, alpha=(1.5, 1.5), n=60, seed=11)
    return LogisticGame.from_population(spec, "costly", lam=1.0)


class TestLossL:
    def test_linear_at_truth(self):
        g = LinearRegressionGame(beta=(1.0, 0.0), sigma2=0.0, B=2.0)
        assert g.loss_L([0.0, 0.0], [1.0, 0.0]) == 0.0

    def test_linear_closed_form_value(self, linear_b2):
        # 0.5*(0.8)^2 + 0.5*(0.4)^2 = 0.40
        assert linear_b2.loss_L([2.0, 0.0], [0.2, 0.0]) == pytest.approx(0.40, abs=1e-15)

    def test_logistic_single_sample_log2(self):
        g = LogisticGame(np.zeros((1, 1)), np.array([0]), "constrained", B=1.0)
        assert g.loss_L([0.0], [0.0]) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_logistic_stable_for_large_logits(self, logistic_constrained):
        v = logistic_constrained.loss_L([2.0, 0.0], [500.0, 0.0])
        assert np.isfinite(v)

    def test_dimension_mismatch(self, linear_b2):
        with pytest.raises(DimensionMismatchError):
            linear_b2.loss_L([1.0], [1.0, 0.0])


class TestLossR:
    def test_constrained_inner_product(self, logistic_constrained):
        assert logistic_constrained.loss_R([1.0, 0.0], [0.5, 0.0]) == -0.5

    def test_costly_value(self, logistic_costly):
        # lam/2 * ||mu||^2 - mu.theta = 0.5 - 1
        assert logistic_costly.loss_R([1.0, 0.0], [1.0, 0.0]) == -0.5

    def test_zero_action(self, linear_b2, logistic_costly):
        assert linear_b2.loss_R([0.0, 0.0], [3.0, -2.0]) == 0.0
        assert logistic_costly.loss_R([0.0, 0.0], [3.0, -2.0]) == 0.0


class TestGradients:
    def test_linear_grad_theta_at_origin(self):
        g = LinearRegressionGame(beta=(1.0, 0.0), sigma2=0.0, B=2.0)
        np.testing.assert_allclose(g.grad_L_theta([0, 0], [0, 0]), [-1.0, 0.0])

    def test_linear_grad_theta_stationary(self):
        g = LinearRegressionGame(beta=(1.0, 0.0), B=2.0)
        np.testing.assert_allclose(g.grad_L_theta([1, 0], [0.5, 0]), [0.0, 0.0], atol=1e-15)

    def test_grad_R_constrained(self, logistic_constrained):
        np.testing.assert_allclose(logistic_constrained.grad_R_mu([0, 0], [3, 4]), [-3, -4])

    def test_grad_R_costly_forms(self, logistic_costly):
        np.testing.assert_allclose(logistic_costly.grad_R_mu([1, 0], [0, 0]), [1.0, 0.0])
        np.testing.assert_allclose(logistic_costly.grad_R_mu([1, 1], [1, 1]), [0.0, 0.0])

    @pytest.mark.parametrize("game_fixture", ["linear_b2", "logistic_constrained", "logistic_costly"])
    def test_gradients_match_finite_differences(self, game_fixture, request):
        """All analytic gradients agree with central differences on 100 random points."""
        game = request.getfixturevalue(game_fixture)
        rng = np.random.default_rng(123)
        for _ in range(100):
            mu = rng.uniform(-2, 2, size=game.dim)
            theta = rng.uniform(-2, 2, size=game.dim)
            g_theta = game.grad_L_theta(mu, theta)
            fd_theta = fd_gradient(lambda th: game.loss_L(mu, th), theta)
            assert rel_err(g_theta, fd_theta) <= 1e-5
            g_mu = game.grad_R_mu(mu, theta)
            fd_mu = fd_gradient(lambda m: game.loss_R(m, theta), mu)
            assert rel_err(g_mu, fd_mu) <= 1e-5
            g_lmu = game.grad_L_mu(mu, theta)
            fd_lmu = fd_gradient(lambda m: game.loss_L(m, theta), mu)
            assert rel_err(g_lmu, fd_lmu) <= 1e-5


class TestRotationEquivariance:
    def test_linear_loss_invariant_under_rotation(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            beta = rng.normal(size=3)
            game = LinearRegressionGame(beta=tuple(beta), sigma2=0.3, B=1.5)
            q = random_orthogonal(3, rng)
            rotated = LinearRegressionGame(beta=tuple(q @ beta), sigma2=0.3, B=1.5)
            mu = rng.normal(size=3)
            theta = rng.normal(size=3)
            assert game.loss_L(mu, theta) == pytest.approx(
                rotated.loss_L(q @ mu, q @ theta), abs=1e-12
            )


class TestLogisticMonotonicity:
    def test_loss_nondecreasing_in_mu_dot_theta(self, logistic_constrained):
        game = logistic_constrained
        rng = np.random.default_rng(17)
        theta = np.array([0.7, -0.3])
        for _ in range(200):
            m1, m2 = rng.uniform(-1, 1, size=(2, 2))
            m1 *= 2.0 / max(np.linalg.norm(m1), 1.0)
            m2 *= 2.0 / max(np.linalg.norm(m2), 1.0)
            lo, hi = sorted([m1, m2], key=lambda m: float(m @ theta))
            assert game.loss_L(lo, theta) <= game.loss_L(hi, theta) + 1e-12


class TestPopulation:
    def test_degenerate_bernoulli_all_ones(self):
        X, y = generate_population(PopulationSpec(p=1.0, alpha=(2.0,), n=3, seed=1))
        assert np.all(y == 1)
        assert X.shape == (3, 1)

    def test_degenerate_bernoulli_all_zeros(self):
        spec = PopulationSpec(p=0.0, alpha=(2.0, 1.0), n=5, seed=1)
        X, y = generate_population(spec)
        assert np.all(y == 0)
        # features center near -alpha
        assert np.all(np.abs(X.mean(axis=0) + np.array([2.0, 1.0])) < 3.0)

    def test_law_of_large_numbers(self):
        n = 100_000
        spec = PopulationSpec(p=0.5, alpha=(2.0,), n=n, seed=3)
        X, y = generate_population(spec)
        # label fraction within 3*sqrt(p(1-p)/n)
        assert abs(y.mean() - 0.5) <= 3.0 * math.sqrt(0.25 / n)
        # E[x0] = (2p-1) alpha = 0; feature mean within 3/sqrt(n) of 0
        # (feature variance = 1 + alpha^2 p-mixing, bounded by 5 here)
        assert abs(X.mean()) <= 3.0 * math.sqrt(5.0 / n)

    def test_deterministic_given_seed(self):
        spec = PopulationSpec(p=0.4, alpha=(1.0, -1.0), n=50, seed=99)
        X1, y1 = generate_population(spec)
        X2, y2 = generate_population(spec)
        assert np.array_equal(X1, X2) and np.array_equal(y1, y2)

    def test_p_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            PopulationSpec(p=1.5, alpha=(1.0,), n=10, seed=0)


class TestBallSet:
    def test_membership_tolerance(self):
        ball = BallSet(1.0, 2)
        assert ball.contains([1.0, 0.0])
        assert not ball.contains([1.0 + 1e-9, 0.0])

    def test_unbounded_ball(self):
        ball = BallSet(float("inf"), 2)
        v = np.array([1e12, -1e12])
        np.testing.assert_array_equal(ball.project(v), v)
