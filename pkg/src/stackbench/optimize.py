"""Update rules for both players.

The slow player runs a single-point derivative-free step per epoch: it deploys a
sphere-perturbed point around its center phi, observes its own loss there, and
descends the smoothed risk using (d / delta) * loss * u as the gradient estimate.
The fast player runs plain projected gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import BallSet, Game, Vec, as_vec


@dataclass(frozen=True)
class StepSchedule:
    """Step size and perturbation schedules for the derivative-free player.

    eta(t)   = eta0   * d^{-1/2 if dim_scaling} * t^{-exponent_eta}
    delta(t) = delta0 * d^{+1/2 if dim_scaling} * t^{-exponent_delta},
               or the fixed value delta_const when set (horizon-tuned variant).
    """

    eta0: float
    exponent_eta: float = 0.75
    delta0: float = 1.0
    exponent_delta: float = 0.25
    dim_scaling: bool = False
    delta_const: float | None = None

    def __post_init__(self):
        if self.eta0 < 0:
            raise ValueError("eta0 must be nonnegative")
        if self.exponent_eta < 0:
            raise ValueError("exponent_eta must be nonnegative (eta non-increasing)")
        if self.delta_const is None and self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.delta_const is not None and self.delta_const <= 0:
            raise ValueError("delta_const must be positive")

    @classmethod
    def horizon_tuned(cls, eta0: float, delta0: float, dim: int, horizon: int) -> "StepSchedule":
        """Schedule with dimension scaling and the fixed delta = delta0 * sqrt(d) * T^{-1/4}."""
        return cls(
            eta0=eta0,
            delta0=delta0,
            dim_scaling=True,
            delta_const=delta0 * dim**0.5 * horizon**-0.25,
        )

    def eta(self, t: int, dim: int) -> float:
        scale = dim**-0.5 if self.dim_scaling else 1.0
        return self.eta0 * scale * float(t) ** -self.exponent_eta

    def delta(self, t: int, dim: int) -> float:
        if self.delta_const is not None:
            return self.delta_const
        scale = dim**0.5 if self.dim_scaling else 1.0
        return self.delta0 * scale * float(t) ** -self.exponent_delta


def project_ball(v: Vec, ball: BallSet) -> Vec:
    """Euclidean projection onto the ball; idempotent, boundary points unchanged."""
    return ball.project(v)


def sample_sphere(dim: int, rng: np.random.Generator) -> Vec:
    """Uniform draw from the unit sphere S^{dim-1} via Gaussian normalization."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        g = rng.standard_normal(dim)
        n = float(np.linalg.norm(g))
        if n > 0.0:
            return g / n


@dataclass(frozen=True)
class ZeroOrderState:
    """State of the derivative-free player: center phi, current direction, epoch counter."""

    phi: Vec
    last_u: Vec
    t: int

    @classmethod
    def start(cls, phi0: Vec, rng: np.random.Generator) -> "ZeroOrderState":
        phi0 = as_vec(phi0)
        return cls(phi=phi0, last_u=sample_sphere(phi0.shape[0], rng), t=1)

    @property
    def dim(self) -> int:
        return self.phi.shape[0]

    def deployed(self, schedule: StepSchedule) -> Vec:
        """The point actually played this epoch: phi + delta_t * u_t.

        May leave the constraint set by up to delta_t; the play happens in a
        delta-ball around the set, which keeps the gradient estimate unbiased.
        """
        return self.phi + schedule.delta(self.t, self.dim) * self.last_u


def zero_order_step(
    state: ZeroOrderState,
    observed_loss: float,
    schedule: StepSchedule,
    feasible_set: BallSet,
    rng: np.random.Generator,
) -> ZeroOrderState:
    """One derivative-free update of the slow player.

    ``observed_loss`` must be the player's loss evaluated at the deployed point
    ``state.deployed(schedule)`` against the opponent's current iterate (last or
    within-epoch average, the caller's choice).  The center moves to
    Pi(phi - eta_t * (d / delta_t) * observed_loss * u_t) and a fresh direction is
    drawn for the next epoch.
    """
    d = state.dim
    delta = schedule.delta(state.t, d)
    if delta <= 0.0:
        raise ValueError(f"perturbation delta must be positive at t={state.t}")
    if not np.isfinite(observed_loss):
        raise FloatingPointError(f"non-finite observed loss at t={state.t}")
    eta = schedule.eta(state.t, d)
    step = eta * (d / delta) * observed_loss * state.last_u
    phi_next = project_ball(state.phi - step, feasible_set)
    return ZeroOrderState(phi=phi_next, last_u=sample_sphere(d, rng), t=state.t + 1)


def agent_gd_step(
    game: Game,
    mu: Vec,
    theta: Vec,
    eta_mu: float,
    constraint: BallSet | None = None,
) -> Vec:
    """One (projected) gradient step of the agents on R(., theta)."""
    if eta_mu <= 0:
        raise ValueError("eta_mu must be positive")
    nxt = as_vec(mu, game.dim) - eta_mu * game.grad_R_mu(mu, theta)
    if constraint is not None:
        nxt = constraint.project(nxt)
    return nxt


def dm_gd_step(game: Game, mu: Vec, theta: Vec, eta: float, theta_set: BallSet) -> Vec:
    """One projected gradient step of the decision-maker on L(mu, .)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    return theta_set.project(as_vec(theta, game.dim) - eta * game.grad_L_theta(mu, theta))
