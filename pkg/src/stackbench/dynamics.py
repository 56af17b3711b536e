"""Repeated-interaction loops for both orders of play.

Each epoch starts with a single move of the slow player (deploying a sphere-
perturbed point around its center), followed by ``tau`` projected gradient steps
of the fast player warm-started from the previous epoch.  The slow player then
observes its own loss at the end of the epoch and updates its center.

Proactive mode: the decision-maker is slow (derivative-free), agents are fast.
Reactive mode: the agents are slow (derivative-free on their composite loss,
observed after the decision-maker's within-epoch convergence), decision-maker
is fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibria import theta_br_numeric
from .games import BallSet, Game, LinearRegressionGame, Vec, as_vec
from .optimize import StepSchedule, ZeroOrderState, agent_gd_step, dm_gd_step, zero_order_step


class DivergenceError(RuntimeError):
    """A run produced a non-finite iterate; carries the offending epoch and partial trace."""

    def __init__(self, epoch: int, message: str, partial: "Trace | None" = None):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch
        self.partial = partial


class DiagnosticUnavailableError(RuntimeError):
    """Requested diagnostic needs a best-response oracle the trace does not have."""


@dataclass(frozen=True)
class Schedule:
    """Epoch structure: who is slow, horizon, inner steps, and both players' step rules.

    The slow player's entry must be a StepSchedule (derivative-free update); the
    fast player's entry is a fixed gradient-descent step size.
    """

    order: str  # "proactive" | "reactive"
    T: int
    tau: int
    dm_schedule: StepSchedule | float
    agent_schedule: StepSchedule | float
    iterate_mode: str = "last"  # "averaged" | "last"

    def __post_init__(self):
        if self.order not in ("proactive", "reactive"):
            raise ValueError(f"unknown order {self.order!r}")
        if self.T < 1 or self.tau < 1:
            raise ValueError("T and tau must be >= 1")
        if self.iterate_mode not in ("averaged", "last"):
            raise ValueError(f"unknown iterate_mode {self.iterate_mode!r}")
        slow, fast = (
            (self.dm_schedule, self.agent_schedule)
            if self.order == "proactive"
            else (self.agent_schedule, self.dm_schedule)
        )
        if not isinstance(slow, StepSchedule):
            raise ValueError(f"{self.order}: slow player needs a StepSchedule")
        if not isinstance(fast, (int, float)) or fast <= 0:
            raise ValueError(f"{self.order}: fast player needs a positive fixed step size")


@dataclass
class Trace:
    """Per-epoch record of one run."""

    order: str
    theta: np.ndarray  # (T, d) model iterate at the end of each epoch
    mu: np.ndarray  # (T, d) agent iterate at the end of each epoch
    loss_L: np.ndarray  # (T,)
    loss_R: np.ndarray  # (T,)
    running_avg_L: np.ndarray  # (T,)
    running_avg_R: np.ndarray  # (T,)
    br_gap: np.ndarray  # (T,), NaN where no best-response oracle was available
    final_phi: np.ndarray | None = None  # slow player's center after the last update
    rng_seed: int | None = None
    config_digest: str = ""

    def __len__(self) -> int:
        return self.theta.shape[0]


def _running_average(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x) / np.arange(1, len(x) + 1)


def _finish(order, theta, mu, L, R, gaps, final_phi, upto=None) -> Trace:
    sl = slice(None) if upto is None else slice(0, upto)
    return Trace(
        order=order,
        theta=theta[sl].copy(),
        mu=mu[sl].copy(),
        loss_L=L[sl].copy(),
        loss_R=R[sl].copy(),
        running_avg_L=_running_average(L[sl]),
        running_avg_R=_running_average(R[sl]),
        br_gap=gaps[sl].copy(),
        final_phi=final_phi,
    )


def run_proactive(
    game: Game,
    schedule: Schedule,
    rng: np.random.Generator,
    theta0: Vec | None = None,
    mu0: Vec | None = None,
    track_br_gap: bool = True,
) -> Trace:
    """Slow derivative-free decision-maker against fast gradient-descent agents.

    Per epoch: deploy theta_t = phi_t + delta_t u_t, let the agents take tau
    projected gradient steps on R(., theta_t) warm-started from the previous
    epoch, feed L(mu_bar_t or mu_t, theta_t) to the derivative-free update.
    """
    if schedule.order != "proactive":
        raise ValueError("schedule.order must be 'proactive'")
    d = game.dim
    dm_sched: StepSchedule = schedule.dm_schedule
    eta_mu: float = float(schedule.agent_schedule)
    T, tau = schedule.T, schedule.tau
    mu_set = game.mu_set

    phi0 = np.zeros(d) if theta0 is None else as_vec(theta0, d)
    if not game.theta_set.contains(phi0):
        raise ValueError("theta0 outside the model constraint set")
    mu = np.zeros(d) if mu0 is None else as_vec(mu0, d)
    state = ZeroOrderState.start(phi0, rng)

    theta_hist = np.empty((T, d))
    mu_hist = np.empty((T, d))
    L_hist = np.empty(T)
    R_hist = np.empty(T)
    gaps = np.full(T, np.nan)

    for t in range(1, T + 1):
        theta_t = state.deployed(dm_sched)
        # warm start: mu_{t,0} = mu_{t-1,tau}; the loop variable carries over epochs
        if schedule.iterate_mode == "averaged":
            mu_sum = np.zeros(d)
            for _ in range(tau):
                mu = agent_gd_step(game, mu, theta_t, eta_mu, mu_set)
                mu_sum += mu
            fed = game.loss_L(mu_sum / tau, theta_t)
            L_t = game.loss_L(mu, theta_t)
        else:
            for _ in range(tau):
                mu = agent_gd_step(game, mu, theta_t, eta_mu, mu_set)
            L_t = game.loss_L(mu, theta_t)
            fed = L_t
        R_t = game.loss_R(mu, theta_t)

        i = t - 1
        theta_hist[i] = theta_t
        mu_hist[i] = mu
        L_hist[i] = L_t
        R_hist[i] = R_t
        if track_br_gap:
            gaps[i] = float(np.linalg.norm(mu - game.mu_br(theta_t)))

        if not (np.all(np.isfinite(theta_t)) and np.all(np.isfinite(mu)) and np.isfinite(L_t)):
            raise DivergenceError(
                t, "non-finite iterate", _finish("proactive", theta_hist, mu_hist, L_hist, R_hist, gaps, state.phi, upto=i)
            )
        state = zero_order_step(state, fed, dm_sched, game.theta_set, rng)

    return _finish("proactive", theta_hist, mu_hist, L_hist, R_hist, gaps, state.phi.copy())


def run_reactive(
    game: Game,
    schedule: Schedule,
    rng: np.random.Generator,
    theta0: Vec | None = None,
    mu0: Vec | None = None,
    track_br_gap: bool = True,
) -> Trace:
    """Slow derivative-free agents against a fast gradient-descent decision-maker.

    The agents deploy mu_t = phi_t + delta_t u_t; the decision-maker takes tau
    projected gradient steps on L(mu_t, .) warm-started from the previous epoch;
    the loss fed back to the agents is R(mu_t, theta_{t,tau}), i.e. their loss
    after the decision-maker's within-epoch convergence.
    """
    if schedule.order != "reactive":
        raise ValueError("schedule.order must be 'reactive'")
    d = game.dim
    agent_sched: StepSchedule = schedule.agent_schedule
    eta_dm: float = float(schedule.dm_schedule)
    T, tau = schedule.T, schedule.tau
    mu_feasible = game.mu_set if game.mu_set is not None else BallSet(float("inf"), d)

    phi0 = np.zeros(d) if mu0 is None else as_vec(mu0, d)
    if not mu_feasible.contains(phi0):
        raise ValueError("mu0 outside the agents' constraint set")
    theta = np.zeros(d) if theta0 is None else as_vec(theta0, d)
    state = ZeroOrderState.start(phi0, rng)

    theta_hist = np.empty((T, d))
    mu_hist = np.empty((T, d))
    L_hist = np.empty(T)
    R_hist = np.empty(T)
    gaps = np.full(T, np.nan)
    has_closed_theta_br = isinstance(game, LinearRegressionGame)

    for t in range(1, T + 1):
        mu_t = state.deployed(agent_sched)
        for _ in range(tau):
            theta = dm_gd_step(game, mu_t, theta, eta_dm, game.theta_set)
        R_t = game.loss_R(mu_t, theta)  # observed after the inner loop: R(mu, theta_R(mu))
        L_t = game.loss_L(mu_t, theta)

        i = t - 1
        theta_hist[i] = theta
        mu_hist[i] = mu_t
        L_hist[i] = L_t
        R_hist[i] = R_t
        if track_br_gap:
            if has_closed_theta_br:
                br = game.theta_br(mu_t)
            else:
                br, _ = theta_br_numeric(game, mu_t, start=theta)  # warm start
            gaps[i] = float(np.linalg.norm(theta - br))

        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(mu_t)) and np.isfinite(R_t)):
            raise DivergenceError(
                t, "non-finite iterate", _finish("reactive", theta_hist, mu_hist, L_hist, R_hist, gaps, state.phi, upto=i)
            )
        state = zero_order_step(state, R_t, agent_sched, mu_feasible, rng)

    return _finish("reactive", theta_hist, mu_hist, L_hist, R_hist, gaps, state.phi.copy())


def run(game: Game, schedule: Schedule, rng: np.random.Generator, **kwargs) -> Trace:
    if schedule.order == "proactive":
        return run_proactive(game, schedule, rng, **kwargs)
    return run_reactive(game, schedule, rng, **kwargs)


def br_gap_series(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """Per-epoch distance of the fast player to its best response, with running average.

    Instruments the vanishing-average-distance property of rational fast players.
    """
    gaps = trace.br_gap
    if np.all(np.isnan(gaps)):
        raise DiagnosticUnavailableError("trace was recorded without a best-response oracle")
    return gaps, _running_average(gaps)


def within_epoch_regret(
    game: Game, theta: Vec, tau: int, eta_mu: float, mu0: Vec | None = None
) -> float:
    """Average within-epoch agent regret (1/tau) sum_j R(mu_j, theta) - min_mu R(mu, theta).

    Only defined for games with a budget-constrained agent set, where
    min_mu R = -B ||theta|| in closed form.
    """
    if game.mu_set is None or not np.isfinite(game.mu_set.radius):
        raise DiagnosticUnavailableError("closed-form min_mu R needs a bounded agent set")
    theta = as_vec(theta, game.dim)
    mu = np.zeros(game.dim) if mu0 is None else as_vec(mu0, game.dim)
    total = 0.0
    for _ in range(tau):
        mu = agent_gd_step(game, mu, theta, eta_mu, game.mu_set)
        total += game.loss_R(mu, theta)
    r_min = -game.mu_set.radius * float(np.linalg.norm(theta))
    return total / tau - r_min


def cumulative_sr_regret(game: Game, trace: Trace, target_risk_L: float) -> float:
    """Cumulative Stackelberg regret sum_t (SR_L(theta_t) - SR_L(theta_SE)).

    Requires a closed-form follower best response so SR_L is directly evaluable.
    """
    return float(np.sum(game.sr_L_batch(trace.theta) - target_risk_L))


def stationarity_check(
    game: Game,
    trace: Trace,
    delta: float,
    n_mc: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of the smoothed-Stackelberg-risk gradient norm at the
    final center of a proactive run.

    Uses the sphere-sampling identity grad = (d / delta) E[SR_L(phi + delta u) u]
    with antithetic pairs (u, -u), which estimates the same expectation at far
    lower variance.  Returns the norm of the estimate.
    """
    if n_mc <= 0:
        raise ValueError("n_mc must be positive")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if trace.order != "proactive" or trace.final_phi is None:
        raise DiagnosticUnavailableError("needs the final center of a proactive run")
    phi = as_vec(trace.final_phi, game.dim)
    d = game.dim
    u = rng.standard_normal((n_mc, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    plus = game.sr_L_batch(phi[None, :] + delta * u)
    minus = game.sr_L_batch(phi[None, :] - delta * u)
    grad_est = (d / (2.0 * delta)) * np.mean((plus - minus)[:, None] * u, axis=0)
    return float(np.linalg.norm(grad_est))
