"""Stackelberg equilibria and risks for both orders of play.

The linear regression game has exact closed forms.  Logistic games use two
numerical oracles: gradient descent on the leader's composite risk through the
closed-form follower response (decision-maker leads), and grid search with an
inner gradient-descent best response (agents lead).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .games import (
    DegenerateGameError,
    Game,
    LinearRegressionGame,
    LogisticGame,
    Vec,
    as_vec,
    _sigmoid,
)

INNER_GD_TOL = 1e-8
INNER_GD_MAX_STEPS = 10_000


@dataclass
class EquilibriumReport:
    """Equilibrium point, both players' risks there, and how it was computed."""

    leader: str  # "decision_maker" | "agents"
    point: Vec
    follower_point: Vec
    risk_L: float
    risk_R: float
    method: str  # "closed_form" | "outer_gd" | "grid_search"
    residual: float = 0.0
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "leader": self.leader,
            "point": [float(x) for x in self.point],
            "follower_point": [float(x) for x in self.follower_point],
            "risk_L": float(self.risk_L),
            "risk_R": float(self.risk_R),
            "method": self.method,
            "residual": float(self.residual),
            "warning": self.warning,
        }


def mu_br_constrained(theta: Vec, B: float) -> Vec:
    """Budget-B best response: move the full budget along theta.

    theta = 0 makes every feasible mu a best response; returns 0 and warns.
    """
    theta = as_vec(theta)
    if B < 0:
        raise ValueError("B must be nonnegative")
    n = float(np.linalg.norm(theta))
    if n == 0.0:
        warnings.warn("theta = 0: best response degenerate, returning 0", RuntimeWarning)
        return np.zeros_like(theta)
    return (B / n) * theta


def mu_br_costly(theta: Vec, lam: float) -> Vec:
    """Quadratic-penalty best response theta / lam."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return as_vec(theta) / lam


def theta_br_linear(mu: Vec, beta: Vec) -> Vec:
    """(I + mu mu^T)^{-1} beta computed via the Sherman-Morrison identity."""
    mu = as_vec(mu)
    beta = as_vec(beta, mu.shape[0])
    return beta - mu * (np.dot(mu, beta) / (1.0 + np.dot(mu, mu)))


def linear_equilibria(game: LinearRegressionGame) -> tuple[EquilibriumReport, EquilibriumReport]:
    """Closed-form equilibria for the linear regression game, both orders of play."""
    beta = game.beta_vec
    norm_b = float(np.linalg.norm(beta))
    if norm_b == 0.0:
        raise DegenerateGameError("beta = 0: every theta is an equilibrium")
    B = game.B

    theta_se = beta / (1.0 + B**2)
    mu_at_dm = game.mu_br(theta_se)
    dm_report = EquilibriumReport(
        leader="decision_maker",
        point=theta_se,
        follower_point=mu_at_dm,
        risk_L=0.5 * game.sigma2 + norm_b**2 * B**2 / (2.0 * (1.0 + B**2)),
        risk_R=-norm_b * B / (1.0 + B**2),
        method="closed_form",
    )

    m = min(1.0, B)
    mu_se = m * beta / norm_b if norm_b > 0 else np.zeros(game.dim)
    agents_report = EquilibriumReport(
        leader="agents",
        point=mu_se,
        follower_point=game.theta_br(mu_se),
        risk_L=0.5 * game.sigma2 + norm_b**2 * m**2 / (2.0 * (1.0 + m**2)),
        risk_R=-norm_b * m / (1.0 + m**2),
        method="closed_form",
    )
    return dm_report, agents_report


def _mu_br_jacobian_apply(game: Game, theta: Vec, v: Vec) -> Vec:
    """Apply the transposed Jacobian of the closed-form best response map to v."""
    if isinstance(game, LogisticGame) and game.variant == "costly":
        return v / game.lam
    # budget variant: mu_br = B * theta / ||theta||, Jacobian is tangential
    n = float(np.linalg.norm(theta))
    that = theta / n
    return (game.B / n) * (v - that * float(np.dot(that, v)))


def sr_L_grad(game: Game, theta: Vec) -> Vec:
    """Gradient of the decision-maker's Stackelberg risk via the chain rule
    through the closed-form follower response."""
    mu = game.mu_br(theta)
    g = game.grad_L_theta(mu, theta)
    return g + _mu_br_jacobian_apply(game, theta, game.grad_L_mu(mu, theta))


def _nudge_off_origin(theta: Vec) -> Vec:
    nudged = theta.copy()
    nudged[0] += 1e-8  # mu_br undefined at 0 in the budget variant
    return nudged


def dm_equilibrium_numeric(
    game: Game,
    steps: int = INNER_GD_MAX_STEPS,
    eta: float = 0.1,
    tol: float = INNER_GD_TOL,
) -> EquilibriumReport:
    """Decision-maker's equilibrium by gradient descent on SR_L(theta) = L(mu_br(theta), theta).

    Uses the exact composite gradient through the closed-form best response.
    Starts from theta = 0 and stops at gradient norm <= tol or after `steps`
    iterations, whichever first (same stopping rule as the inner best-response
    oracle, so the two oracles agree when the equilibria coincide).  Reports the
    final gradient norm as the residual.
    """
    constrained = not (isinstance(game, LogisticGame) and game.variant == "costly")
    theta = np.zeros(game.dim)
    residual = float("inf")
    for _ in range(steps):
        if constrained and float(np.linalg.norm(theta)) == 0.0:
            theta = _nudge_off_origin(theta)
        g = sr_L_grad(game, theta)
        residual = float(np.linalg.norm(g))
        if residual <= tol:
            break
        theta = theta - eta * g
        if not np.all(np.isfinite(theta)):
            raise FloatingPointError("dm_equilibrium_numeric: non-finite iterate")
    if constrained and float(np.linalg.norm(theta)) == 0.0:
        theta = _nudge_off_origin(theta)
    residual = float(np.linalg.norm(sr_L_grad(game, theta)))
    mu = game.mu_br(theta)
    return EquilibriumReport(
        leader="decision_maker",
        point=theta,
        follower_point=mu,
        risk_L=game.loss_L(mu, theta),
        risk_R=game.loss_R(mu, theta),
        method="outer_gd",
        residual=residual,
    )


def theta_br_numeric(
    game: Game,
    mu: Vec,
    eta: float = 0.1,
    tol: float = INNER_GD_TOL,
    max_steps: int = INNER_GD_MAX_STEPS,
    start: Vec | None = None,
) -> tuple[Vec, float]:
    """Decision-maker's best response by gradient descent on L(mu, .).

    Stops at gradient norm <= tol or after max_steps, whichever first.
    Returns (theta, final gradient norm).
    """
    theta = np.zeros(game.dim) if start is None else as_vec(start, game.dim).copy()
    for _ in range(max_steps):
        g = game.grad_L_theta(mu, theta)
        res = float(np.linalg.norm(g))
        if res <= tol:
            return theta, res
        theta = theta - eta * g
    return theta, float(np.linalg.norm(game.grad_L_theta(mu, theta)))


def _theta_br_batch_logistic(
    game: LogisticGame,
    mus: np.ndarray,
    eta: float,
    tol: float,
    max_steps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Inner best responses for a batch of candidate mu, vectorized over the batch.

    Every candidate starts from theta = 0 so results do not depend on evaluation
    order.  Converged candidates are retired from the working set periodically.
    Returns (thetas, residual norms)."""
    X0 = game.features
    y = game.labels.astype(float)
    neg = game._neg_mask
    n = game.n
    K, d = mus.shape
    out_thetas = np.zeros((K, d))
    out_res = np.zeros(K)
    active = np.arange(K)
    act_mus = mus.copy()
    act_thetas = np.zeros((K, d))
    check_every = 25

    def _grads(th, m):
        dots = np.einsum("kd,kd->k", m, th)
        z = th @ X0.T + dots[:, None] * neg[None, :]
        w = _sigmoid(z) - y[None, :]
        return (w @ X0) / n + ((w * neg[None, :]).sum(axis=1) / n)[:, None] * m

    for step in range(max_steps):
        grads = _grads(act_thetas, act_mus)
        if step % check_every == 0:
            res = np.linalg.norm(grads, axis=1)
            done = res <= tol
            if np.any(done):
                out_thetas[active[done]] = act_thetas[done]
                out_res[active[done]] = res[done]
                keep = ~done
                active = active[keep]
                if active.size == 0:
                    return out_thetas, out_res
                act_mus = act_mus[keep]
                act_thetas = act_thetas[keep]
                grads = grads[keep]
        act_thetas -= eta * grads
    res = np.linalg.norm(_grads(act_thetas, act_mus), axis=1)
    out_thetas[active] = act_thetas
    out_res[active] = res
    return out_thetas, out_res


def _evaluate_candidates(
    game: Game, mus: np.ndarray, inner_eta: float, inner_steps: int, tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SR_R over candidate leaders; returns (values, follower thetas, residuals)."""
    if isinstance(game, LinearRegressionGame):
        thetas = np.stack([game.theta_br(mu) for mu in mus])
        residuals = np.zeros(len(mus))
    else:
        thetas, residuals = _theta_br_batch_logistic(game, mus, inner_eta, tol, inner_steps)
    values = np.array([game.loss_R(mu, th) for mu, th in zip(mus, thetas)])
    return values, thetas, residuals


def _grid_bound(game: Game, grid_bound: float | None) -> float:
    if grid_bound is not None:
        return grid_bound
    if isinstance(game, LinearRegressionGame):
        return game.B
    if game.variant == "constrained":
        return game.B
    if game.population is None:
        raise ValueError("costly game without population: pass grid_bound explicitly")
    alpha_norm = float(np.linalg.norm(game.population.alpha))
    return 3.0 * alpha_norm / game.lam + 1.0


def _argmin_with_tiebreak(values: np.ndarray, mus: np.ndarray) -> int:
    """Smallest value; ties broken toward smaller ||mu||, then lower index."""
    best = 0
    best_norm = float(np.linalg.norm(mus[0]))
    for k in range(1, len(values)):
        v = values[k]
        if v < values[best]:
            best, best_norm = k, float(np.linalg.norm(mus[k]))
        elif v == values[best]:
            nk = float(np.linalg.norm(mus[k]))
            if nk < best_norm:
                best, best_norm = k, nk
    return best


def agents_equilibrium_numeric(
    game: Game,
    grid: int | None = None,
    inner_steps: int = INNER_GD_MAX_STEPS,
    inner_eta: float = 0.1,
    inner_tol: float = INNER_GD_TOL,
    grid_bound: float | None = None,
) -> EquilibriumReport:
    """Agents' equilibrium by grid search over mu with an inner best-response oracle.

    In one dimension the grid is `grid` (default 1001) equally spaced points on
    [-bound, bound].  In two dimensions (costly-deviation games) a grid x grid
    lattice (default 101 per axis) is searched and then refined once around the
    incumbent (half-width of two original cells, same point count).  Higher
    dimensions are not supported.
    """
    bound = _grid_bound(game, grid_bound)
    d = game.dim
    if grid is None:
        grid = 1001 if d == 1 else 101
    if grid < 2:
        raise ValueError("grid must have at least 2 points")

    if bound == 0.0:
        mu = np.zeros(d)
        theta, res = _follower_at(game, mu, inner_eta, inner_steps, inner_tol)
        return _grid_report(game, mu, theta, res, inner_tol)

    if d == 1:
        mus = np.linspace(-bound, bound, grid).reshape(-1, 1)
        values, thetas, residuals = _evaluate_candidates(game, mus, inner_eta, inner_steps, inner_tol)
        k = _argmin_with_tiebreak(values, mus)
        return _grid_report(game, mus[k], thetas[k], float(residuals[k]), inner_tol)

    if d == 2:
        side = grid
        axis = np.linspace(-bound, bound, side)
        spacing = axis[1] - axis[0]
        mus = np.array([[a, b] for a in axis for b in axis])
        values, thetas, residuals = _evaluate_candidates(game, mus, inner_eta, inner_steps, inner_tol)
        k = _argmin_with_tiebreak(values, mus)
        # one refinement pass around the incumbent, half-width two original cells
        center = mus[k]
        lo, hi = center - 2 * spacing, center + 2 * spacing
        ax0 = np.linspace(lo[0], hi[0], side)
        ax1 = np.linspace(lo[1], hi[1], side)
        mus2 = np.array([[a, b] for a in ax0 for b in ax1])
        values2, thetas2, residuals2 = _evaluate_candidates(game, mus2, inner_eta, inner_steps, inner_tol)
        all_mus = np.concatenate([mus, mus2])
        all_values = np.concatenate([values, values2])
        all_thetas = np.concatenate([thetas, thetas2])
        all_res = np.concatenate([residuals, residuals2])
        k = _argmin_with_tiebreak(all_values, all_mus)
        return _grid_report(game, all_mus[k], all_thetas[k], float(all_res[k]), inner_tol)

    raise ValueError(f"grid search supports d in {{1, 2}}, got d={d}")


def _follower_at(game, mu, inner_eta, inner_steps, inner_tol):
    if isinstance(game, LinearRegressionGame):
        return game.theta_br(mu), 0.0
    theta, res = theta_br_numeric(game, mu, eta=inner_eta, tol=inner_tol, max_steps=inner_steps)
    return theta, res


def _grid_report(game, mu, theta, residual, tol) -> EquilibriumReport:
    warning = None
    if residual > tol:
        warning = f"inner GD residual {residual:.3e} above tolerance {tol:.1e}"
    return EquilibriumReport(
        leader="agents",
        point=np.asarray(mu, dtype=float).reshape(-1),
        follower_point=np.asarray(theta, dtype=float).reshape(-1),
        risk_L=game.loss_L(mu, theta),
        risk_R=game.loss_R(mu, theta),
        method="grid_search",
        residual=residual,
        warning=warning,
    )


@dataclass
class PreferenceTable:
    """Both players' risks at both equilibria, plus the leader-order deltas."""

    dm_leads: EquilibriumReport
    agents_lead: EquilibriumReport
    delta_L: float = field(init=False)
    delta_R: float = field(init=False)

    def __post_init__(self):
        self.delta_L = self.dm_leads.risk_L - self.agents_lead.risk_L
        self.delta_R = self.dm_leads.risk_R - self.agents_lead.risk_R

    def to_dict(self) -> dict:
        return {
            "dm_leads": self.dm_leads.to_dict(),
            "agents_lead": self.agents_lead.to_dict(),
            "delta_L": float(self.delta_L),
            "delta_R": float(self.delta_R),
        }


def compute_equilibria(
    game: Game,
    grid: int | None = None,
    dm_steps: int = INNER_GD_MAX_STEPS,
    dm_eta: float = 0.1,
    inner_eta: float = 0.1,
) -> tuple[EquilibriumReport, EquilibriumReport]:
    """Both equilibria: closed form for the linear game, numerical oracles otherwise."""
    if isinstance(game, LinearRegressionGame):
        return linear_equilibria(game)
    dm = dm_equilibrium_numeric(game, steps=dm_steps, eta=dm_eta)
    ag = agents_equilibrium_numeric(game, grid=grid, inner_eta=inner_eta)
    return dm, ag


def preference_table(game: Game, **oracle_opts) -> PreferenceTable:
    dm, ag = compute_equilibria(game, **oracle_opts)
    return PreferenceTable(dm_leads=dm, agents_lead=ag)
