"""Strategic games between a decision-maker (model player) and a population of agents.

Each game exposes the two players' population losses L(mu, theta) and R(mu, theta),
their gradients, the constraint sets, and closed-form best responses where they
exist.  Game objects are immutable after construction and safe to share across
concurrent runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Vec = np.ndarray


class DimensionMismatchError(ValueError):
    """A vector's dimension does not match the game's dimension."""


class DegenerateGameError(ValueError):
    """Game parameters make the equilibrium ill-defined (e.g. beta = 0)."""


def as_vec(x, dim: int | None = None) -> Vec:
    """Coerce to a finite 1-D float64 array, optionally checking its dimension."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"expected dim {dim}, got {v.shape[0]}")
    return v


def _robust_norm(v: np.ndarray) -> float:
    """2-norm that survives entries whose squares overflow."""
    n = float(np.linalg.norm(v))
    if np.isinf(n):
        m = float(np.max(np.abs(v)))
        if np.isfinite(m) and m > 0.0:
            return m * float(np.linalg.norm(v / m))
    return n


@dataclass(frozen=True)
class BallSet:
    """Euclidean ball {v : ||v||_2 <= radius}.  radius=inf means unconstrained."""

    radius: float
    dim: int

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def contains(self, v: Vec, tol: float = 1e-12) -> bool:
        v = as_vec(v, self.dim)
        return _robust_norm(v) <= self.radius + tol

    def project(self, v: Vec) -> Vec:
        """Euclidean projection; returns v unchanged on the boundary."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            v = as_vec(v, self.dim)
        n = _robust_norm(v)
        if n <= self.radius:
            return v
        return (v / n) * self.radius


@dataclass(frozen=True)
class PopulationSpec:
    """Gaussian mixture population: y ~ Bern(p), x0 | y ~ N((2y-1) * alpha, I)."""

    p: float
    alpha: tuple[float, ...]
    n: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @property
    def dim(self) -> int:
        return len(self.alpha)


def generate_population(spec: PopulationSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw the base (non-strategic) sample set for a logistic game.

    Returns (features, labels) with features of shape (n, d) and binary labels of
    shape (n,).  Deterministic given spec.seed: labels are drawn first, then all
    feature noise in one block, so the output is bit-identical across runs.
    """
    rng = np.random.default_rng(spec.seed)
    alpha = np.array(spec.alpha, dtype=float)
    labels = (rng.random(spec.n) < spec.p).astype(np.int64)
    noise = rng.standard_normal((spec.n, spec.dim))
    features = (2 * labels - 1)[:, None] * alpha[None, :] + noise
    return features, labels


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z) = max(z, 0) + log(1 + e^-|z|), stable for large |z|
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


@dataclass(frozen=True)
class LinearRegressionGame:
    """Linear regression against mean-shifting agents with a movement budget.

    The population loss has the exact closed form
        L(mu, theta) = sigma2/2 + ||beta - theta||^2 / 2 + (mu . theta)^2 / 2
    and the agents' loss is R(mu, theta) = -mu . theta on the ball of radius B.
    No sampling is involved, which keeps equilibrium checks exact.
    """

    beta: tuple[float, ...]
    sigma2: float = 0.0
    B: float = 1.0
    theta_radius: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.B < 0:
            raise ValueError("B must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.beta)

    @property
    def beta_vec(self) -> Vec:
        return np.array(self.beta, dtype=float)

    @property
    def theta_set(self) -> BallSet:
        return BallSet(self.theta_radius, self.dim)

    @property
    def mu_set(self) -> BallSet:
        return BallSet(self.B, self.dim)

    def loss_L(self, mu: Vec, theta: Vec) -> float:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        b = self.beta_vec
        return float(
            0.5 * self.sigma2
            + 0.5 * np.dot(b - theta, b - theta)
            + 0.5 * np.dot(mu, theta) ** 2
        )

    def loss_R(self, mu: Vec, theta: Vec) -> float:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        return float(-np.dot(mu, theta))

    def grad_L_theta(self, mu: Vec, theta: Vec) -> Vec:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        return (theta - self.beta_vec) + np.dot(mu, theta) * mu

    def grad_L_mu(self, mu: Vec, theta: Vec) -> Vec:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        return np.dot(mu, theta) * theta

    def grad_R_mu(self, mu: Vec, theta: Vec) -> Vec:
        as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        return -theta

    def mu_br(self, theta: Vec) -> Vec:
        """Agents' best response: move the full budget along theta."""
        theta = as_vec(theta, self.dim)
        n = float(np.linalg.norm(theta))
        if n == 0.0:
            return np.zeros(self.dim)
        return (self.B / n) * theta

    def theta_br(self, mu: Vec) -> Vec:
        """Decision-maker's best response (I + mu mu^T)^{-1} beta, Sherman-Morrison form."""
        mu = as_vec(mu, self.dim)
        b = self.beta_vec
        return b - mu * (np.dot(mu, b) / (1.0 + np.dot(mu, mu)))

    def sr_L(self, theta: Vec) -> float:
        """Stackelberg risk of the decision-maker, L(mu_br(theta), theta)."""
        theta = as_vec(theta, self.dim)
        b = self.beta_vec
        return float(
            0.5 * self.sigma2
            + 0.5 * np.dot(b - theta, b - theta)
            + 0.5 * self.B**2 * np.dot(theta, theta)
        )

    def sr_L_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        diff = thetas - self.beta_vec[None, :]
        return (
            0.5 * self.sigma2
            + 0.5 * np.einsum("ij,ij->i", diff, diff)
            + 0.5 * self.B**2 * np.einsum("ij,ij->i", thetas, thetas)
        )

    def sr_R(self, mu: Vec) -> float:
        """Stackelberg risk of the agents, R(mu, theta_br(mu)) = -mu.beta / (1 + ||mu||^2)."""
        mu = as_vec(mu, self.dim)
        return float(-np.dot(mu, self.beta_vec) / (1.0 + np.dot(mu, mu)))


@dataclass(frozen=True, eq=False)
class LogisticGame:
    """Logistic regression where negatively labeled agents shift their features by mu.

    The population expectation is realized as a fixed empirical average over the
    sample set frozen at construction, so L is deterministic thereafter.  Two agent
    models are supported:

    * ``constrained``: R(mu, theta) = -mu . theta on the ball of radius B;
    * ``costly``: R(mu, theta) = (lam/2) ||mu||^2 - mu . theta, unconstrained.
    """

    features: np.ndarray
    labels: np.ndarray
    variant: str  # "constrained" | "costly"
    B: float | None = None
    lam: float | None = None
    theta_radius: float = 10.0
    population: PopulationSpec | None = None
    _neg_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("features must be (n, d) with matching (n,) labels")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be binary {0, 1}")
        if self.variant == "constrained":
            if self.B is None or self.B < 0:
                raise ValueError("constrained variant needs a nonnegative budget B")
        elif self.variant == "costly":
            if self.lam is None or self.lam <= 0:
                raise ValueError("costly variant needs a positive penalty lam")
        else:
            raise ValueError(f"unknown variant {self.variant!r}")
        X.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))
        object.__setattr__(self, "_neg_mask", (self.labels == 0).astype(float))

    @classmethod
    def from_population(
        cls,
        spec: PopulationSpec,
        variant: str,
        B: float | None = None,
        lam: float | None = None,
        theta_radius: float = 10.0,
    ) -> "LogisticGame":
        X, y = generate_population(spec)
        return cls(X, y, variant, B=B, lam=lam, theta_radius=theta_radius, population=spec)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def theta_set(self) -> BallSet:
        return BallSet(self.theta_radius, self.dim)

    @property
    def mu_set(self) -> BallSet | None:
        if self.variant == "constrained":
            return BallSet(self.B, self.dim)
        return None  # costly deviations are unconstrained

    def _logits(self, mu: Vec, theta: Vec) -> np.ndarray:
        # x_i = x0_i + mu * 1{y_i = 0}; only the inner product mu.theta enters
        return self.features @ theta + self._neg_mask * float(np.dot(mu, theta))

    def loss_L(self, mu: Vec, theta: Vec) -> float:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        z = self._logits(mu, theta)
        return float(np.mean(_softplus(z) - self.labels * z))

    def loss_R(self, mu: Vec, theta: Vec) -> float:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        if self.variant == "constrained":
            return float(-np.dot(mu, theta))
        return float(0.5 * self.lam * np.dot(mu, mu) - np.dot(mu, theta))

    def grad_L_theta(self, mu: Vec, theta: Vec) -> Vec:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        z = self._logits(mu, theta)
        w = _sigmoid(z) - self.labels  # per-sample residuals
        x = self.features + self._neg_mask[:, None] * mu[None, :]
        return (w @ x) / self.n

    def grad_L_mu(self, mu: Vec, theta: Vec) -> Vec:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        z = self._logits(mu, theta)
        c = float(np.sum(_sigmoid(z) * self._neg_mask)) / self.n
        return c * theta

    def grad_R_mu(self, mu: Vec, theta: Vec) -> Vec:
        mu = as_vec(mu, self.dim)
        theta = as_vec(theta, self.dim)
        if self.variant == "constrained":
            return -theta
        return self.lam * mu - theta

    def mu_br(self, theta: Vec) -> Vec:
        theta = as_vec(theta, self.dim)
        if self.variant == "costly":
            return theta / self.lam
        n = float(np.linalg.norm(theta))
        if n == 0.0:
            return np.zeros(self.dim)
        return (self.B / n) * theta

    def theta_br(self, mu: Vec) -> None:
        return None  # no closed form; see equilibria.theta_br_numeric

    def sr_L(self, theta: Vec) -> float:
        """L at the agents' best response; smooth in theta even at theta = 0."""
        theta = as_vec(theta, self.dim)
        if self.variant == "constrained":
            shift = self.B * float(np.linalg.norm(theta))
        else:
            shift = float(np.dot(theta, theta)) / self.lam
        z = self.features @ theta + self._neg_mask * shift
        return float(np.mean(_softplus(z) - self.labels * z))

    def sr_L_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if self.variant == "constrained":
            shift = self.B * np.linalg.norm(thetas, axis=1)
        else:
            shift = np.einsum("ij,ij->i", thetas, thetas) / self.lam
        z = thetas @ self.features.T + shift[:, None] * self._neg_mask[None, :]
        return np.mean(_softplus(z) - self.labels[None, :] * z, axis=1)


Game = LinearRegressionGame | LogisticGame


def check_dims(game: Game, *vecs) -> None:
    for v in vecs:
        as_vec(v, game.dim)
