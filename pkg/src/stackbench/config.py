"""Experiment configuration: strict JSON documents, presets, and validation.

A config document fully determines an experiment: the game, one or two runs
(order of play plus step rules for each player), the seed, and the scale
divisor.  Unknown fields are rejected so sweep generators fail loudly.
"""

from __future__ import annotations

import hashlib
import json
import logging
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .games import LinearRegressionGame, LogisticGame, PopulationSpec
from .optimize import StepSchedule

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid configuration; carries every validation problem, not just the first."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in problems))
        self.problems = problems


class GameConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["linear", "logistic"]
    # linear regression game
    beta: list[float] | None = None
    sigma2: float = Field(default=0.0, ge=0.0)
    # logistic game population
    variant: Literal["constrained", "costly"] | None = None
    p: float | None = Field(default=None, ge=0.0, le=1.0)
    alpha: list[float] | None = None
    n: int | None = Field(default=None, ge=1)
    data_seed: int = 0
    # agent model
    B: float | None = Field(default=None, ge=0.0)
    lam: float | None = Field(default=None, gt=0.0)
    theta_radius: float = Field(default=10.0, gt=0.0)

    @model_validator(mode="after")
    def _check_kind_fields(self):
        if self.kind == "linear":
            if self.beta is None:
                raise ValueError("linear game requires beta")
            if self.B is None:
                raise ValueError("linear game requires the budget B")
        else:
            for name in ("variant", "p", "alpha", "n"):
                if getattr(self, name) is None:
                    raise ValueError(f"logistic game requires {name}")
            if self.variant == "constrained" and self.B is None:
                raise ValueError("constrained logistic game requires the budget B")
            if self.variant == "costly" and self.lam is None:
                raise ValueError("costly logistic game requires the penalty lam")
        return self

    def build(self) -> LinearRegressionGame | LogisticGame:
        if self.kind == "linear":
            return LinearRegressionGame(
                beta=tuple(self.beta), sigma2=self.sigma2, B=self.B, theta_radius=self.theta_radius
            )
        spec = PopulationSpec(p=self.p, alpha=tuple(self.alpha), n=self.n, seed=self.data_seed)
        return LogisticGame.from_population(
            spec, self.variant, B=self.B, lam=self.lam, theta_radius=self.theta_radius
        )


class RunConfig(BaseModel):
    """One run: order of play plus the slow player's schedule and fast player's step."""

    model_config = ConfigDict(extra="forbid")

    order: Literal["proactive", "reactive"]
    T: int = Field(ge=1)
    tau: int = Field(ge=1)
    eta0: float = Field(ge=0.0)
    exponent_eta: float = Field(default=0.75, ge=0.0)
    delta0: float = Field(default=1.0, gt=0.0)
    exponent_delta: float = Field(default=0.25, ge=0.0)
    dim_scaling: bool = False
    delta_mode: Literal["decaying", "constant"] = "decaying"
    fast_eta: float = Field(gt=0.0)
    iterate_mode: Literal["averaged", "last"] = "last"

    def build_schedule(self, dim: int, effective_T: int) -> StepSchedule:
        """The slow player's step schedule; constant-delta mode pins delta to the horizon."""
        delta_const = None
        if self.delta_mode == "constant":
            scale = dim**0.5 if self.dim_scaling else 1.0
            delta_const = self.delta0 * scale * effective_T**-0.25
        return StepSchedule(
            eta0=self.eta0,
            exponent_eta=self.exponent_eta,
            delta0=self.delta0,
            exponent_delta=self.exponent_delta,
            dim_scaling=self.dim_scaling,
            delta_const=delta_const,
        )


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    game: GameConfig
    runs: list[RunConfig] = Field(min_length=1)
    seed: int = 0
    scale: int = Field(default=1, ge=1)  # horizon divisor: effective T = T // scale
    compute_equilibria: bool = True

    def effective_T(self, run: RunConfig) -> int:
        return max(1, run.T // self.scale)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# Presets: the published experiment configurations.
#
# Step sizes, perturbation schedules, epoch lengths, horizons and sample counts
# follow the original experiment protocol for the logistic figures: faster
# player step 0.1 (constrained) or 0.1/0.01 (costly, model/agents), slow-player
# eta_t = eta0 * t^{-3/4} with eta0 per setting, delta_t = t^{-1/4}, tau = 200
# (constrained) or 100 (costly), T = 50000, n = 100 samples, alpha = 2 (d = 1)
# or 1.5*(1,1) (d = 2).  Presets expand at full scale; runners apply a desk
# scale divisor (default 10) unless --full-scale.
# ---------------------------------------------------------------------------

DESK_SCALE = 10

_LINEAR_GAME = {"kind": "linear", "beta": [1.0, 0.0], "sigma2": 0.0, "B": 2.0}


def _logistic_constrained(p: float, B: float) -> dict:
    return {
        "kind": "logistic",
        "variant": "constrained",
        "p": p,
        "alpha": [2.0],
        "n": 100,
        "data_seed": 42,
        "B": B,
    }


def _logistic_costly(p: float, lam: float) -> dict:
    return {
        "kind": "logistic",
        "variant": "costly",
        "p": p,
        "alpha": [1.5, 1.5],
        "n": 100,
        "data_seed": 42,
        "lam": lam,
    }


# eta0 for the derivative-free decision-maker in the constrained experiments
_FIG2_ETA0 = {0.1: 6.0, 0.5: 5.0, 0.9: 10.0}


def _constrained_runs(p: float) -> list[dict]:
    return [
        {
            "order": "proactive",
            "T": 50_000,
            "tau": 200,
            "eta0": _FIG2_ETA0[p],
            "delta0": 1.0,
            "fast_eta": 0.1,
        },
        {
            "order": "reactive",
            "T": 50_000,
            "tau": 200,
            "eta0": 0.02,
            "delta0": 1.0,
            "fast_eta": 0.1,
        },
    ]


def _costly_runs(dm_eta0: float) -> list[dict]:
    return [
        {
            "order": "proactive",
            "T": 50_000,
            "tau": 100,
            "eta0": dm_eta0,
            "delta0": 1.0,
            "fast_eta": 0.01,
        },
        {
            "order": "reactive",
            "T": 50_000,
            "tau": 100,
            "eta0": 0.01,
            "delta0": 1.0,
            "fast_eta": 0.1,
        },
    ]


def _builtin_presets() -> dict[str, dict]:
    presets: dict[str, dict] = {}

    # Desk-scale linear benchmark: both orders converge to the closed-form
    # equilibrium risks (0.4 proactive; 0.25 / -0.5 reactive).  Step parameters
    # calibrated at T=5000, tau=50; see presets docs in the README.
    presets["linear-B2"] = {
        "name": "linear-B2",
        "game": dict(_LINEAR_GAME),
        "runs": [
            {
                "order": "proactive",
                "T": 5_000,
                "tau": 50,
                "eta0": 0.02,
                "delta0": 0.35,
                "fast_eta": 0.1,
            },
            {
                "order": "reactive",
                "T": 5_000,
                "tau": 50,
                "eta0": 0.18,
                "delta0": 1.0,
                "fast_eta": 0.2,
            },
        ],
        "seed": 12,
        "scale": 1,
    }

    for p in (0.1, 0.5, 0.9):
        presets[f"fig2-p{p}-B2"] = {
            "name": f"fig2-p{p}-B2",
            "game": _logistic_constrained(p, 2.0),
            "runs": _constrained_runs(p),
            "seed": 1,
            "scale": DESK_SCALE,
        }
        presets[f"fig3-p{p}-B1"] = {
            "name": f"fig3-p{p}-B1",
            "game": _logistic_constrained(p, 1.0),
            "runs": _constrained_runs(p),
            "seed": 1,
            "scale": DESK_SCALE,
        }
        presets[f"fig4-lam1-p{p}"] = {
            "name": f"fig4-lam1-p{p}",
            "game": _logistic_costly(p, 1.0),
            "runs": _costly_runs(0.1),
            "seed": 1,
            "scale": DESK_SCALE,
        }
        presets[f"fig5-lam20-p{p}"] = {
            "name": f"fig5-lam20-p{p}",
            "game": _logistic_costly(p, 20.0),
            "runs": _costly_runs(1.0),
            "seed": 1,
            "scale": DESK_SCALE,
        }
    return presets


PRESETS = _builtin_presets()


def _format_pydantic_errors(exc: ValidationError) -> list[str]:
    problems = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        problems.append(f"{loc}: {err['msg']}")
    return problems


def parse_config(document: str | dict) -> ExperimentConfig:
    """Parse and validate a config document (JSON text or dict).

    A document may name a ``preset``; its fields are used as defaults and any
    other keys in the document override them.  Raises ConfigError listing every
    validation problem.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"not valid JSON: {exc}"]) from exc
    else:
        doc = dict(document)
    if not isinstance(doc, dict):
        raise ConfigError(["config document must be a JSON object"])

    preset_name = doc.pop("preset", None)
    if preset_name is not None:
        if preset_name not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError([f"unknown preset {preset_name!r}; known presets: {known}"])
        merged = json.loads(json.dumps(PRESETS[preset_name]))  # deep copy
        merged.update(doc)  # explicit fields override the preset
        doc = merged
        logger.info("preset %s expanded to: %s", preset_name, json.dumps(doc, sort_keys=True))

    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_format_pydantic_errors(exc)) from exc
