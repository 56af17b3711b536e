"""Request/response models for the benchmark service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..config import GameConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict  # experiment config document; may name a preset
    seed: int | None = None
    scale: int | None = Field(default=None, ge=1)
    full_scale: bool = False
    include_traces: bool = True


class TracePayloadOut(BaseModel):
    label: str
    trace_file: str
    csv: str | None


class RunResponse(BaseModel):
    results: dict
    traces: list[TracePayloadOut]
    ok: bool


class EquilibriaRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    game: GameConfig
    grid: int | None = Field(default=None, ge=2)
    dm_steps: int = Field(default=10_000, ge=1)  # matches equilibria.INNER_GD_MAX_STEPS
    dm_eta: float = Field(default=0.1, gt=0)
    inner_eta: float = Field(default=0.1, gt=0)


class EquilibriaResponse(BaseModel):
    game: dict
    dm_leads: dict
    agents_lead: dict
    delta_L: float
    delta_R: float


class PreferenceTableRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    games: list[GameConfig]


class PreferenceTableResponse(BaseModel):
    rows: list[dict]
    csv: str


class TracePayloadIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theta: list[list[float]]
    loss_L: list[float]


class RegretSlopeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    traces: list[TracePayloadIn] = Field(min_length=1)
    target_risk_L: float
    game: GameConfig | None = None  # closed-form SR_L oracle when provided


class RegretSlopeResponse(BaseModel):
    slope: float
    points: list[dict]
    warnings: list[str]
