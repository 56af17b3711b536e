"""FastAPI service exposing the benchmark operations.

The service executes runs synchronously (desk-scale presets are seconds) and
returns trace CSVs inline so clients own their files.  Validation problems are
reported with every failing field, not just the first.
"""

from __future__ import annotations

import warnings

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ConfigError, parse_config
from ..equilibria import compute_equilibria
from ..runner import (
    ParsedTrace,
    execute_experiment,
    fit_regret_slope,
    preference_rows,
    preference_rows_to_csv,
)
from .models import (
    EquilibriaRequest,
    EquilibriaResponse,
    HealthResponse,
    PreferenceTableRequest,
    PreferenceTableResponse,
    RegretSlopeRequest,
    RegretSlopeResponse,
    RunRequest,
    RunResponse,
    TracePayloadOut,
)

app = FastAPI(title="stackbench", version=__version__)


@app.get("/healthz", response_model=HealthResponse)
def healthz() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/experiments/run", response_model=RunResponse)
def run_experiment(req: RunRequest) -> RunResponse:
    doc = dict(req.config)
    if req.seed is not None:
        doc["seed"] = req.seed
    if req.full_scale:
        doc["scale"] = 1
    elif req.scale is not None:
        doc["scale"] = req.scale
    try:
        config = parse_config(doc)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=exc.problems) from exc
    result = execute_experiment(config)
    return RunResponse(
        results=result.document,
        traces=[
            TracePayloadOut(
                label=art.label,
                trace_file=art.trace_file,
                csv=art.csv_text if req.include_traces else None,
            )
            for art in result.artifacts
        ],
        ok=result.ok,
    )


@app.post("/equilibria", response_model=EquilibriaResponse)
def equilibria(req: EquilibriaRequest) -> EquilibriaResponse:
    game = req.game.build()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        dm, ag = compute_equilibria(
            game, grid=req.grid, dm_steps=req.dm_steps, dm_eta=req.dm_eta, inner_eta=req.inner_eta
        )
    return EquilibriaResponse(
        game=req.game.model_dump(),
        dm_leads=dm.to_dict(),
        agents_lead=ag.to_dict(),
        delta_L=dm.risk_L - ag.risk_L,
        delta_R=dm.risk_R - ag.risk_R,
    )


@app.post("/preference-table", response_model=PreferenceTableResponse)
def preference_table(req: PreferenceTableRequest) -> PreferenceTableResponse:
    rows = preference_rows(req.games)
    return PreferenceTableResponse(rows=rows, csv=preference_rows_to_csv(rows))


@app.post("/regret-slope", response_model=RegretSlopeResponse)
def regret_slope(req: RegretSlopeRequest) -> RegretSlopeResponse:
    traces = []
    for payload in req.traces:
        theta = np.asarray(payload.theta, dtype=float)
        loss_L = np.asarray(payload.loss_L, dtype=float)
        n = len(loss_L)
        traces.append(
            ParsedTrace(
                epoch=np.arange(1, n + 1),
                theta=theta,
                mu=np.zeros_like(theta),
                loss_L=loss_L,
                loss_R=np.zeros(n),
                running_avg_L=np.zeros(n),
                running_avg_R=np.zeros(n),
                br_gap=np.full(n, np.nan),
            )
        )
    game = req.game.build() if req.game is not None else None
    try:
        slope, points, warns = fit_regret_slope(traces, req.target_risk_L, game=game)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=[str(exc)]) from exc
    return RegretSlopeResponse(slope=slope, points=points, warnings=warns)
