"""Experiment execution and artifact serialization.

Executes validated configs, builds the results document, and owns the two file
formats: the per-epoch trace CSV and the results JSON.  Every number in a
results document is reproducible from (config, seed); wall-clock fields are
confined to ``created_at`` and ``duration_seconds``.
"""

from __future__ import annotations

import io
import time
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ExperimentConfig, RunConfig
from .dynamics import DivergenceError, Schedule, Trace, cumulative_sr_regret, run
from .equilibria import EquilibriumReport, compute_equilibria
from .games import Game, LinearRegressionGame

TRACE_FLOAT_FORMAT = "%.17g"  # bit-exact float round-trip


def _fmt(x: float) -> str:
    return TRACE_FLOAT_FORMAT % x


def trace_to_csv(trace: Trace, aborted_at: int | None = None) -> str:
    """Serialize a trace to CSV text.

    Columns: epoch, theta_0..theta_{d-1}, mu_0..mu_{d-1}, L, R, running_avg_L,
    running_avg_R, br_gap.  Floats carry 17 significant digits.  An aborted run
    ends with a comment line carrying the offending epoch.
    """
    d = trace.theta.shape[1]
    buf = io.StringIO()
    cols = (
        ["epoch"]
        + [f"theta_{i}" for i in range(d)]
        + [f"mu_{i}" for i in range(d)]
        + ["L", "R", "running_avg_L", "running_avg_R", "br_gap"]
    )
    buf.write(",".join(cols) + "\n")
    for i in range(len(trace)):
        row = [str(i + 1)]
        row += [_fmt(v) for v in trace.theta[i]]
        row += [_fmt(v) for v in trace.mu[i]]
        row += [
            _fmt(trace.loss_L[i]),
            _fmt(trace.loss_R[i]),
            _fmt(trace.running_avg_L[i]),
            _fmt(trace.running_avg_R[i]),
            _fmt(trace.br_gap[i]),
        ]
        buf.write(",".join(row) + "\n")
    if aborted_at is not None:
        buf.write(f"# aborted epoch={aborted_at} non-finite iterate\n")
    return buf.getvalue()


@dataclass
class ParsedTrace:
    """Columns read back from a trace CSV."""

    epoch: np.ndarray
    theta: np.ndarray
    mu: np.ndarray
    loss_L: np.ndarray
    loss_R: np.ndarray
    running_avg_L: np.ndarray
    running_avg_R: np.ndarray
    br_gap: np.ndarray
    aborted_at: int | None = None


def parse_trace_csv(text: str) -> ParsedTrace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trace CSV")
    header = lines[0].split(",")
    aborted_at = None
    rows = []
    for ln in lines[1:]:
        if ln.startswith("#"):
            if "aborted epoch=" in ln:
                aborted_at = int(ln.split("aborted epoch=")[1].split()[0])
            continue
        rows.append([float(v) for v in ln.split(",")])
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(header)))
    col = {name: i for i, name in enumerate(header)}
    d = sum(1 for name in header if name.startswith("theta_"))
    theta = data[:, [col[f"theta_{i}"] for i in range(d)]]
    mu = data[:, [col[f"mu_{i}"] for i in range(d)]]
    return ParsedTrace(
        epoch=data[:, col["epoch"]].astype(int),
        theta=theta,
        mu=mu,
        loss_L=data[:, col["L"]],
        loss_R=data[:, col["R"]],
        running_avg_L=data[:, col["running_avg_L"]],
        running_avg_R=data[:, col["running_avg_R"]],
        br_gap=data[:, col["br_gap"]],
        aborted_at=aborted_at,
    )


@dataclass
class RunArtifact:
    """One executed run: its trace, CSV text, and summary block."""

    label: str
    trace_file: str
    csv_text: str
    summary: dict
    trace: Trace


@dataclass
class ExperimentResult:
    document: dict
    artifacts: list[RunArtifact]
    ok: bool


def _run_rng(seed: int, index: int) -> np.random.Generator:
    # one stream per run within a config; independent of the dataset stream
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _tail_mean(x: np.ndarray, fraction: float = 0.1) -> float:
    k = max(1, int(len(x) * fraction))
    return float(np.mean(x[-k:]))


def _summarize(
    trace: Trace,
    game: Game,
    reports: tuple[EquilibriumReport, EquilibriumReport] | None,
    aborted_at: int | None,
) -> dict:
    gaps = trace.br_gap
    has_gaps = len(gaps) > 0 and not np.all(np.isnan(gaps))
    summary: dict = {
        "order": trace.order,
        "epochs": len(trace),
        "aborted_at": aborted_at,
        "terminal": {
            "running_avg_L": float(trace.running_avg_L[-1]) if len(trace) else None,
            "running_avg_R": float(trace.running_avg_R[-1]) if len(trace) else None,
        },
        "tail": {
            # means over the terminal 10% of epochs: of the running-average
            # columns, and of the instantaneous risks (where the dynamics sit)
            "running_avg_L": _tail_mean(trace.running_avg_L) if len(trace) else None,
            "running_avg_R": _tail_mean(trace.running_avg_R) if len(trace) else None,
            "instant_L": _tail_mean(trace.loss_L) if len(trace) else None,
            "instant_R": _tail_mean(trace.loss_R) if len(trace) else None,
        },
        "br_gap": (
            {
                "mean": float(np.nanmean(gaps)),
                "final": float(gaps[-1]),
                "total": float(np.nansum(gaps)),
            }
            if has_gaps
            else None
        ),
        "stackelberg_regret_L": None,
    }
    if reports is not None and trace.order == "proactive" and len(trace) and aborted_at is None:
        dm_report = reports[0]
        summary["stackelberg_regret_L"] = cumulative_sr_regret(game, trace, dm_report.risk_L)
    return summary


def execute_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every configured (order, schedule) against the config's game.

    Collects per-run trace CSVs and a results document.  A diverging run is
    recorded with its abort epoch and a truncated trace; remaining runs still
    execute.  ``ok`` is False if any run aborted.
    """
    t_start = time.time()
    game = config.game.build()
    digest = config.digest()

    reports: tuple[EquilibriumReport, EquilibriumReport] | None = None
    equilibria_block = None
    if config.compute_equilibria:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            reports = compute_equilibria(game)
        equilibria_block = {
            "dm_leads": reports[0].to_dict(),
            "agents_lead": reports[1].to_dict(),
        }

    artifacts: list[RunArtifact] = []
    ok = True
    for idx, run_cfg in enumerate(config.runs):
        label = f"{config.name}-{run_cfg.order}"
        eff_T = config.effective_T(run_cfg)
        slow = run_cfg.build_schedule(game.dim, eff_T)
        schedule = Schedule(
            order=run_cfg.order,
            T=eff_T,
            tau=run_cfg.tau,
            dm_schedule=slow if run_cfg.order == "proactive" else run_cfg.fast_eta,
            agent_schedule=run_cfg.fast_eta if run_cfg.order == "proactive" else slow,
            iterate_mode=run_cfg.iterate_mode,
        )
        rng = _run_rng(config.seed, idx)
        aborted_at = None
        try:
            trace = run(game, schedule, rng)
        except DivergenceError as exc:
            ok = False
            aborted_at = exc.epoch
            trace = exc.partial
        trace.rng_seed = config.seed
        trace.config_digest = digest
        artifacts.append(
            RunArtifact(
                label=label,
                trace_file=f"{label}.trace.csv",
                csv_text=trace_to_csv(trace, aborted_at=aborted_at),
                summary=_summarize(trace, game, reports, aborted_at),
                trace=trace,
            )
        )

    document = {
        "schema": "stackbench/results/v1",
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "duration_seconds": time.time() - t_start,
        "name": config.name,
        "config": config.model_dump(),
        "config_digest": digest,
        "equilibria": equilibria_block,
        "runs": [
            {"trace_file": art.trace_file, **art.summary} for art in artifacts
        ],
        "ok": ok,
    }
    return ExperimentResult(document=document, artifacts=artifacts, ok=ok)


# ---------------------------------------------------------------------------
# Regret scaling
# ---------------------------------------------------------------------------


def fit_power_law(horizons, totals) -> float:
    """Least-squares slope of log(total) against log(horizon)."""
    h = np.asarray(horizons, dtype=float)
    r = np.asarray(totals, dtype=float)
    if len(h) < 2:
        raise ValueError("need at least two horizons to fit a slope")
    return float(np.polyfit(np.log(h), np.log(r), 1)[0])


def fit_regret_slope(
    traces: list[ParsedTrace],
    target_risk_L: float,
    game: Game | None = None,
) -> tuple[float, list[dict], list[str]]:
    """Slope of log cumulative Stackelberg regret against log horizon.

    Each trace contributes one point (its horizon, its cumulative regret).
    When the game has a closed-form follower response, regret uses the exact
    SR_L(theta_t); otherwise it falls back to the recorded instantaneous L.
    Traces at the same horizon are averaged before fitting.  Points with
    nonpositive total regret are excluded with a warning.
    """
    warnings_out: list[str] = []
    by_horizon: dict[int, list[float]] = {}
    for i, tr in enumerate(traces):
        horizon = len(tr.loss_L)
        if horizon == 0:
            warnings_out.append(f"trace {i}: empty, skipped")
            continue
        if game is not None:
            total = float(np.sum(game.sr_L_batch(tr.theta) - target_risk_L))
        else:
            total = float(np.sum(tr.loss_L - target_risk_L))
            warnings_out.append(f"trace {i}: no game oracle, regret from recorded L")
        by_horizon.setdefault(horizon, []).append(total)

    points = []
    for horizon in sorted(by_horizon):
        mean_regret = float(np.mean(by_horizon[horizon]))
        if mean_regret <= 0:
            warnings_out.append(
                f"horizon {horizon}: nonpositive mean regret {mean_regret:.3g}, excluded"
            )
            continue
        points.append({"horizon": horizon, "regret": mean_regret, "n_traces": len(by_horizon[horizon])})

    if len(points) < 2:
        raise ValueError("fewer than two usable horizons after exclusions")
    slope = fit_power_law([p["horizon"] for p in points], [p["regret"] for p in points])
    return slope, points, warnings_out


# ---------------------------------------------------------------------------
# Preference tables
# ---------------------------------------------------------------------------

PREFERENCE_COLUMNS = [
    "kind",
    "variant",
    "p",
    "B",
    "lam",
    "beta",
    "sigma2",
    "n",
    "data_seed",
    "risk_L_dm_leads",
    "risk_L_agents_lead",
    "risk_R_dm_leads",
    "risk_R_agents_lead",
    "delta_L",
    "delta_R",
    "error",
]


def preference_rows(game_configs: list) -> list[dict]:
    """Evaluate both equilibria for each game config; oracle failures are
    recorded per row and the sweep continues."""
    rows = []
    for gc in game_configs:
        row = {
            "kind": gc.kind,
            "variant": gc.variant or "",
            "p": "" if gc.p is None else gc.p,
            "B": "" if gc.B is None else gc.B,
            "lam": "" if gc.lam is None else gc.lam,
            "beta": "" if gc.beta is None else ";".join(_fmt(b) for b in gc.beta),
            "sigma2": gc.sigma2,
            "n": "" if gc.n is None else gc.n,
            "data_seed": gc.data_seed,
        }
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                dm, ag = compute_equilibria(gc.build())
            row.update(
                risk_L_dm_leads=dm.risk_L,
                risk_L_agents_lead=ag.risk_L,
                risk_R_dm_leads=dm.risk_R,
                risk_R_agents_lead=ag.risk_R,
                delta_L=dm.risk_L - ag.risk_L,
                delta_R=dm.risk_R - ag.risk_R,
                error="",
            )
        except Exception as exc:  # oracle failure: record and continue
            row.update(
                risk_L_dm_leads="",
                risk_L_agents_lead="",
                risk_R_dm_leads="",
                risk_R_agents_lead="",
                delta_L="",
                delta_R="",
                error=str(exc),
            )
        rows.append(row)
    return rows


def preference_rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(PREFERENCE_COLUMNS) + "\n")
    for row in rows:
        cells = []
        for col in PREFERENCE_COLUMNS:
            v = row.get(col, "")
            cells.append(_fmt(v) if isinstance(v, float) else str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
