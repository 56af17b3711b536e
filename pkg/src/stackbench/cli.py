"""Command-line client for the benchmark service.

Every verb talks to the HTTP API: against a remote server when --server is
given, otherwise against an in-process instance of the same app (no socket
needed).  Files are always written client-side.
"""

from __future__ import annotations

import concurrent.futures
import glob as globmod
import json
import os
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .config import PRESETS


def _make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process transport: same endpoints, no socket
    from starlette.testclient import TestClient

    from .service.app import app  # imported lazily: pulls in the full stack

    return TestClient(app)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 422:
        detail = resp.json().get("detail", [])
        if isinstance(detail, list):
            for item in detail:
                click.echo(f"error: {item}", err=True)
        else:
            click.echo(f"error: {detail}", err=True)
        sys.exit(2)
    resp.raise_for_status()
    return resp.json()


def _load_config_document(config_arg: str) -> dict:
    """A config argument is a JSON file path, or a bare preset name."""
    if config_arg in PRESETS:
        return {"preset": config_arg}
    path = Path(config_arg)
    if not path.exists():
        known = ", ".join(sorted(PRESETS))
        raise click.ClickException(
            f"{config_arg!r} is neither a config file nor a preset (known presets: {known})"
        )
    return json.loads(path.read_text())


def _out_dir(out: str | None) -> Path:
    target = out or os.environ.get("STACKBENCH_OUT", ".")
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


@click.group()
@click.version_option(__version__)
@click.option("--server", default=None, envvar="STACKBENCH_SERVER", help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx, server):
    """Benchmark harness for two-timescale Stackelberg learning dynamics."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


def _run_one(server, document, seed, scale, full_scale, out_path) -> tuple[str, bool]:
    with _make_client(server) as client:
        data = _post(
            client,
            "/experiments/run",
            {
                "config": document,
                "seed": seed,
                "scale": scale,
                "full_scale": full_scale,
                "include_traces": True,
            },
        )
    name = data["results"]["name"]
    for payload in data["traces"]:
        (out_path / payload["trace_file"]).write_text(payload["csv"])
    results_file = out_path / f"{name}.results.json"
    results_file.write_text(json.dumps(data["results"], indent=2) + "\n")
    return str(results_file), data["ok"]


@main.command()
@click.argument("config")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--scale", type=int, default=None, help="Horizon divisor override.")
@click.option("--full-scale", is_flag=True, help="Run the full published horizon (scale 1).")
@click.option("--out", default=None, help="Output directory (or $STACKBENCH_OUT).")
@click.pass_context
def run(ctx, config, seed, scale, full_scale, out):
    """Run one experiment config (file path or preset name)."""
    document = _load_config_document(config)
    out_path = _out_dir(out)
    results_file, ok = _run_one(ctx.obj["server"], document, seed, scale, full_scale, out_path)
    click.echo(f"results: {results_file}")
    if not ok:
        click.echo("run aborted; partial trace flushed with abort marker", err=True)
        sys.exit(1)


@main.command()
@click.argument("config_glob")
@click.option("--seeds", default=None, help="Comma-separated seeds; each config runs once per seed.")
@click.option("--scale", type=int, default=None)
@click.option("--full-scale", is_flag=True)
@click.option("--workers", type=int, default=4, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def sweep(ctx, config_glob, seeds, scale, full_scale, workers, out):
    """Run every config matching a glob, optionally across multiple seeds."""
    paths = sorted(globmod.glob(config_glob))
    if not paths:
        raise click.ClickException(f"no configs match {config_glob!r}")
    seed_list = [int(s) for s in seeds.split(",")] if seeds else [None]
    out_path = _out_dir(out)
    jobs = []
    for p in paths:
        document = json.loads(Path(p).read_text())
        for seed in seed_list:
            doc = dict(document)
            if seed is not None:
                doc["name"] = f"{doc.get('name', Path(p).stem)}-seed{seed}"
            jobs.append((doc, seed))
    failures = 0
    server = ctx.obj["server"]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_one, server, doc, seed, scale, full_scale, out_path)
            for doc, seed in jobs
        ]
        for fut in concurrent.futures.as_completed(futures):
            results_file, ok = fut.result()
            click.echo(f"results: {results_file}")
            failures += 0 if ok else 1
    if failures:
        click.echo(f"{failures} run(s) aborted", err=True)
        sys.exit(1)


@main.command()
@click.argument("config")
@click.option("--out", default=None, help="Write the report JSON here (default: stdout).")
@click.pass_context
def equilibria(ctx, config, out):
    """Compute both Stackelberg equilibria for a game config."""
    document = _load_config_document(config)
    game = document.get("game", document)  # accept a bare game document too
    if "preset" in document:
        from .config import parse_config

        game = parse_config(document).game.model_dump()
    with _make_client(ctx.obj["server"]) as client:
        data = _post(client, "/equilibria", {"game": game})
    text = json.dumps(data, indent=2) + "\n"
    if out:
        out_path = _out_dir(None) if os.path.dirname(out) == "" else Path(os.path.dirname(out))
        target = out_path / os.path.basename(out)
        target.write_text(text)
        click.echo(f"report: {target}")
    else:
        click.echo(text, nl=False)


@main.command(name="regret-slope")
@click.argument("traces", nargs=-1, required=True)
@click.option("--targets", required=True, help="Equilibria report JSON with the DM-leads target risk.")
@click.pass_context
def regret_slope(ctx, traces, targets):
    """Fit the log-log slope of cumulative regret against horizon from trace CSVs."""
    from .runner import parse_trace_csv

    targets_doc = json.loads(Path(targets).read_text())
    target_risk = targets_doc["dm_leads"]["risk_L"]
    game = targets_doc.get("game")
    payloads = []
    for trace_path in traces:
        parsed = parse_trace_csv(Path(trace_path).read_text())
        payloads.append(
            {"theta": parsed.theta.tolist(), "loss_L": parsed.loss_L.tolist()}
        )
    with _make_client(ctx.obj["server"]) as client:
        data = _post(
            client,
            "/regret-slope",
            {"traces": payloads, "target_risk_L": target_risk, "game": game},
        )
    for w in data["warnings"]:
        click.echo(f"warning: {w}", err=True)
    for p in data["points"]:
        click.echo(f"horizon {p['horizon']}: regret {p['regret']:.6g} ({p['n_traces']} trace(s))")
    click.echo(f"slope: {data['slope']:.6f}")


@main.command(name="preference-table")
@click.argument("config")
@click.option("--out", default=None, help="CSV output path (default: preference_table.csv).")
@click.pass_context
def preference_table(ctx, config, out):
    """Export both players' risks at both equilibria over a grid of games.

    The config document holds either {"games": [...]} or {"base": {...},
    "vary": {"B": [...], "p": [...]}} whose cross product is expanded.
    """
    document = json.loads(Path(config).read_text())
    games = document.get("games")
    if games is None:
        base = document.get("base")
        vary = document.get("vary", {})
        if base is None:
            raise click.ClickException('config needs "games" or "base"/"vary"')
        games = [dict(base)]
        for key, values in vary.items():
            games = [dict(g, **{key: v}) for g in games for v in values]
    with _make_client(ctx.obj["server"]) as client:
        data = _post(client, "/preference-table", {"games": games})
    out_file = Path(out) if out else _out_dir(None) / "preference_table.csv"
    out_file.parent.mkdir(parents=True, exist_ok=True)
    out_file.write_text(data["csv"])
    failures = [r for r in data["rows"] if r.get("error")]
    for r in failures:
        click.echo(f"warning: oracle failure recorded for row {r}", err=True)
    click.echo(f"table: {out_file} ({len(data['rows'])} row(s))")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8710, show_default=True)
def serve(host, port):
    """Start the benchmark service."""
    import uvicorn

    uvicorn.run("stackbench.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
