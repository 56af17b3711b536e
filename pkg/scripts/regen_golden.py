#!/usr/bin/env python3
"""Regenerate the golden equilibrium values committed under tests/golden/.

The oracle is deliberately independent of the library's gradient-descent path:
a dense brute-force scan of the decision-maker's Stackelberg risk over theta,
refined twice around the incumbent.  Values are written with the generating
parameters so the file is reproducible.
"""

import json
from pathlib import Path

import numpy as np

from stackbench.games import LogisticGame, PopulationSpec

GOLDEN_PATH = Path(__file__).resolve().parent.parent / "tests" / "golden" / "logistic_dm_eq.json"

PARAMS = {"p": 0.5, "alpha": [2.0], "n": 100, "data_seed": 42, "B": 2.0}


def brute_force_theta_se(game, lo=-10.0, hi=10.0, points=40_001, refinements=2):
    for _ in range(refinements + 1):
        grid = np.linspace(lo, hi, points)
        values = game.sr_L_batch(grid.reshape(-1, 1))
        k = int(np.argmin(values))
        spacing = grid[1] - grid[0]
        lo, hi = grid[k] - 2 * spacing, grid[k] + 2 * spacing
    return float(grid[k]), float(values[k])


def main():
    spec = PopulationSpec(p=PARAMS["p"], alpha=tuple(PARAMS["alpha"]), n=PARAMS["n"], seed=PARAMS["data_seed"])
    game = LogisticGame.from_population(spec, "constrained", B=PARAMS["B"])
    theta_se, risk_L = brute_force_theta_se(game)
    mu = game.mu_br(np.array([theta_se]))
    risk_R = game.loss_R(mu, np.array([theta_se]))
    doc = {
        "generator": "brute-force grid scan of SR_L, 40001 points on [-10, 10], 2 refinements",
        "params": PARAMS,
        "theta_se": [theta_se],
        "risk_L": risk_L,
        "risk_R": float(risk_R),
    }
    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_PATH.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {GOLDEN_PATH}")
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
