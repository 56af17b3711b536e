import numpy as np
import pytest

from stackbench.config import parse_config
from stackbench.dynamics import Trace
from stackbench.runner import (
    execute_experiment,
    fit_power_law,
    fit_regret_slope,
    parse_trace_csv,
    preference_rows,
    preference_rows_to_csv,
    trace_to_csv,
    ParsedTrace,
)
from stackbench.games import LinearRegressionGame


def small_linear_config(seed=3, T=60, tau=5):
    return parse_config({
        "name": "tiny-linear",
        "game": {"kind": "linear", "beta": [1.0, 0.0], "sigma2": 0.0, "B": 2.0},
        "runs": [
            {"order": "proactive", "T": T, "tau": tau, "eta0": 0.02, "delta0": 0.3, "fast_eta": 0.1},
            {"order": "reactive", "T": T, "tau": tau, "eta0": 0.1, "delta0": 0.5, "fast_eta": 0.2},
        ],
        "seed": seed,
    })


def synthetic_trace(theta: np.ndarray, loss_L: np.ndarray) -> ParsedTrace:
    n = len(loss_L)
    z = np.zeros(n)
    return ParsedTrace(
        epoch=np.arange(1, n + 1), theta=theta, mu=np.zeros_like(theta),
        loss_L=loss_L, loss_R=z, running_avg_L=z, running_avg_R=z,
        br_gap=np.full(n, np.nan),
    )


class TestTraceCsv:
    def test_round_trip_bit_exact(self):
        cfg = small_linear_config()
        result = execute_experiment(cfg)
        art = result.artifacts[0]
        parsed = parse_trace_csv(art.csv_text)
        assert np.array_equal(parsed.theta, art.trace.theta)
        assert np.array_equal(parsed.mu, art.trace.mu)
        assert np.array_equal(parsed.loss_L, art.trace.loss_L)
        assert np.array_equal(parsed.running_avg_L, art.trace.running_avg_L)

    def test_row_count_equals_horizon(self):
        cfg = small_linear_config(T=37)
        result = execute_experiment(cfg)
        for art in result.artifacts:
            body = [ln for ln in art.csv_text.splitlines()[1:] if ln and not ln.startswith("#")]
            assert len(body) == 37

    def test_abort_marker_round_trip(self):
        tr = Trace(order="proactive", theta=np.zeros((2, 1)), mu=np.zeros((2, 1)),
                   loss_L=np.zeros(2), loss_R=np.zeros(2), running_avg_L=np.zeros(2),
                   running_avg_R=np.zeros(2), br_gap=np.full(2, np.nan))
        text = trace_to_csv(tr, aborted_at=3)
        parsed = parse_trace_csv(text)
        assert parsed.aborted_at == 3


class TestExecuteExperiment:
    def test_deterministic_output_bytes(self):
        r1 = execute_experiment(small_linear_config())
        r2 = execute_experiment(small_linear_config())
        for a1, a2 in zip(r1.artifacts, r2.artifacts):
            assert a1.csv_text == a2.csv_text

    def test_results_document_structure(self):
        result = execute_experiment(small_linear_config())
        doc = result.document
        assert doc["ok"] is True
        assert doc["equilibria"]["dm_leads"]["risk_L"] == pytest.approx(0.4)
        assert doc["equilibria"]["agents_lead"]["risk_R"] == pytest.approx(-0.5)
        assert len(doc["runs"]) == 2
        for run_block in doc["runs"]:
            assert run_block["epochs"] == 60
            assert run_block["aborted_at"] is None
            assert run_block["trace_file"].endswith(".trace.csv")
        assert doc["runs"][0]["stackelberg_regret_L"] is not None

    def test_seed_changes_trace(self):
        r1 = execute_experiment(small_linear_config(seed=1))
        r2 = execute_experiment(small_linear_config(seed=2))
        assert r1.artifacts[0].csv_text != r2.artifacts[0].csv_text

    def test_scale_divides_horizon(self):
        cfg = parse_config({"preset": "linear-B2", "scale": 100})
        result = execute_experiment(cfg)
        assert result.document["runs"][0]["epochs"] == 50

    def test_abort_flushes_partial_trace(self):
        cfg = parse_config({
            "name": "diverging",
            "game": {"kind": "linear", "beta": [1.0, 0.0], "B": 2.0, "theta_radius": 1e308},
            "runs": [{"order": "proactive", "T": 100, "tau": 2, "eta0": 1.0, "delta0": 1e-3,
                      "exponent_eta": 0.0, "exponent_delta": 0.0, "fast_eta": 0.1}],
            "seed": 0,
            "compute_equilibria": False,
        })
        result = execute_experiment(cfg)
        assert not result.ok
        assert result.document["runs"][0]["aborted_at"] is not None
        assert "# aborted epoch=" in result.artifacts[0].csv_text


class TestFitRegretSlope:
    def test_exact_power_law_three_quarters(self):
        horizons = [1000, 2000, 4000, 8000]
        assert fit_power_law(horizons, [3.0 * T**0.75 for T in horizons]) == pytest.approx(0.75, abs=1e-9)

    def test_exact_linear_growth(self):
        horizons = [1000, 2000, 4000]
        assert fit_power_law(horizons, [0.5 * T for T in horizons]) == pytest.approx(1.0, abs=1e-9)

    def test_nonpositive_points_excluded_with_warning(self):
        game = LinearRegressionGame(beta=(1.0, 0.0), sigma2=0.0, B=2.0)
        # target above the equilibrium path risk: strictly negative total regret
        theta_eq = np.tile([0.2, 0.0], (100, 1))
        t1 = synthetic_trace(theta_eq, np.zeros(100))
        theta_off = np.tile([0.0, 0.0], (200, 1))  # path risk 0.5 > target
        t2 = synthetic_trace(theta_off, np.zeros(200))
        theta_off3 = np.tile([0.0, 0.0], (400, 1))
        t3 = synthetic_trace(theta_off3, np.zeros(400))
        slope, points, warns = fit_regret_slope([t1, t2, t3], target_risk_L=0.45, game=game)
        assert any("excluded" in w for w in warns)
        assert [p["horizon"] for p in points] == [200, 400]
        assert slope == pytest.approx(1.0, abs=1e-9)  # constant per-epoch gap grows linearly

    def test_seed_averaging_within_horizon(self):
        game = LinearRegressionGame(beta=(1.0, 0.0), sigma2=0.0, B=2.0)
        tr_a = synthetic_trace(np.tile([0.0, 0.0], (100, 1)), np.zeros(100))
        tr_b = synthetic_trace(np.tile([0.4, 0.0], (100, 1)), np.zeros(100))
        tr_c = synthetic_trace(np.tile([0.0, 0.0], (300, 1)), np.zeros(300))
        slope, points, _ = fit_regret_slope([tr_a, tr_b, tr_c], target_risk_L=0.4, game=game)
        assert points[0]["n_traces"] == 2


class TestPreferenceRows:
    def test_linear_sweep_deltas(self):
        base = {"kind": "linear", "beta": [1.0, 0.0], "sigma2": 0.0}
        games = [parse_config({
            "game": {**base, "B": B},
            "runs": [{"order": "proactive", "T": 1, "tau": 1, "eta0": 0.1, "fast_eta": 0.1}],
        }).game for B in (0.5, 1.0, 2.0)]
        rows = preference_rows(games)
        assert [round(r["delta_L"], 10) for r in rows] == [0.0, 0.0, 0.15]
        assert [round(r["delta_R"], 10) for r in rows] == [0.0, 0.0, 0.1]
        csv_text = preference_rows_to_csv(rows)
        assert csv_text.splitlines()[0].startswith("kind,variant,p,B,lam")
        assert len(csv_text.splitlines()) == 4

    def test_oracle_failure_recorded_row_continues(self):
        bad = parse_config({
            "game": {"kind": "linear", "beta": [0.0, 0.0], "B": 1.0},  # degenerate
            "runs": [{"order": "proactive", "T": 1, "tau": 1, "eta0": 0.1, "fast_eta": 0.1}],
        }).game
        good = parse_config({
            "game": {"kind": "linear", "beta": [1.0, 0.0], "B": 1.0},
            "runs": [{"order": "proactive", "T": 1, "tau": 1, "eta0": 0.1, "fast_eta": 0.1}],
        }).game
        rows = preference_rows([bad, good])
        assert rows[0]["error"] != ""
        assert rows[1]["error"] == "" and rows[1]["delta_L"] == pytest.approx(0.0)

    def test_empty_grid_header_only(self):
        assert preference_rows_to_csv(preference_rows([])).count("\n") == 1
