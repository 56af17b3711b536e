"""Two-timescale Stackelberg learning dynamics: games, update rules, equilibrium
oracles, and a benchmark service."""

__version__ = "0.1.0"

from .games import (
    BallSet,
    LinearRegressionGame,
    LogisticGame,
    PopulationSpec,
    generate_population,
)
from .optimize import StepSchedule, ZeroOrderState
from .dynamics import Schedule, Trace, run, run_proactive, run_reactive
from .equilibria import (
    EquilibriumReport,
    PreferenceTable,
    compute_equilibria,
    linear_equilibria,
    preference_table,
)

__all__ = [
    "__version__",
    "BallSet",
    "LinearRegressionGame",
    "LogisticGame",
    "PopulationSpec",
    "generate_population",
    "StepSchedule",
    "ZeroOrderState",
    "Schedule",
    "Trace",
    "run",
    "run_proactive",
    "run_reactive",
    "EquilibriumReport",
    "PreferenceTable",
    "compute_equilibria",
    "linear_equilibria",
    "preference_table",
]
