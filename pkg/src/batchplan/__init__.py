"""Anytime sampling-based path planning over batches of informed samples.

The central planner searches an edge-implicit random geometric graph in order
of potential solution quality; RRT-family baselines and a benchmark harness
round out the package.
"""

from .geometry import AxisBox, ProblemDef, c_hat, c_true, f_hat, g_hat, h_hat, is_state_valid, path_cost
from .sampling import InformedSampler, ProlateHyperspheroid, make_rng, phs_measure, unit_ball_measure
from .rgg import RggParams, SpatialIndex, k_bound, radius_bound
from .bitstar import BitStar, BitstarConfig, PlanResult, StepOutcome
from .baselines import (
    PLANNERS,
    BaselineConfig,
    InformedRRTStar,
    RRT,
    RRTConnect,
    RRTStar,
    SORRTStar,
    make_planner,
    steer,
)
from .bench import (
    AggregateSeries,
    Scenario,
    TrialRecord,
    aggregate,
    gen_dual_enclosure,
    gen_homotopy_grid,
    gen_random_world,
    generate_scenario,
    median_ci_indices,
    run_bench,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "AxisBox", "ProblemDef", "c_hat", "c_true", "f_hat", "g_hat", "h_hat",
    "is_state_valid", "path_cost",
    "InformedSampler", "ProlateHyperspheroid", "make_rng", "phs_measure", "unit_ball_measure",
    "RggParams", "SpatialIndex", "k_bound", "radius_bound",
    "BitStar", "BitstarConfig", "PlanResult", "StepOutcome",
    "PLANNERS", "BaselineConfig", "RRT", "RRTConnect", "RRTStar", "InformedRRTStar",
    "SORRTStar", "make_planner", "steer",
    "AggregateSeries", "Scenario", "TrialRecord", "aggregate", "gen_dual_enclosure",
    "gen_homotopy_grid", "gen_random_world", "generate_scenario", "median_ci_indices",
    "run_bench", "run_trial",
]
