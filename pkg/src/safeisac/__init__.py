"""STAR-RIS-aided bistatic ISAC: anti-jamming and target concealment."""
from .channel import (
    MetricReport,
    StarRisState,
    detection_probability,
    effective_channels,
    evaluate_metrics,
    random_phases,
    sum_rate,
)
from .concealment import (
    ConcealmentProblem,
    ConcealmentSolution,
    build_problem,
    dinkelbach_solve,
    gaussian_randomization,
    solve_concealment,
)
from .errors import ConfigError, DimensionError, InfeasibleError
from .harness import SweepResult, SweepSpec, emit_plots, run_method, run_sweep
from .jamming import ManifoldPoint, PenaltyProblem, pr_cg_solve, solve_p2
from .report import SolveReport
from .scenario import ChannelSet, ScenarioConfig, generate_channels, load_config, parse_config
from .sdp import SdpProblem, SdpSolution, solve_sdp

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "ConcealmentProblem",
    "ConcealmentSolution",
    "ConfigError",
    "DimensionError",
    "InfeasibleError",
    "ManifoldPoint",
    "MetricReport",
    "PenaltyProblem",
    "ScenarioConfig",
    "SdpProblem",
    "SdpSolution",
    "SolveReport",
    "StarRisState",
    "SweepResult",
    "SweepSpec",
    "build_problem",
    "detection_probability",
    "dinkelbach_solve",
    "effective_channels",
    "emit_plots",
    "evaluate_metrics",
    "gaussian_randomization",
    "generate_channels",
    "load_config",
    "parse_config",
    "pr_cg_solve",
    "random_phases",
    "run_method",
    "run_sweep",
    "solve_concealment",
    "solve_p2",
    "solve_sdp",
    "sum_rate",
]
