"""Laboratory for prediction-augmented online travelling salesman on the real line."""

from .adversaries import AttackOutcome, family_lower_bound, make_attack, run_attack
from .algorithms import ALGORITHMS, get_algorithm, ratio_guarantee
from .core import (
    TOL,
    IncompleteTrajectoryError,
    Instance,
    ModelMismatchError,
    PredictionSet,
    Request,
    SimResult,
    Trajectory,
    ValidationError,
    Variant,
    evaluate,
    extremes,
    instance_from_json,
    instance_to_json,
    normalize_instance,
)
from .engine import (
    DivergenceError,
    ProtocolError,
    check_invariants,
    competitive_ratio,
    simulate,
    simulate_instance,
)
from .experiments import GenParams, SweepRow, SweepTable, gen_instance, sweep
from .oracle import OracleResult, opt_bruteforce, opt_dp, prune_requests
from .predictions import apply_mould, delta_error, eta_error, gen_mould, side_bound_slack

__all__ = [
    "TOL",
    "ALGORITHMS",
    "AttackOutcome",
    "DivergenceError",
    "GenParams",
    "IncompleteTrajectoryError",
    "Instance",
    "ModelMismatchError",
    "OracleResult",
    "PredictionSet",
    "ProtocolError",
    "Request",
    "SimResult",
    "SweepRow",
    "SweepTable",
    "Trajectory",
    "ValidationError",
    "Variant",
    "apply_mould",
    "check_invariants",
    "competitive_ratio",
    "delta_error",
    "eta_error",
    "evaluate",
    "extremes",
    "family_lower_bound",
    "gen_instance",
    "gen_mould",
    "get_algorithm",
    "instance_from_json",
    "instance_to_json",
    "make_attack",
    "normalize_instance",
    "opt_bruteforce",
    "opt_dp",
    "prune_requests",
    "ratio_guarantee",
    "run_attack",
    "side_bound_slack",
    "simulate",
    "simulate_instance",
    "sweep",
]

__version__ = "0.1.0"
