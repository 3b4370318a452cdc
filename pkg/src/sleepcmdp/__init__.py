"""Simulation-based selection of a feasible optimal policy in constrained MDPs.

FTAL (follow the awake leader) and AUER (awake upper estimated reward) pick
policies from a finite set while estimating feasibility from cost samples.
"""

from .model import CmdpModel, ModelError, Policy, RolloutSample, Segment, normalize_model, rollout, step, validate_model
from .oracle import InfeasibleProblem, OracleReport, evaluate
from .selector import AUER, FTAL, RunTrace, insolvability_check, run

__all__ = [
    "AUER", "FTAL", "CmdpModel", "InfeasibleProblem", "ModelError", "OracleReport", "Policy",
    "RolloutSample", "RunTrace", "Segment", "evaluate", "insolvability_check", "normalize_model",
    "rollout", "run", "step", "validate_model",
]
