"""Safe CMA-ES: evolution strategy with Lipschitz-based safe-region
projection, plus a benchmark experiment harness."""

from .cmaes import DistributionState, StrategyParams, decode, sample_raw, should_terminate, tell
from .mathkit import RngStream, chi2_ppf, eig_sym, sqrt_spd
from .runner import ExperimentConfig, run_experiment, run_trial, sweep
from .safety import (
    EvaluatedSolution,
    EvalWindow,
    LipschitzState,
    SafetyConstraint,
    ask_safe,
    estimate_lipschitz,
    init_lipschitz,
    init_mean,
    init_stepsize,
    phi,
    project,
)

__version__ = "0.1.0"
