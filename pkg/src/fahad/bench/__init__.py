"""Experiment orchestration: configs, Monte-Carlo sweeps, metrics, runtimes and canned figures."""

from .config import ExperimentConfig, from_dict, load_config
from .metrics import match, nse, paired_errors, rmse
from .montecarlo import RunSummary, TrialRecord, run_monte_carlo, run_trial
from .runtime import RuntimeReport, runtime_bench

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "RuntimeReport",
    "TrialRecord",
    "from_dict",
    "load_config",
    "match",
    "nse",
    "paired_errors",
    "rmse",
    "run_monte_carlo",
    "run_trial",
    "runtime_bench",
]
