"""Replicated numerical studies: integral, option, rare event and rainforest."""

from .harness import ExperimentConfig, ExperimentReport, ReplicateSummary, replicate, replicate_rng
from .integral import run_integral_experiment, run_integral_sweep
from .option import OptionParams, bs_price, run_option_experiment
from .rainforest import (
    RainforestParams,
    StabilityReport,
    closed_form_p,
    integrate_to_attractor,
    rainforest_rhs,
    run_rainforest_experiment,
    stability,
)
from .rare_event import run_rare_event_experiment, true_mean

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "OptionParams",
    "RainforestParams",
    "ReplicateSummary",
    "StabilityReport",
    "bs_price",
    "closed_form_p",
    "integrate_to_attractor",
    "rainforest_rhs",
    "replicate",
    "replicate_rng",
    "run_integral_experiment",
    "run_integral_sweep",
    "run_option_experiment",
    "run_rainforest_experiment",
    "run_rare_event_experiment",
    "stability",
    "true_mean",
]
