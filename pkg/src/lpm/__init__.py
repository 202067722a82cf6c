"""Local pivotal method sampling for discrete populations and continuous distributions."""

__version__ = "0.1.0"

from .continuous import (
    Custom,
    DiscretizedPopulation,
    ISSpec,
    Normal,
    Uniform,
    discretize,
    discretize_is,
    standardize,
)
from .estimation import (
    BalanceReport,
    EstimateReport,
    ht_estimate,
    local_mean_variance,
    spatial_balance,
)
from .oracle import OracleResult, enumerate_lpm
from .pivotal import (
    NeighborIndex,
    PivotalSampler,
    SampleResult,
    lpm1,
    lpm2,
    nearest_undecided,
    pivotal_update,
)
from .sampler import LocalPivotalSampler

__all__ = [
    "BalanceReport",
    "Custom",
    "DiscretizedPopulation",
    "EstimateReport",
    "ISSpec",
    "LocalPivotalSampler",
    "NeighborIndex",
    "Normal",
    "OracleResult",
    "PivotalSampler",
    "SampleResult",
    "Uniform",
    "discretize",
    "discretize_is",
    "enumerate_lpm",
    "ht_estimate",
    "local_mean_variance",
    "lpm1",
    "lpm2",
    "nearest_undecided",
    "pivotal_update",
    "spatial_balance",
    "standardize",
]
