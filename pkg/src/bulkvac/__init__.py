"""Discrete-time batch-arrival (a,b) bulk-service queue with an optional
second service and queue-length-dependent single or multiple vacations."""

from .arbitrary import to_arbitrary
from .comparison import compare
from .config import RunConfig, load_config, parse_config
from .dists import (
    DiscretePmf,
    DPHParams,
    build_geometric,
    build_negative_binomial,
    convolve,
    deterministic,
    explicit,
    pgf_eval,
    pmf_from_dph,
    point_mass,
)
from .errors import (
    BulkVacError,
    ConditioningError,
    ConfigError,
    InstabilityError,
    NearDegenerateError,
    NegativeProbabilityError,
    NonAbsorbingError,
    NumericalError,
    ParameterError,
    RootCountError,
    TruncationError,
)
from .measures import PerformanceReport, performance_report
from .model import ModelSpec, Policy, chi, chi_matrix, reference_example, rho, validate
from .oracle import truncated_chain_oracle
from .pipeline import Engine, Solution, solve
from .results import ArbitraryDistribution, DepartureDistribution, NormalizationConstants
from .simulator import SimConfig, SimulationEstimate, simulate
from .solver import characteristic, extract_departure, find_roots, solve_boundary, solve_departure, tau_lambda

__version__ = "0.1.0"
