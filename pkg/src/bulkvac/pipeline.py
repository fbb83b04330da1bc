"""End-to-end solve: departure epochs, arbitrary slots and performance indices."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .arbitrary import to_arbitrary
from .errors import TruncationError
from .measures import PerformanceReport, performance_report
from .model import ModelSpec, validate
from .oracle import truncated_chain_oracle
from .results import ArbitraryDistribution, DepartureDistribution, NormalizationConstants
from .solver import solve_departure, tau_lambda

log = logging.getLogger(__name__)


class Engine(enum.Enum):
    ANALYTIC = "analytic"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class Solution:
    spec: ModelSpec
    departure: DepartureDistribution
    arbitrary: ArbitraryDistribution
    constants: NormalizationConstants
    report: PerformanceReport


def _truncated(spec: ModelSpec, n_cap: int | None, max_cap: int = 5000):
    n = n_cap or max(60, 8 * spec.b)
    while True:
        try:
            return truncated_chain_oracle(spec, n)
        except TruncationError as exc:
            if n_cap is not None or n >= max_cap:
                raise
            log.info("truncated chain: %s; retrying with N=%d", exc, exc.suggested)
            n = min(max_cap, max(exc.suggested, 2 * n))


def solve(spec: ModelSpec, engine: Engine | str = Engine.ANALYTIC, n_max: int | None = None) -> Solution:
    """Solve ``spec`` with the chosen engine.

    Args:
        spec: Model to solve.
        engine: ``analytic`` (root finding and series extraction) or
            ``truncated`` (sparse stationary solve of the slot chain).
        n_max: Row cap; for the truncated engine a fixed cap disables the
            automatic enlargement.
    """
    engine = Engine(engine)
    validate(spec)
    if engine is Engine.ANALYTIC:
        dep = solve_departure(spec, n_max=n_max)
        nc = tau_lambda(spec, dep)
        arb = to_arbitrary(spec, dep, nc)
    else:
        dep, arb = _truncated(spec, n_max)
        nc = tau_lambda(spec, dep)
    return Solution(spec, dep, arb, nc, performance_report(spec, dep, arb))
