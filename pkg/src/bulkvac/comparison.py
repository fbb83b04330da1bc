"""Analytic-versus-simulation agreement checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import Solution
from .simulator import SimulationEstimate

TV_TOL = 0.01
WAIT_RTOL = 0.02
IDLE_RTOL = 0.03
THROUGHPUT_RTOL = 0.03
FLOW_RTOL = 0.02


@dataclass(frozen=True)
class Check:
    name: str
    analytic: float
    simulated: float
    error: float
    tolerance: float
    kind: str  # "tv" or "rel"

    @property
    def passed(self) -> bool:
        return bool(self.error < self.tolerance)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance of two pmfs given as (possibly ragged) arrays."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        shape = tuple(max(x, y) for x, y in zip(p.shape, q.shape))
        pp, qq = np.zeros(shape), np.zeros(shape)
        pp[tuple(slice(0, s) for s in p.shape)] = p
        qq[tuple(slice(0, s) for s in q.shape)] = q
        p, q = pp, qq
    return float(0.5 * np.abs(p - q).sum())


def rel_error(x: float, ref: float) -> float:
    return float(abs(x - ref) / abs(ref)) if ref else float("inf")


def compare(sol: Solution, est: SimulationEstimate) -> list[Check]:
    """Distribution distances and relative errors of the headline measures."""
    rep, dep, arb = sol.report, sol.departure, sol.arbitrary
    checks = [
        Check("tv_psi_queue", 0.0, 0.0, tv_distance(rep.psi_queue, est.psi_queue), TV_TOL, "tv"),
        Check("tv_psi_sys", 0.0, 0.0, tv_distance(rep.psi_sys, est.psi_sys), TV_TOL, "tv"),
    ]
    arb_tv = sum(tv_distance(x, y) for x, y in (
        (arb.theta * (1 - sol.spec.delta), est.theta),
        (arb.alpha, est.alpha), (arb.beta, est.beta), (arb.gamma, est.gamma)))
    dep_tv = sum(tv_distance(x, y) for x, y in (
        (dep.alpha_plus, est.alpha_plus), (dep.beta_plus, est.beta_plus), (dep.gamma_plus, est.gamma_plus)))
    checks.append(Check("tv_arbitrary_joint", 0.0, 0.0, arb_tv, TV_TOL, "tv"))
    checks.append(Check("tv_departure_joint", 0.0, 0.0, dep_tv, TV_TOL, "tv"))
    for name, a, s, tol in (
        ("Wq", rep.Wq, est.mean_wait, WAIT_RTOL),
        ("E_I", rep.expected_idle.total, est.mean_idle, IDLE_RTOL),
        ("esf", rep.esf, float(est.theta.sum() + est.gamma.sum()), IDLE_RTOL),
        ("throughput", rep.throughput, est.departures_per_slot, THROUGHPUT_RTOL),
        ("flow_throughput", rep.flow_throughput, est.departures_per_slot, FLOW_RTOL),
    ):
        checks.append(Check(name, a, s, rel_error(a, s), tol, "rel"))
    return checks
