"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from bulkvac import Policy, SimConfig, dists, reference_example, simulate, solve, truncated_chain_oracle
from bulkvac.config import example_path, load_config
from bulkvac.model import ModelSpec

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> bool:
    """Store one PASS/FAIL line for the terminal summary and echo it."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def toy_spec(policy: Policy = Policy.SINGLE) -> ModelSpec:
    return load_config(example_path("toy.json")).spec.with_policy(policy)


def basic_spec(q_service: float = 0.6, lam: float = 0.3) -> ModelSpec:
    """a=b=1, no second service, one-slot vacations, geometric service."""
    geo = dists.build_geometric(q_service, tol=1e-16)
    return ModelSpec(
        a=1, b=1, lam=lam, g=dists.point_mass(1), p_sos=0.0,
        fes={1: geo}, sos={1: dists.build_geometric(0.5)},
        vacation={0: dists.point_mass(1)}, policy=Policy.SINGLE,
    )


@pytest.fixture(scope="session", params=list(Policy), ids=lambda p: p.value)
def ref_solution(request):
    return solve(reference_example(request.param))


@pytest.fixture(scope="session")
def ref_single():
    return solve(reference_example(Policy.SINGLE))


@pytest.fixture(scope="session")
def ref_multiple():
    return solve(reference_example(Policy.MULTIPLE))


@pytest.fixture(scope="session", params=list(Policy), ids=lambda p: p.value)
def toy_pair(request):
    """Analytic solution and truncated-chain oracle for the toy model."""
    spec = toy_spec(request.param)
    return solve(spec), truncated_chain_oracle(spec, 80)


def common_rows(x: np.ndarray, y: np.ndarray):
    n = min(x.shape[0], y.shape[0])
    return x[:n], y[:n]


REF_SIM_SEED = 20240601


@functools.lru_cache(maxsize=None)
def ref_simulation(policy: Policy):
    """10^7 simulated slots after a 10^5 warmup, shared across modules."""
    cfg = SimConfig(slots=10_000_000, warmup=100_000, seed=REF_SIM_SEED)
    return simulate(reference_example(policy), cfg)
