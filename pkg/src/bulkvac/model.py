"""Model parameterization, SOS thinning and the stability gate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import dists
from .dists import DiscretePmf, DPHParams
from .errors import InstabilityError, ParameterError


class Policy(enum.Enum):
    """Vacation policy; ``delta`` is 0 for single and 1 for multiple vacations."""

    SINGLE = "single"
    MULTIPLE = "multiple"

    @property
    def delta(self) -> int:
        return 0 if self is Policy.SINGLE else 1


@dataclass(frozen=True)
class ModelSpec:
    """Complete parameterization of the batch-arrival (a,b) queue.

    Attributes:
        a: Minimum batch size needed to start the first essential service.
        b: Maximum batch size taken into one service.
        lam: Probability that a group arrives in a slot.
        g: Group-size pmf on {1, ..., G_max}.
        p_sos: Probability that a served customer opts into the second service.
        fes: First-service duration pmf for every batch size a..b.
        sos: Second-service duration pmf for every joiner count 1..b.
        vacation: Vacation duration pmf for every type 0..a-1.
        policy: Single or multiple vacations.
    """

    a: int
    b: int
    lam: float
    g: DiscretePmf
    p_sos: float
    fes: Mapping[int, DiscretePmf] = field(repr=False)
    sos: Mapping[int, DiscretePmf] = field(repr=False)
    vacation: Mapping[int, DiscretePmf] = field(repr=False)
    policy: Policy = Policy.SINGLE

    @property
    def delta(self) -> int:
        return self.policy.delta

    @property
    def g_mean(self) -> float:
        return self.g.mean()

    @property
    def arrival_rate(self) -> float:
        """Mean customers per slot, ``lambda * gbar``."""
        return self.lam * self.g_mean

    def with_policy(self, policy: Policy) -> "ModelSpec":
        return replace(self, policy=policy)


def _binom_row(r: int, p: float) -> np.ndarray:
    """Binomial(r, p) pmf, evaluated on the side ``p <= 1/2``.

    For ``p > 1/2`` the row is the reversal of the row for ``1 - p``
    (computed exactly), so ``chi(r, y, p) == chi(r, r - y, 1 - p)`` holds
    bit for bit whenever ``1 - (1 - p) == p``.
    """
    if p > 0.5:
        return _binom_row(r, 1.0 - p)[::-1].copy()
    y = np.arange(r + 1)
    coef = np.array([math.comb(r, k) for k in y], dtype=float)
    return coef * np.power(p, y) * np.power(1.0 - p, r - y)


def chi(r: int, y: int, p: float) -> float:
    """Probability that ``y`` of ``r`` served customers join the second service."""
    if y < 0 or y > r:
        raise IndexError(f"joiner count {y} outside 0..{r}")
    return float(_binom_row(r, p)[y])


def chi_matrix(spec: ModelSpec) -> np.ndarray:
    """``out[r, y] = chi(r, y)`` for r in 0..b (rows below a are unused)."""
    b = spec.b
    out = np.zeros((b + 1, b + 1))
    for r in range(b + 1):
        out[r, : r + 1] = _binom_row(r, spec.p_sos)
    return out


def rho(spec: ModelSpec) -> float:
    """Traffic intensity: offered work per slot over the batch capacity ``b``."""
    b = spec.b
    ch = chi_matrix(spec)
    work = spec.fes[b].mean() + sum(ch[b, y] * spec.sos[y].mean() for y in range(1, b + 1))
    return spec.lam * spec.g_mean * work / b


def validate(spec: ModelSpec, check_stability: bool = True) -> None:
    """Raise unless every structural invariant (and optionally ``rho < 1``) holds."""
    if int(spec.a) != spec.a or spec.a < 1:
        raise ParameterError("a must be an integer >= 1")
    if int(spec.b) != spec.b:
        raise ParameterError("b must be an integer")
    if spec.a > spec.b:
        raise ParameterError("a exceeds b")
    if not 0 < spec.lam < 1:
        raise ParameterError("lambda must be in (0,1)")
    if not 0 <= spec.p_sos <= 1:
        raise ParameterError("p_sos must be in [0,1]")
    if spec.g.offset < 1:
        raise ParameterError("group-size pmf must have offset >= 1")
    if not isinstance(spec.policy, Policy):
        raise ParameterError("policy must be a Policy")
    for name, table, lo, hi in (
        ("fes", spec.fes, spec.a, spec.b),
        ("sos", spec.sos, 1, spec.b),
        ("vacation", spec.vacation, 0, spec.a - 1),
    ):
        for key in range(lo, hi + 1):
            pmf = table.get(key)
            if pmf is None:
                raise ParameterError(f"missing {name} pmf for index {key}")
            if not isinstance(pmf, DiscretePmf):
                raise ParameterError(f"{name}[{key}] is not a DiscretePmf")
            if pmf.offset < 1:
                raise ParameterError(f"{name}[{key}] has support at 0; durations take at least one slot")
    if check_stability:
        r = rho(spec)
        if r >= 1:
            raise InstabilityError(r)


# Phase-type parameters of the published numerical example, keyed by batch size.
EXAMPLE_FES_DPH = {
    3: ([0.3, 0.3, 0.4], [[0.4, 0.2, 0.2], [0.3, 0.3, 0.1], [0.2, 0.3, 0.4]]),
    4: ([0.4, 0.2, 0.4], [[0.3, 0.4, 0.2], [0.3, 0.2, 0.3], [0.2, 0.3, 0.2]]),
    5: ([0.5, 0.1, 0.4], [[0.5, 0.1, 0.3], [0.3, 0.4, 0.1], [0.1, 0.2, 0.5]]),
    6: ([0.2, 0.5, 0.3], [[0.2, 0.4, 0.1], [0.1, 0.6, 0.2], [0.1, 0.2, 0.5]]),
    7: ([0.25, 0.35, 0.4], [[0.4, 0.3, 0.2], [0.2, 0.4, 0.2], [0.2, 0.4, 0.3]]),
    8: ([0.4, 0.3, 0.3], [[0.3, 0.2, 0.4], [0.3, 0.4, 0.2], [0.3, 0.5, 0.1]]),
}

# Listed mean FES durations of the example.
EXAMPLE_FES_MEANS = {3: 4.912162, 4: 5.083721, 5: 5.988636, 6: 6.138298, 7: 7.245454, 8: 10.0}

# Initial vectors that reproduce EXAMPLE_FES_MEANS with the listed matrices;
# the listed vectors for r=3,4,5,7 do not.
EXAMPLE_FES_INIT_RECONCILED = {
    3: [0.4, 0.3, 0.3],
    4: [0.3, 0.4, 0.3],
    5: [0.25, 0.35, 0.4],
    6: [0.2, 0.5, 0.3],
    7: [0.5, 0.1, 0.4],
    8: [0.4, 0.3, 0.3],
}

EXAMPLE_SOS_DPH = {
    1: ([0.3, 0.3, 0.4], [[0.1, 0.1, 0.2], [0.1, 0.2, 0.1], [0.2, 0.1, 0.1]]),
    2: ([0.4, 0.5, 0.1], [[0.2, 0.2, 0.2], [0.2, 0.1, 0.1], [0.1, 0.2, 0.1]]),
    3: ([0.3, 0.4, 0.3], [[0.1, 0.2, 0.3], [0.2, 0.2, 0.1], [0.2, 0.2, 0.1]]),
    4: ([0.2, 0.5, 0.3], [[0.3, 0.2, 0.2], [0.2, 0.3, 0.1], [0.1, 0.2, 0.2]]),
    5: ([0.4, 0.4, 0.2], [[0.1, 0.2, 0.2], [0.3, 0.3, 0.2], [0.2, 0.2, 0.1]]),
    6: ([0.4, 0.1, 0.5], [[0.1, 0.3, 0.3], [0.1, 0.4, 0.2], [0.1, 0.2, 0.3]]),
    7: ([0.3, 0.6, 0.1], [[0.3, 0.4, 0.2], [0.2, 0.2, 0.2], [0.2, 0.1, 0.3]]),
    8: ([0.4, 0.2, 0.4], [[0.1, 0.2, 0.3], [0.4, 0.3, 0.1], [0.2, 0.2, 0.5]]),
}


def reference_example(policy: Policy = Policy.SINGLE, tol: float = dists.DEFAULT_TOL, reconciled: bool = True) -> ModelSpec:
    """The a=3, b=8 phase-type example with NB(2, 0.7) vacations and unit groups.

    Args:
        policy: vacation policy.
        tol: truncation tolerance for the phase-type pmfs.
        reconciled: use ``EXAMPLE_FES_INIT_RECONCILED`` (matching the listed
            means) instead of the listed FES initial vectors.
    """
    fes = {}
    for r, (i, t) in EXAMPLE_FES_DPH.items():
        init = EXAMPLE_FES_INIT_RECONCILED[r] if reconciled else i
        fes[r] = dists.pmf_from_dph(DPHParams(np.array(init), np.array(t)), tol)
    sos = {y: dists.pmf_from_dph(DPHParams(np.array(i), np.array(t)), tol) for y, (i, t) in EXAMPLE_SOS_DPH.items()}
    vac = dists.build_negative_binomial(2, 0.7, tol)
    return ModelSpec(
        a=3,
        b=8,
        lam=0.5,
        g=dists.point_mass(1),
        p_sos=0.5,
        fes=fes,
        sos=sos,
        vacation={k: vac for k in range(3)},
        policy=policy,
    )
