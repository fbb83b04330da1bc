"""Generating-function building blocks.

All series in the queue variable are finite polynomials stored as ascending
coefficient arrays, because every input pmf has finite support.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from .dists import DiscretePmf
from .errors import NumericalError, ParameterError
from .model import ModelSpec, chi_matrix


class SeriesKind(enum.Enum):
    FES = "fes"
    SOS = "sos"
    VACATION = "vacation"


@dataclass(frozen=True)
class ArrivalCountSeries:
    """``coeffs[i]``: probability of ``i`` customer arrivals during one tagged duration."""

    coeffs: np.ndarray = field(repr=False)
    kind: SeriesKind
    index: int
    tail_defect: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.size

    def at(self, i: int) -> float:
        return float(self.coeffs[i]) if 0 <= i < self.coeffs.size else 0.0

    def mean(self) -> float:
        return float(np.arange(self.coeffs.size) @ self.coeffs)


def trim(poly: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Drop trailing coefficients with magnitude <= tol (keeps at least one)."""
    poly = np.asarray(poly)
    nz = np.flatnonzero(np.abs(poly) > tol)
    if nz.size == 0:
        return poly[:1] * 0
    return poly[: nz[-1] + 1]


def slot_arrival_pmf(lam: float, g: DiscretePmf) -> DiscretePmf:
    """Customers arriving in one slot: none w.p. ``1-lam``, else a group from ``g``."""
    mass = lam * g.dense()
    mass[0] = 1.0 - lam
    return DiscretePmf(0, mass, tail_defect=lam * g.tail_defect)


@lru_cache(maxsize=512)
def _arrivals_cached(dur_key: bytes, dur_offset: int, lam: float, g_key: bytes, g_offset: int) -> np.ndarray:
    dur = np.frombuffer(dur_key)
    g = DiscretePmf(g_offset, np.frombuffer(g_key))
    a = slot_arrival_pmf(lam, g).dense()
    # Horner over slot counts: sum_l S(l) A^l with A the one-slot pgf
    weights = np.concatenate([np.zeros(dur_offset), dur])
    acc = np.array([weights[-1]])
    for w in weights[-2::-1]:
        acc = np.convolve(acc, a)
        acc[0] += w
    acc.setflags(write=False)
    return acc


def arrivals_during(duration: DiscretePmf, lam: float, g: DiscretePmf,
                    kind: SeriesKind = SeriesKind.FES, index: int = 0) -> ArrivalCountSeries:
    """Number of customers arriving during a random number of slots.

    The coefficients are those of ``S*(1 - lam + lam G(z))``; results are
    cached on the (duration, lam, g) triple.
    """
    coeffs = _arrivals_cached(duration.mass.tobytes(), duration.offset, float(lam), g.mass.tobytes(), g.offset)
    return ArrivalCountSeries(coeffs, kind, index, duration.tail_defect)


@dataclass(frozen=True)
class SeriesBundle:
    """All arrival-count series of a model: K (FES), T (SOS), H (vacation)."""

    K: dict
    T: dict
    H: dict


def model_series(spec: ModelSpec) -> SeriesBundle:
    K = {r: arrivals_during(spec.fes[r], spec.lam, spec.g, SeriesKind.FES, r) for r in range(spec.a, spec.b + 1)}
    T = {y: arrivals_during(spec.sos[y], spec.lam, spec.g, SeriesKind.SOS, y) for y in range(1, spec.b + 1)}
    H = {k: arrivals_during(spec.vacation[k], spec.lam, spec.g, SeriesKind.VACATION, k) for k in range(spec.a)}
    return SeriesBundle(K, T, H)


def e_table(g: DiscretePmf, n_max: int) -> np.ndarray:
    """``e[n, i]``: probability that a group-arrival walk started at ``i`` ever sits at ``n``.

    Filled by the backward recursion ``e[n,i] = sum_{j=i+1}^{n-1} e[n,j] g_{j-i} + g_{n-i}``
    with ``e[n,n] = 1``; entries above the diagonal are zero.
    """
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    gd = g.dense(n_max + 2)
    e = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        e[n, n] = 1.0
        for i in range(n - 1, -1, -1):
            e[n, i] = e[n, i + 1 : n] @ gd[1 : n - i] + gd[n - i]
    return e


@dataclass(frozen=True)
class Eq45Coefficients:
    """Reduction weights for vacation-completion masses.

    Attributes:
        zeta: ``zeta[n, j]`` weight of the decision mass at level ``j`` in the
            vacation-completion mass at level ``j+n < a``.
        pi_weights: ``pi_weights[n, i]`` weight of the decision mass at level
            ``i < a`` in the vacation-completion mass at level ``n`` (rows
            ``a..b-1`` are filled; others zero).
    """

    zeta: np.ndarray = field(repr=False)
    pi_weights: np.ndarray = field(repr=False)


def eq45_coefficients(spec: ModelSpec, H: dict) -> Eq45Coefficients:
    """Weights expressing vacation completions through decision masses."""
    a, b, delta = spec.a, spec.b, spec.delta
    h = lambda k, i: H[k].at(i)
    zeta = np.zeros((a, a))
    for j in range(a):
        for n in range(a - j):
            denom = 1.0 - delta * h(n + j, 0)
            if denom <= 1e-14:
                raise NumericalError(
                    f"type-{n + j} vacations never admit an arrival; repeated vacations diverge"
                )
            acc = h(j, n)
            if delta:
                acc += sum(h(n + j - i, i) * zeta[n - i, j] for i in range(1, n + 1))
            zeta[n, j] = acc / denom
    pi_w = np.zeros((max(b, 1), a))
    for n in range(a, b):
        for i in range(a):
            w = h(i, n - i)
            if delta:
                w += sum(zeta[m, i] * h(i + m, n - i - m) for m in range(a - i))
            pi_w[n, i] = w
    return Eq45Coefficients(zeta, pi_w)


def f_series(i: int, spec: ModelSpec, T: dict, z2_weights=None) -> np.ndarray:
    """Polynomial ``sum_y chi_{a+i-1,y} w_y T^y(z)`` for ``1 <= i <= b-a+1``."""
    if not 1 <= i <= spec.b - spec.a + 1:
        raise ParameterError(f"F-series index {i} outside 1..{spec.b - spec.a + 1}")
    r = spec.a + i - 1
    ch = chi_matrix(spec)
    out = np.zeros(1)
    for y in range(1, r + 1):
        w = 1.0 if z2_weights is None else z2_weights[y]
        if ch[r, y] * w != 0:
            out = P.polyadd(out, ch[r, y] * w * T[y].coeffs)
    return out
