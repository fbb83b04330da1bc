"""Finite-support discrete distributions on the non-negative integers.

Every duration, group size and arrival count in the queue model is a
:class:`DiscretePmf`.  Infinite-support laws are truncated once their
remaining mass falls below ``tol`` and are *not* renormalized; the discarded
mass is carried in ``tail_defect`` so downstream normalization checks stay
honest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import NonAbsorbingError, ParameterError

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class DiscretePmf:
    """pmf with ``mass[i] = P(X = offset + i)``."""

    offset: int
    mass: np.ndarray = field(repr=False)
    tail_defect: float = 0.0

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float).ravel()
        if mass.size == 0:
            raise ParameterError("pmf needs at least one support point")
        if self.offset < 0:
            raise ParameterError("pmf offset must be non-negative")
        if np.any(mass < 0):
            raise ParameterError("pmf entries must be non-negative")
        nz = np.flatnonzero(mass)
        if nz.size == 0:
            raise ParameterError("pmf has no positive mass")
        # canonical form: first and last entries strictly positive
        object.__setattr__(self, "offset", int(self.offset) + int(nz[0]))
        mass = mass[nz[0] : nz[-1] + 1].copy()
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "tail_defect", float(self.tail_defect))

    @property
    def support_end(self) -> int:
        """Largest support point."""
        return self.offset + self.mass.size - 1

    def total(self) -> float:
        return float(self.mass.sum())

    def pmf(self, n: int) -> float:
        i = n - self.offset
        if 0 <= i < self.mass.size:
            return float(self.mass[i])
        return 0.0

    def dense(self, length: int | None = None) -> np.ndarray:
        """Probabilities for 0, 1, ..., length-1 (default: through support_end)."""
        if length is None:
            length = self.support_end + 1
        out = np.zeros(length)
        hi = min(length, self.support_end + 1)
        if hi > self.offset:
            out[self.offset : hi] = self.mass[: hi - self.offset]
        return out

    def mean(self) -> float:
        return mean(self)

    def pgf(self, z):
        return pgf_eval(self, z)

    def __eq__(self, other):
        if not isinstance(other, DiscretePmf):
            return NotImplemented
        return (
            self.offset == other.offset
            and self.mass.shape == other.mass.shape
            and bool(np.all(self.mass == other.mass))
            and self.tail_defect == other.tail_defect
        )

    def __hash__(self):
        return hash((self.offset, self.mass.tobytes(), self.tail_defect))


@dataclass(frozen=True)
class DPHParams:
    """Discrete phase-type law: absorption time of a chain with ``m`` transient phases."""

    init: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        init = np.asarray(self.init, dtype=float).ravel()
        trans = np.atleast_2d(np.asarray(self.trans, dtype=float))
        m = init.size
        if trans.shape != (m, m):
            raise ParameterError(f"DPH matrix must be {m}x{m}, got {trans.shape}")
        if np.any(init < 0) or np.any(init > 1) or np.any(trans < 0) or np.any(trans > 1):
            raise ParameterError("DPH entries must lie in [0, 1]")
        if np.any(trans.sum(axis=1) > 1 + 1e-12):
            raise ParameterError("DPH matrix rows must sum to at most 1")
        s = init.sum()
        if not 0 < s <= 1 + 1e-12:
            raise ParameterError("DPH initial vector must sum to a value in (0, 1]")
        if np.max(np.abs(np.linalg.eigvals(trans))) >= 1 - 1e-14:
            raise NonAbsorbingError("DPH transition matrix has spectral radius >= 1")
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "trans", trans)

    @property
    def phases(self) -> int:
        return self.init.size

    def closed_form_mean(self) -> float:
        m = self.phases
        return float(self.init @ np.linalg.solve(np.eye(m) - self.trans, np.ones(m)))


def _check_tol(tol: float) -> None:
    if not 0 < tol < 1:
        raise ParameterError("truncation tolerance must lie in (0, 1)")


def point_mass(d: int) -> DiscretePmf:
    if d < 0 or int(d) != d:
        raise ParameterError("point mass location must be a non-negative integer")
    return DiscretePmf(int(d), np.ones(1))


deterministic = point_mass


def explicit(offset: int, mass: Sequence[float], slack: float = 1e-9) -> DiscretePmf:
    """User-supplied pmf; must sum to one within ``slack``."""
    arr = np.asarray(mass, dtype=float)
    total = arr.sum()
    if abs(total - 1.0) > slack:
        raise ParameterError(f"explicit pmf sums to {total:.12g}, not 1")
    return DiscretePmf(int(offset), arr, tail_defect=max(0.0, 1.0 - total))


def build_geometric(q: float, tol: float = DEFAULT_TOL) -> DiscretePmf:
    """Geometric law on {1, 2, ...}: ``P(n) = q (1-q)^(n-1)``."""
    if not 0 < q <= 1:
        raise ParameterError(f"geometric success probability must be in (0, 1], got {q}")
    _check_tol(tol)
    if q == 1:
        return point_mass(1)
    # smallest n with (1-q)^n < tol
    n_end = int(np.floor(np.log(tol) / np.log1p(-q))) + 1
    while (1 - q) ** (n_end - 1) < tol and n_end > 1:
        n_end -= 1
    while (1 - q) ** n_end >= tol:
        n_end += 1
    n = np.arange(1, n_end + 1)
    return DiscretePmf(1, stats.geom.pmf(n, q), tail_defect=(1 - q) ** n_end)


def build_negative_binomial(r: int, q: float, tol: float = DEFAULT_TOL) -> DiscretePmf:
    """Number of trials to the ``r``-th success: ``C(n-1, r-1) q^r (1-q)^(n-r)``, n >= r."""
    if int(r) != r or r < 1:
        raise ParameterError(f"negative binomial needs an integer r >= 1, got {r}")
    if not 0 < q <= 1:
        raise ParameterError(f"negative binomial success probability must be in (0, 1], got {q}")
    _check_tol(tol)
    r = int(r)
    if q == 1:
        return point_mass(r)
    # scipy counts failures k = n - r
    k_end = int(stats.nbinom.isf(tol, r, q))
    while stats.nbinom.sf(k_end, r, q) >= tol:
        k_end += 1
    k = np.arange(0, k_end + 1)
    return DiscretePmf(r, stats.nbinom.pmf(k, r, q), tail_defect=float(stats.nbinom.sf(k_end, r, q)))


def pmf_from_dph(params: DPHParams, tol: float = DEFAULT_TOL, max_len: int = 1_000_000) -> DiscretePmf:
    """pmf of the absorption time, ``P(n) = init T^(n-1) (I - T) 1``."""
    _check_tol(tol)
    trans = params.trans
    exit_vec = 1.0 - trans.sum(axis=1)
    at_zero = 1.0 - params.init.sum()
    if at_zero < 1e-12:
        # initial vector sums to one up to round-off
        at_zero = 0.0
    out = [at_zero]
    v = params.init.copy()
    remaining = v.sum()
    while remaining >= tol:
        out.append(float(v @ exit_vec))
        v = v @ trans
        remaining = v.sum()
        if len(out) > max_len:
            raise NonAbsorbingError("DPH absorption too slow for the requested tolerance")
    return DiscretePmf(0, np.asarray(out), tail_defect=float(remaining))


def convolve(a: DiscretePmf, b: DiscretePmf) -> DiscretePmf:
    """Law of the sum of independent ``a`` and ``b``."""
    return DiscretePmf(
        a.offset + b.offset,
        np.convolve(a.mass, b.mass),
        tail_defect=a.tail_defect + b.tail_defect - a.tail_defect * b.tail_defect,
    )


def mean(p: DiscretePmf) -> float:
    n = np.arange(p.offset, p.support_end + 1)
    return float(n @ p.mass)


def pgf_eval(p: DiscretePmf, z):
    """``sum_n pmf(n) z^n``; accepts scalars or arrays, real or complex."""
    z = np.asarray(z)
    # Horner in ascending order, then shift by the offset
    acc = np.zeros_like(z, dtype=np.result_type(z, float))
    for c in p.mass[::-1]:
        acc = acc * z + c
    out = acc * z**p.offset
    return out[()] if out.ndim == 0 else out
