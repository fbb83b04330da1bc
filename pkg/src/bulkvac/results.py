"""Containers for joint distributions shared by both engines.

Arrays are indexed by queue length ``n`` along axis 0.  Batch-size columns
use the natural index (column ``r`` holds batch size ``r``), so unused
columns below ``a`` (FES) or at 0 (SOS) are identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DepartureDistribution:
    """Joint probabilities just after FES, SOS and vacation completions.

    Attributes:
        alpha_plus: ``[n, r]`` FES of batch ``r`` just ended with ``n`` waiting.
        beta_plus: ``[n, y]`` SOS of ``y`` customers just ended with ``n`` waiting.
        gamma_plus: ``[n, k]`` type-``k`` vacation just ended with ``n`` waiting.
        theta: Dormant probabilities at arbitrary slots (zero for multiple vacations).
        scale: Total completion mass ``sum(alpha+) + sum(beta+) + sum(gamma+)``.
        tail_rate: Geometric decay factor ``1/|xi|`` of the queue tail (nan if unknown).
        tail_mass_bound: Bound on probability mass beyond row ``N``.
        engine: Which engine produced the values.
    """

    alpha_plus: np.ndarray = field(repr=False)
    beta_plus: np.ndarray = field(repr=False)
    gamma_plus: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    scale: float = 1.0
    tail_rate: float = float("nan")
    tail_mass_bound: float = 0.0
    engine: str = "analytic"

    def __post_init__(self):
        for name in ("alpha_plus", "beta_plus", "gamma_plus", "theta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def N(self) -> int:
        return self.alpha_plus.shape[0] - 1

    def total(self) -> float:
        return float(self.alpha_plus.sum() + self.beta_plus.sum() + self.gamma_plus.sum())

    def alpha_row(self) -> np.ndarray:
        """``alpha+_n`` summed over batch sizes."""
        return self.alpha_plus.sum(axis=1)

    def beta_row(self) -> np.ndarray:
        return self.beta_plus.sum(axis=1)

    def gamma_row(self) -> np.ndarray:
        return self.gamma_plus.sum(axis=1)


@dataclass(frozen=True)
class ArbitraryDistribution:
    """Joint probabilities observed at an arbitrary slot boundary ``t-``.

    Attributes:
        theta: ``[n]`` dormant server with ``n < a`` waiting (single vacations only).
        alpha: ``[n, r]`` FES of batch ``r`` in progress, ``n`` waiting.
        beta: ``[n, y]`` SOS of ``y`` customers in progress, ``n`` waiting.
        gamma: ``[n, k]`` type-``k`` vacation in progress, ``n`` waiting.
        tail_mass_bound: Bound on probability mass beyond row ``N``.
        engine: Which engine produced the values.
    """

    theta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)
    tail_mass_bound: float = 0.0
    engine: str = "analytic"

    def __post_init__(self):
        for name in ("theta", "alpha", "beta", "gamma"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def N(self) -> int:
        return self.alpha.shape[0] - 1

    def total(self) -> float:
        return float(self.theta.sum() + self.alpha.sum() + self.beta.sum() + self.gamma.sum())


@dataclass(frozen=True)
class NormalizationConstants:
    """Rates linking the embedded and arbitrary-slot distributions.

    Attributes:
        tau: Completion epochs (FES, SOS or vacation) per slot.
        Lambda: Mean length of the activity started at a completion epoch,
            dormant time excluded.
        E_star: ``lam / tau``; divides departure masses to give slot masses.
    """

    tau: float
    Lambda: float
    E_star: float
