"""Arbitrary-slot joint distribution from completion-epoch probabilities.

Every arbitrary-slot block obeys a renewal-type recursion in the queue
length: the mass at level ``n`` equals the group-arrival smoothing of lower
levels plus (entries - completions) at level ``n`` divided by ``E*``.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import NegativeProbabilityError
from .gf import e_table
from .model import ModelSpec, chi_matrix
from .results import ArbitraryDistribution, DepartureDistribution, NormalizationConstants
from .solver import dormant_profile

log = logging.getLogger(__name__)


def _renewal(source: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Solve ``x[n] = sum_{i>=1} g[i] x[n-i] + source[n]`` for a zero-sum source.

    Both sides are divided by ``1 - z``: with ``q[n] = -sum_{m>n} source[m]``
    and ``G_bar[k] = P(X > k)`` the solution obeys
    ``x[n] = q[n] - sum_{k>=1} G_bar[k] x[n-k]``.  Tail sums keep the
    geometric decay that a forward cumulative sum would bury in round-off.
    """
    tail = np.cumsum(source[::-1])[::-1]
    q = -np.append(tail[1:], 0.0)
    # below the first nonzero source entry the exact solution vanishes
    nz = np.flatnonzero(source)
    q[: nz[0] if nz.size else source.size] = 0.0
    gbar = 1.0 - np.cumsum(g)
    gbar = gbar[1 : np.flatnonzero(g)[-1]]
    x = np.zeros_like(source)
    m = gbar.size
    for n in range(source.size):
        k = min(n, m)
        acc = q[n]
        if k:
            acc -= gbar[:k] @ x[n - 1 :: -1][:k]
        x[n] = acc
    return x


def _check(arr: np.ndarray, name: str) -> np.ndarray:
    if arr.size and arr.min() < -1e-9:
        idx = np.unravel_index(int(np.argmin(arr)), arr.shape)
        raise NegativeProbabilityError(f"{name}{list(idx)} = {arr.min():.3e}; recursion lost positivity")
    if arr.size and arr.min() < 0:
        log.info("clipped %d round-off negatives in %s", int(np.sum(arr < 0)), name)
    return np.where(arr < 0, 0.0, arr)


def to_arbitrary(spec: ModelSpec, dep: DepartureDistribution, nc: NormalizationConstants) -> ArbitraryDistribution:
    """Arbitrary-slot probabilities on the same rows ``0..N`` as ``dep``."""
    a, b, delta = spec.a, spec.b, spec.delta
    ch = chi_matrix(spec)
    g = spec.g.dense()
    inv_e = 1.0 / nc.E_star
    ap, bp, gp = dep.alpha_plus, dep.beta_plus, dep.gamma_plus
    rows = ap.shape[0]
    dec = ap @ ch[:, 0] + bp.sum(axis=1)
    vac_end = gp.sum(axis=1)

    theta = np.zeros(a)
    lift = np.zeros(rows + b + 1)
    if delta == 0:
        theta = dormant_profile(spec, gp, e_table(spec.g, a - 1)) * inv_e
        for i in range(a):
            top = min(lift.size, i + g.size)
            lift[i:top] += theta[i] * g[: top - i]
        lift[:a] = 0.0

    def ahead(x, shift):
        out = np.zeros(rows)
        seg = x[shift : shift + rows]
        out[: seg.size] = seg
        return out

    alpha = np.zeros((rows, b + 1))
    for r in range(a, b):
        src = -ap[:, r] * inv_e
        src[0] += (dec[r] + vac_end[r]) * inv_e + lift[r]
        alpha[:, r] = _renewal(src, g)
    entry_b = (ahead(dec, b) + ahead(vac_end, b)) * inv_e + ahead(lift, b)
    alpha[:, b] = _renewal(entry_b - ap[:, b] * inv_e, g)

    beta = np.zeros((rows, b + 1))
    for y in range(1, b + 1):
        src = (ap @ ch[:, y] - bp[:, y]) * inv_e
        beta[:, y] = _renewal(src, g)

    gamma = np.zeros((rows, a))
    for k in range(a):
        src = -gp[:, k] * inv_e
        src[k] += (dec[k] + delta * vac_end[k]) * inv_e
        src[:k] = 0.0
        gamma[:, k] = _renewal(src, g)

    theta, alpha = _check(theta, "theta"), _check(alpha, "alpha")
    beta, gamma = _check(beta, "beta"), _check(gamma, "gamma")
    # remainder summation certifies the mass beyond row N
    total = (1 - delta) * theta.sum() + alpha.sum() + beta.sum() + gamma.sum()
    return ArbitraryDistribution(
        theta=theta,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        tail_mass_bound=max(0.0, 1.0 - total) + dep.tail_mass_bound,
        engine=dep.engine,
    )
