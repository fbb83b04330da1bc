"""Brute-force stationary solve of the slot-level Markov chain.

The chain is observed at ``t-`` with state (server mode, queue length,
batch or type, remaining slots including the current one).  The queue is
capped at ``N``; the mass that reaches the cap is reported and must be
negligible.  This engine shares no algebra with the transform solver and
serves as its reference.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import ParameterError, TruncationError
from .gf import slot_arrival_pmf
from .model import ModelSpec, chi_matrix, validate
from .results import ArbitraryDistribution, DepartureDistribution

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-8


class _Layout:
    """Maps (mode, index, n, remaining) to flat state numbers."""

    def __init__(self, spec: ModelSpec, N: int, L: int | None):
        self.N = N
        self.blocks: dict[tuple[str, int], tuple[int, int]] = {}
        size = 0
        if spec.delta == 0:
            self.blocks[("dormant", 0)] = (size, 1)
            size += (N + 1)

        def add(kind, key, pmf):
            nonlocal size
            length = pmf.support_end
            if L is not None and length > L:
                raise ParameterError(f"{kind}[{key}] support {length} exceeds the remaining-time cap L={L}")
            self.blocks[(kind, key)] = (size, length)
            size += (N + 1) * length

        for r in range(spec.a, spec.b + 1):
            add("fes", r, spec.fes[r])
        for y in range(1, spec.b + 1):
            add("sos", y, spec.sos[y])
        for k in range(spec.a):
            add("vac", k, spec.vacation[k])
        self.size = size

    def index(self, kind: str, key: int, n, ell=1):
        start, length = self.blocks[(kind, key)]
        return start + np.asarray(n) * length + (np.asarray(ell) - 1)


def _solve_chain(spec: ModelSpec, N: int, L: int | None):
    validate(spec)
    a, b = spec.a, spec.b
    lay = _Layout(spec, N, L)
    arr = slot_arrival_pmf(spec.lam, spec.g).dense()
    jumps = np.flatnonzero(arr)
    ch = chi_matrix(spec)
    rows, cols, vals = [], [], []

    def emit(src, dst, p):
        rows.append(np.broadcast_to(np.asarray(src), np.shape(dst)).ravel())
        cols.append(np.asarray(dst).ravel())
        vals.append(np.broadcast_to(np.asarray(p, dtype=float), np.shape(dst)).ravel())

    def start(kind, key, n, pmf, weight, src):
        """Begin an activity with ``n`` waiting; remaining time drawn from ``pmf``."""
        ells = np.arange(pmf.offset, pmf.support_end + 1)
        emit(src, lay.index(kind, key, n, ells), weight * pmf.mass)

    def decide(n1, weight, src):
        """Server choice after an FES without joiners or an SOS completion."""
        if n1 >= a:
            r = min(n1, b)
            start("fes", r, n1 - r, spec.fes[r], weight, src)
        else:
            start("vac", n1, n1, spec.vacation[n1], weight, src)

    def after_vacation(n1, k, weight, src):
        if n1 >= a:
            r = min(n1, b)
            start("fes", r, n1 - r, spec.fes[r], weight, src)
        elif spec.delta == 0:
            emit(src, lay.index("dormant", 0, n1), weight)
        else:
            start("vac", n1, n1, spec.vacation[n1], weight, src)

    for (kind, key), (_, length) in lay.blocks.items():
        for n in range(N + 1):
            if kind == "dormant":
                src = lay.index("dormant", 0, n)
                for j in jumps:
                    n1 = min(n + j, N)
                    if n1 >= a:
                        r = min(n1, b)
                        start("fes", r, n1 - r, spec.fes[r], arr[j], src)
                    else:
                        emit(src, lay.index("dormant", 0, n1), arr[j])
                continue
            # countdown of remaining slots
            if length > 1:
                ells = np.arange(2, length + 1)
                src = lay.index(kind, key, n, ells)
                for j in jumps:
                    emit(src, lay.index(kind, key, min(n + j, N), ells - 1), arr[j])
            src = lay.index(kind, key, n, 1)
            for j in jumps:
                n1 = min(n + j, N)
                w = arr[j]
                if kind == "fes":
                    for y in range(1, key + 1):
                        if ch[key, y] > 0:
                            start("sos", y, n1, spec.sos[y], w * ch[key, y], src)
                    if ch[key, 0] > 0:
                        decide(n1, w * ch[key, 0], src)
                elif kind == "sos":
                    decide(n1, w, src)
                else:
                    after_vacation(n1, key, w, src)

    P = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(lay.size, lay.size),
    )
    A = (P.T - sparse.identity(lay.size, format="csr")).tolil()
    A[0, :] = np.ones(lay.size)
    rhs = np.zeros(lay.size)
    rhs[0] = 1.0
    pi = spsolve(A.tocsc(), rhs)
    return lay, pi, arr


def truncated_chain_oracle(spec: ModelSpec, N: int, L: int | None = None):
    """Stationary joint distributions from the truncated slot chain.

    Args:
        spec: Validated, stable model.
        N: Queue-length cap of the state space.
        L: Optional cap on remaining-time supports; pmfs longer than this
            are rejected rather than silently cut.

    Returns:
        ``(DepartureDistribution, ArbitraryDistribution)`` on rows 0..N.

    Raises:
        TruncationError: More than 1e-8 of the mass sits at the cap.
    """
    a, b = spec.a, spec.b
    lay, pi, arr = _solve_chain(spec, N, L)
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)

    theta = np.zeros(a)
    alpha = np.zeros((N + 1, b + 1))
    beta = np.zeros((N + 1, b + 1))
    gamma = np.zeros((N + 1, a))
    alpha1 = np.zeros_like(alpha)
    beta1 = np.zeros_like(beta)
    gamma1 = np.zeros_like(gamma)
    for (kind, key), (s, length) in lay.blocks.items():
        if kind == "dormant":
            block = pi[s : s + N + 1]
            if np.any(block[a:] > 1e-14):
                raise AssertionError("dormant state above threshold carries mass")
            theta[:] = block[:a]
            continue
        block = pi[s : s + (N + 1) * length].reshape(N + 1, length)
        target, target1 = {"fes": (alpha, alpha1), "sos": (beta, beta1), "vac": (gamma, gamma1)}[kind]
        target[:, key] = block.sum(axis=1)
        target1[:, key] = block[:, 0]

    boundary = alpha[N].sum() + beta[N].sum() + gamma[N].sum()
    if boundary > BOUNDARY_TOL:
        raise TruncationError(boundary, int(N * 1.5) + 10)

    def completed(x1):
        # queue after the slot's arrivals, for activities ending this slot
        out = np.zeros_like(x1)
        for j in np.flatnonzero(arr):
            out[j:] += arr[j] * x1[: N + 1 - j]
        return out

    ap, bp, gp = completed(alpha1), completed(beta1), completed(gamma1)
    tau = ap.sum() + bp.sum() + gp.sum()
    dep = DepartureDistribution(
        alpha_plus=ap / tau,
        beta_plus=bp / tau,
        gamma_plus=gp / tau,
        theta=theta,
        scale=1.0,
        tail_mass_bound=float(boundary),
        engine="truncated",
    )
    arb = ArbitraryDistribution(
        theta=theta, alpha=alpha, beta=beta, gamma=gamma,
        tail_mass_bound=float(boundary), engine="truncated",
    )
    return dep, arb
