"""Performance indices computed from the joint distributions.

All quantities are fractions or slot counts; percentage formatting belongs
to presentation code.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NumericalError
from .gf import model_series
from .model import ModelSpec, chi_matrix
from .results import ArbitraryDistribution, DepartureDistribution


@dataclass(frozen=True)
class IdleBreakdown:
    """Expected idle time after an FES completion that leaves fewer than ``a`` waiting.

    ``dormant_after_fes`` / ``dormant_after_sos`` are dormant spells and
    ``vacation_after_fes`` / ``vacation_after_sos`` vacation spells, split by
    whether an SOS intervened.
    """

    dormant_after_fes: float
    dormant_after_sos: float
    vacation_after_fes: float
    vacation_after_sos: float
    total: float


@dataclass(frozen=True)
class PerformanceReport:
    psi_sys: np.ndarray = field(repr=False)
    psi_queue: np.ndarray = field(repr=False)
    psi_ser: np.ndarray = field(repr=False)
    eta_ser: np.ndarray = field(repr=False)
    Lq: float
    Ls_fes: float
    Ls_sos: float
    Wq: float
    Ws_fes: float
    Ws_sos: float
    esf: float
    expected_idle: IdleBreakdown
    utility_fes: float
    utility_sos: float
    utility: float
    cycle: float
    throughput: float
    flow_throughput: float
    p_idle: float
    p_busy_fes: float
    p_busy_sos: float

    def scalars(self) -> dict:
        """Flat name -> value mapping of every scalar index."""
        out = {k: v for k, v in asdict(self).items() if not isinstance(v, (np.ndarray, dict))}
        idle = self.expected_idle
        out.update(
            E_I=idle.total,
            E_I1=idle.dormant_after_fes,
            E_I2=idle.dormant_after_sos,
            E_V1=idle.vacation_after_fes,
            E_V2=idle.vacation_after_sos,
        )
        out.pop("expected_idle", None)
        return out


def queue_system_pmfs(arb: ArbitraryDistribution, spec: ModelSpec):
    """Number in system and number waiting at an arbitrary slot."""
    a, b, delta = spec.a, spec.b, spec.delta
    rows = arb.alpha.shape[0]
    gam = arb.gamma.sum(axis=1)
    psi_q = arb.alpha.sum(axis=1) + arb.beta.sum(axis=1) + gam
    psi_q[:a] += (1 - delta) * arb.theta
    psi_s = np.zeros(rows + b)
    psi_s[:rows] += gam
    psi_s[:a] += (1 - delta) * arb.theta
    for r in range(a, b + 1):
        psi_s[r : r + rows] += arb.alpha[:, r]
    for y in range(1, b + 1):
        psi_s[y : y + rows] += arb.beta[:, y]
    return psi_s, psi_q


def server_marginals(arb: ArbitraryDistribution):
    """Probability that the FES holds ``r`` customers and the SOS holds ``y``."""
    return arb.alpha.sum(axis=0), arb.beta.sum(axis=0)


def expected_lengths_waits(psi_queue: np.ndarray, psi_ser: np.ndarray, eta_ser: np.ndarray, spec: ModelSpec):
    """``(Lq, Ls_fes, Ls_sos, Wq, Ws_fes, Ws_sos)``; waits by Little's law."""
    lq = float(np.arange(psi_queue.size) @ psi_queue)
    ls_f = float(np.arange(psi_ser.size) @ psi_ser)
    ls_s = float(np.arange(eta_ser.size) @ eta_ser)
    rate = spec.lam * spec.g_mean
    return lq, ls_f, ls_s, lq / rate, ls_f / rate, ls_s / rate


def energy_saving_factor(arb: ArbitraryDistribution, spec: ModelSpec) -> float:
    """Fraction of slots spent on vacation, plus dormant slots for single vacations."""
    return float((1 - spec.delta) * arb.theta.sum() + arb.gamma.sum())


def idle_utility_cycle(dep: DepartureDistribution, arb: ArbitraryDistribution, spec: ModelSpec):
    """Expected idle period, busy-period utilities and cycle length.

    The dormant terms use the mean number of slots needed for the missing
    customers to trickle in one group at a time, which is exact for unit
    groups.
    """
    a, b, delta = spec.a, spec.b, spec.delta
    ch = chi_matrix(spec)
    series = model_series(spec)
    h = {k: series.H[k].coeffs for k in range(a)}
    t = {y: series.T[y].coeffs for y in range(1, b + 1)}
    at = lambda arr, i: arr[i] if 0 <= i < arr.size else 0.0
    V = np.array([spec.vacation[k].mean() for k in range(a)])
    rate = spec.lam * spec.g_mean
    ap = dep.alpha_plus
    den = ap[:a].sum()
    if den <= 0:
        raise NumericalError("no FES completion leaves fewer than a waiting; idle period undefined")

    i1 = i2 = v1 = v2 = 0.0
    for n in range(a):
        for r in range(a, b + 1):
            w = ap[n, r]
            if w == 0:
                continue
            i1 += w * ch[r, 0] * sum(at(h[n], i) * (a - n - i) for i in range(a - n))
            v1 += w * ch[r, 0] * V[n]
            for j in range(1, r + 1):
                if ch[r, j] == 0:
                    continue
                i2 += w * ch[r, j] * sum(
                    at(t[j], k) * at(h[n], i) * (a - n - k - i)
                    for k in range(a - n)
                    for i in range(a - n - k)
                )
                v2 += w * ch[r, j] * sum(at(t[j], i) for i in range(a - n)) * V[n]
    i1 /= rate * den
    i2 /= rate * den
    v1 /= den
    v2 /= den
    if delta == 1:
        q1 = sum(
            ap[i, j] * ch[j, 0] * at(h[n], n - i)
            for n in range(a) for i in range(n + 1) for j in range(a, b + 1)
        )
        q2 = sum(
            ap[n, j] * ch[j, i] * sum(
                at(t[i], k) * at(h[n], r) for k in range(a - n) for r in range(a - n - k)
            )
            for n in range(a) for j in range(a, b + 1) for i in range(1, j + 1)
        )
        v1 /= 1 - q1
        v2 /= 1 - q2
        i1 = i2 = 0.0
    total = i1 + i2 + v1 + v2
    idle = IdleBreakdown(i1, i2, v1, v2, total)

    p_idle = (1 - delta) * arb.theta.sum() + arb.gamma.sum()
    if p_idle <= 0:
        raise NumericalError("server is never idle; utilities undefined")
    p_fes = arb.alpha.sum()
    p_sos = arb.beta.sum()
    u1 = total * (1 - p_idle - p_sos) / p_idle
    u2 = total * (1 - p_idle - p_fes) / p_idle
    cycle = u1 + u2 + total
    return idle, (u1, u2, u1 + u2), cycle


def throughput(arb: ArbitraryDistribution, spec: ModelSpec) -> float:
    """Busy probabilities weighted by size-averaged service rates."""
    a, b = spec.a, spec.b
    rs = np.arange(a, b + 1)
    ys = np.arange(1, b + 1)
    mu_f = sum(r / spec.fes[r].mean() for r in rs) / rs.sum()
    mu_s = sum(y / spec.sos[y].mean() for y in ys) / ys.sum()
    return float(arb.alpha.sum() * mu_f + arb.beta.sum() * mu_s)


def performance_report(spec: ModelSpec, dep: DepartureDistribution, arb: ArbitraryDistribution) -> PerformanceReport:
    psi_s, psi_q = queue_system_pmfs(arb, spec)
    psi_ser, eta_ser = server_marginals(arb)
    lq, lsf, lss, wq, wsf, wss = expected_lengths_waits(psi_q, psi_ser, eta_ser, spec)
    idle, (u1, u2, u), cycle = idle_utility_cycle(dep, arb, spec)
    p_idle = (1 - spec.delta) * arb.theta.sum() + arb.gamma.sum()
    return PerformanceReport(
        psi_sys=psi_s,
        psi_queue=psi_q,
        psi_ser=psi_ser,
        eta_ser=eta_ser,
        Lq=lq,
        Ls_fes=lsf,
        Ls_sos=lss,
        Wq=wq,
        Ws_fes=wsf,
        Ws_sos=wss,
        esf=energy_saving_factor(arb, spec),
        expected_idle=idle,
        utility_fes=u1,
        utility_sos=u2,
        utility=u,
        cycle=cycle,
        throughput=throughput(arb, spec),
        flow_throughput=spec.lam * spec.g_mean,
        p_idle=float(p_idle),
        p_busy_fes=float(arb.alpha.sum()),
        p_busy_sos=float(arb.beta.sum()),
    )
