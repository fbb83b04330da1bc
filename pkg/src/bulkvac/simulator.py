"""Slot-level stochastic simulation of the queue.

Each slot ``k`` is processed in a fixed order:

1. the state is recorded at ``k-`` (arbitrary-slot tally);
2. a group may arrive in ``(k-, k)``;
3. at ``(k, k+)`` the current activity loses one slot, and on completion
   the server applies the (a,b) rule, the SOS split or the vacation policy.
   A dormant server starts an FES here as soon as the queue reaches ``a``.

Uniform variates come from numpy's PCG64.  Replication ``i`` uses the
``i``-th child of ``SeedSequence(seed)``, so results depend only on
``(spec, config)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ParameterError
from .model import ModelSpec, chi_matrix, validate

DORMANT, VACATION, FES, SOS = 0, 1, 2, 3
RING = 1 << 16
CHUNK = 1 << 20
UNIFORMS_PER_SLOT = 6


@dataclass(frozen=True)
class SimConfig:
    slots: int = 10_000_000
    warmup: int = 100_000
    seed: int = 12345
    replications: int = 1
    queue_cap: int = 4000

    def __post_init__(self):
        if self.warmup < 0 or self.warmup >= self.slots:
            raise ParameterError("warmup must satisfy 0 <= warmup < slots")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if self.queue_cap < 1:
            raise ParameterError("queue_cap must be >= 1")


@dataclass(frozen=True)
class SimulationEstimate:
    """Empirical distributions and means; ``*_se`` are across-replication standard errors."""

    theta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)
    alpha_plus: np.ndarray = field(repr=False)
    beta_plus: np.ndarray = field(repr=False)
    gamma_plus: np.ndarray = field(repr=False)
    psi_queue: np.ndarray = field(repr=False)
    psi_sys: np.ndarray = field(repr=False)
    mean_wait: float
    mean_idle: float
    departures_per_slot: float
    arrivals_per_slot: float
    mean_wait_se: float
    mean_idle_se: float
    departures_per_slot_se: float
    observed_slots: int
    conservation_gap: int
    max_fes_batch: int
    min_fes_batch: int
    max_sos_batch: int
    max_vacation_type: int


def _cdf_table(pmfs: dict, lo: int, hi: int):
    width = max(p.mass.size for p in pmfs.values())
    cdf = np.ones((hi + 1, width))
    off = np.zeros(hi + 1, dtype=np.int64)
    for key in range(lo, hi + 1):
        p = pmfs[key]
        c = np.cumsum(p.mass) / p.mass.sum()
        cdf[key, : c.size] = c
        cdf[key, c.size - 1 :] = 1.0
        off[key] = p.offset
    return cdf, off


@numba.njit(cache=True)
def _draw(cdf_row, offset, u):
    return offset + np.searchsorted(cdf_row, u, side="right")


@numba.njit(cache=True)
def _run_chunk(
    st, ring, U, k0, k1, warmup, a, b, delta, lam,
    g_cdf, g_off, f_cdf, f_off, s_cdf, s_off, v_cdf, v_off, chi_cdf,
    h_theta, h_alpha, h_beta, h_gamma, h_ap, h_bp, h_gp, acc,
):
    # st: mode, n, key, remaining, head, tail, idle_open, arrivals, departures
    cap = h_alpha.shape[0] - 1
    ui = 0
    for k in range(k0, k1):
        mode, n, key, rem = st[0], st[1], st[2], st[3]
        obs = k >= warmup
        nn = n if n < cap else cap
        if obs:
            if mode == DORMANT:
                h_theta[nn] += 1
            elif mode == VACATION:
                h_gamma[nn, key] += 1
            elif mode == FES:
                h_alpha[nn, key] += 1
            else:
                h_beta[nn, key] += 1
            if st[6] == 1 and (mode == DORMANT or mode == VACATION):
                acc[2] += 1.0
        # late arrival
        u = U[ui]
        ui += 1
        if u < lam:
            x = _draw(g_cdf, g_off, U[ui])
            ui += 1
            for _ in range(x):
                ring[st[5] % ring.size] = k
                st[5] += 1
            n += x
            st[7] += x
        # departures and decisions at (k, k+)
        decide = False
        start_fes = False
        if mode == DORMANT:
            if n >= a:
                start_fes = True
        else:
            if rem > 1:
                rem -= 1
            else:
                nn = n if n < cap else cap
                if mode == FES:
                    if obs:
                        h_ap[nn, key] += 1
                        if n < a:
                            st[6] = 1
                            acc[3] += 1.0
                    y = np.searchsorted(chi_cdf[key, : key + 1], U[ui], side="right")
                    ui += 1
                    st[8] += key - y
                    if y >= 1:
                        mode = SOS
                        key = y
                        rem = _draw(s_cdf[y], s_off[y], U[ui])
                        ui += 1
                    else:
                        decide = True
                elif mode == SOS:
                    if obs:
                        h_bp[nn, key] += 1
                    st[8] += key
                    decide = True
                else:
                    if obs:
                        h_gp[nn, key] += 1
                    if n >= a:
                        start_fes = True
                    elif delta == 0:
                        mode = DORMANT
                        key = 0
                        rem = 0
                    else:
                        decide = True
        if decide:
            if n >= a:
                start_fes = True
            else:
                mode = VACATION
                key = n
                rem = _draw(v_cdf[n], v_off[n], U[ui])
                ui += 1
        if start_fes:
            r = n if n < b else b
            mode = FES
            key = r
            rem = _draw(f_cdf[r], f_off[r], U[ui])
            ui += 1
            n -= r
            for _ in range(r):
                arr_slot = ring[st[4] % ring.size]
                st[4] += 1
                if obs:
                    acc[0] += k - arr_slot
                    acc[1] += 1.0
            st[6] = 0
            if obs:
                if r > acc[4]:
                    acc[4] = r
                if r < acc[5]:
                    acc[5] = r
        if mode == SOS and obs and key > acc[6]:
            acc[6] = key
        if mode == VACATION and obs and key > acc[8]:
            acc[8] = key
        st[0], st[1], st[2], st[3] = mode, n, key, rem
    return ui


def _one_replication(spec: ModelSpec, cfg: SimConfig, seed_seq: np.random.SeedSequence):
    a, b = spec.a, spec.b
    g_cdf = np.cumsum(spec.g.dense()) / spec.g.total()
    g_cdf[-1] = 1.0
    g_cdf = g_cdf[1:]
    f_cdf, f_off = _cdf_table(spec.fes, a, b)
    s_cdf, s_off = _cdf_table(spec.sos, 1, b)
    v_cdf, v_off = _cdf_table(spec.vacation, 0, a - 1)
    chi_cdf = np.cumsum(chi_matrix(spec), axis=1)
    for r in range(b + 1):
        chi_cdf[r, r:] = 1.0
    cap = cfg.queue_cap
    h_theta = np.zeros(cap + 1)
    h_alpha = np.zeros((cap + 1, b + 1))
    h_beta = np.zeros((cap + 1, b + 1))
    h_gamma = np.zeros((cap + 1, a))
    h_ap, h_bp, h_gp = np.zeros_like(h_alpha), np.zeros_like(h_beta), np.zeros_like(h_gamma)
    acc = np.zeros(9)
    acc[5] = b + 1
    ring = np.zeros(RING, dtype=np.int64)
    # start empty on a type-0 vacation (or dormant for single vacations)
    st = np.zeros(9, dtype=np.int64)
    st[0] = DORMANT if spec.delta == 0 else VACATION
    st[3] = 1
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    k = 0
    while k < cfg.slots:
        k1 = min(cfg.slots, k + CHUNK)
        U = rng.random((k1 - k) * UNIFORMS_PER_SLOT)
        _run_chunk(
            st, ring, U, k, k1, cfg.warmup, a, b, spec.delta, spec.lam,
            g_cdf, 1, f_cdf, f_off, s_cdf, s_off, v_cdf, v_off, chi_cdf,
            h_theta, h_alpha, h_beta, h_gamma, h_ap, h_bp, h_gp, acc,
        )
        if st[5] - st[4] > RING:
            raise ParameterError("queue exceeded the simulator's FIFO capacity; the model is too congested")
        k = k1
    content = st[1]
    mode, key = st[0], st[2]
    if mode == FES or mode == SOS:
        content += key
    gap = int(st[7] - st[8] - content)
    return dict(
        theta=h_theta, alpha=h_alpha, beta=h_beta, gamma=h_gamma,
        ap=h_ap, bp=h_bp, gp=h_gp, acc=acc.copy(), arrivals=int(st[7]), departures=int(st[8]), gap=gap,
    )


def _trim_rows(*arrs):
    last = 0
    for x in arrs:
        rows = np.flatnonzero(x.reshape(x.shape[0], -1).sum(axis=1))
        if rows.size:
            last = max(last, rows[-1])
    return [x[: last + 1] for x in arrs]


def simulate(spec: ModelSpec, cfg: SimConfig = SimConfig()) -> SimulationEstimate:
    """Run ``cfg.replications`` independent trajectories and pool their tallies."""
    validate(spec)
    a, b = spec.a, spec.b
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    reps = [_one_replication(spec, cfg, s) for s in children]
    tot = {k: sum(r[k] for r in reps) for k in ("theta", "alpha", "beta", "gamma", "ap", "bp", "gp")}
    obs = cfg.slots - cfg.warmup
    n_obs = obs * cfg.replications
    n_dep = tot["ap"].sum() + tot["bp"].sum() + tot["gp"].sum()
    theta = tot["theta"][:a] / n_obs
    alpha, beta, gamma = tot["alpha"] / n_obs, tot["beta"] / n_obs, tot["gamma"] / n_obs
    ap, bp, gp = tot["ap"] / n_dep, tot["bp"] / n_dep, tot["gp"] / n_dep
    alpha, beta, gamma, ap, bp, gp = _trim_rows(alpha, beta, gamma, ap, bp, gp)
    rows = alpha.shape[0]
    psi_q = alpha.sum(axis=1) + beta.sum(axis=1) + gamma.sum(axis=1)
    m = min(a, rows)
    psi_q[:m] += theta[:m]
    psi_s = np.zeros(rows + b)
    psi_s[:rows] += gamma.sum(axis=1)
    psi_s[:a] += theta
    for r in range(a, b + 1):
        psi_s[r : r + rows] += alpha[:, r]
    for y in range(1, b + 1):
        psi_s[y : y + rows] += beta[:, y]
    psi_s = psi_s[: np.flatnonzero(psi_s)[-1] + 1]

    def stat(values):
        values = np.asarray(values, dtype=float)
        se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else float("nan")
        return float(values.mean()), se

    waits = [r["acc"][0] / r["acc"][1] if r["acc"][1] else float("nan") for r in reps]
    idles = [r["acc"][2] / r["acc"][3] if r["acc"][3] > 0 else float("nan") for r in reps]
    deps = [r["departures"] / cfg.slots for r in reps]
    acc_all = np.array([r["acc"] for r in reps])
    mean_wait = float(acc_all[:, 0].sum() / acc_all[:, 1].sum())
    mean_idle = float(acc_all[:, 2].sum() / acc_all[:, 3].sum()) if acc_all[:, 3].sum() else float("nan")
    return SimulationEstimate(
        theta=theta,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        alpha_plus=ap,
        beta_plus=bp,
        gamma_plus=gp,
        psi_queue=psi_q,
        psi_sys=psi_s,
        mean_wait=mean_wait,
        mean_idle=mean_idle,
        departures_per_slot=float(np.mean(deps)),
        arrivals_per_slot=float(sum(r["arrivals"] for r in reps) / (cfg.slots * cfg.replications)),
        mean_wait_se=stat(waits)[1],
        mean_idle_se=stat(idles)[1],
        departures_per_slot_se=stat(deps)[1],
        observed_slots=int(n_obs),
        conservation_gap=int(max(abs(r["gap"]) for r in reps)),
        max_fes_batch=int(acc_all[:, 4].max()),
        min_fes_batch=int(acc_all[:, 5].min()),
        max_sos_batch=int(acc_all[:, 6].max()),
        max_vacation_type=int(acc_all[:, 8].max()),
    )
