"""Transform-based solver for the completion-epoch joint distribution.

Notation used throughout (all indexed by the queue length ``n`` seen just
after a completion, before the server acts):

* ``d[n]``  mass of completions that hand the server a choice at level ``n``
  (FES with no SOS joiners, or SOS);
* ``c[n]``  mass of vacation completions at level ``n``;
* ``v[k]``  mass of type-``k`` vacations started (``k < a``);
* ``u[l]``  mass of dormant periods ended by a group that lifts the queue to
  ``l >= a`` (single vacations only);
* ``s[l]``  mass of FES starts with ``l`` customers waiting.

The unknowns are ``d[0..b-1]``.  They are fixed by requiring the numerator
of the FES-``b`` transform to vanish at the ``b-1`` zeros of the
characteristic polynomial inside the unit disk, plus normalization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    ConditioningError,
    InstabilityError,
    NearDegenerateError,
    NegativeProbabilityError,
    NumericalError,
    RootCountError,
)
from .gf import SeriesBundle, e_table, eq45_coefficients, model_series, trim
from .model import ModelSpec, chi_matrix, rho, validate
from .results import DepartureDistribution, NormalizationConstants

log = logging.getLogger(__name__)

CLIP_TOL = 1e-12
TAIL_TARGET = 1e-10
MAX_ROWS = 200_000


# ---------------------------------------------------------------------------
# characteristic polynomial and roots


@dataclass(frozen=True)
class CharacteristicFn:
    """``D(z) = z^b - Phi_b(z) K^b(z)`` with ``Phi_b = chi_{b,0} + F_{b-a+1}(z, 1)``."""

    D: np.ndarray = field(repr=False)
    phi_kb: np.ndarray = field(repr=False)
    b: int
    rho: float

    @property
    def degree(self) -> int:
        return self.D.size - 1

    def __call__(self, z):
        return P.polyval(z, self.D)

    def derivative_at_one(self) -> float:
        return float(P.polyval(1.0, P.polyder(self.D)))


@dataclass(frozen=True)
class RootSet:
    interior: np.ndarray
    unit: complex
    exterior: np.ndarray

    @property
    def min_exterior_modulus(self) -> float:
        return float(np.abs(self.exterior[0])) if self.exterior.size else float("inf")


def _phi_polys(spec: ModelSpec, series: SeriesBundle, ch: np.ndarray) -> dict:
    """``Phi_r(z) = chi_{r,0} + sum_y chi_{r,y} T^y(z)`` for a <= r <= b."""
    out = {}
    for r in range(spec.a, spec.b + 1):
        poly = np.array([ch[r, 0]])
        for y in range(1, r + 1):
            if ch[r, y] > 0:
                poly = P.polyadd(poly, ch[r, y] * series.T[y].coeffs)
        out[r] = poly
    return out


def characteristic(spec: ModelSpec, series: SeriesBundle | None = None) -> CharacteristicFn:
    """Assemble the characteristic polynomial; rejects unstable models."""
    r = rho(spec)
    if r >= 1:
        raise InstabilityError(r)
    series = series or model_series(spec)
    ch = chi_matrix(spec)
    b = spec.b
    phi_kb = P.polymul(_phi_polys(spec, series, ch)[b], series.K[b].coeffs)
    zb = np.zeros(b + 1)
    zb[b] = 1.0
    D = trim(P.polysub(zb, phi_kb), tol=1e-300)
    return CharacteristicFn(D, phi_kb, b, r)


def _polish(coeffs: np.ndarray, z: complex, iters: int = 50) -> tuple[complex, float]:
    """Newton refinement; returns the root and its relative backward residual."""
    dcoeffs = P.polyder(coeffs)
    absc = np.abs(coeffs)

    def resid(w):
        scale = P.polyval(abs(w), absc)
        return abs(P.polyval(w, coeffs)) / scale if scale > 0 else 0.0

    best, best_res = z, resid(z)
    for _ in range(iters):
        if best_res < 1e-15:
            break
        dp = P.polyval(z, dcoeffs)
        if dp == 0:
            break
        z = z - P.polyval(z, coeffs) / dp
        res = resid(z)
        if res < best_res:
            best, best_res = z, res
        else:
            break
    return best, best_res


def _sort_roots(roots) -> np.ndarray:
    roots = np.asarray(roots, dtype=complex)
    order = np.lexsort((np.round(np.angle(roots), 12), np.round(np.abs(roots), 12)))
    return roots[order]


def find_roots(cf: CharacteristicFn, eps: float = 1e-7) -> RootSet:
    """All zeros of ``D``, split into interior, the unit root and exterior.

    Raises:
        NearDegenerateError: a zero other than 1 lies within ``eps`` of the unit circle.
        RootCountError: the interior count differs from ``b - 1``.
    """
    D = cf.D
    raw = P.polyroots(D) if D.size > 1 else np.array([])
    roots = []
    for z in raw:
        if abs(z) < 4.0:
            z, res = _polish(D, complex(z))
            if res > 1e-10:
                log.warning("root %s polished only to relative residual %.2e", z, res)
        roots.append(complex(z))
    roots = np.array(roots, dtype=complex)
    # restore exact conjugate symmetry
    roots = np.where(np.abs(roots.imag) < 1e-13, roots.real + 0j, roots)
    if roots.size == 0:
        raise RootCountError(cf.b - 1, 0, [])
    i_unit = int(np.argmin(np.abs(roots - 1.0)))
    if abs(roots[i_unit] - 1.0) > eps:
        raise NumericalError(f"no zero of the characteristic polynomial near 1 (closest {roots[i_unit]})")
    unit = roots[i_unit]
    others = np.delete(roots, i_unit)
    mod = np.abs(others)
    near = others[np.abs(mod - 1.0) <= eps]
    if near.size:
        raise NearDegenerateError(complex(near[0]))
    interior = _sort_roots(others[mod < 1.0])
    exterior = _sort_roots(others[mod > 1.0])
    if interior.size != cf.b - 1:
        raise RootCountError(cf.b - 1, interior.size, np.abs(roots))
    return RootSet(interior, unit, exterior)


# ---------------------------------------------------------------------------
# linear structure of the boundary masses


@dataclass
class _Context:
    spec: ModelSpec
    series: SeriesBundle
    chi: np.ndarray
    phi: dict
    e: np.ndarray
    zeta_mat: np.ndarray  # c_low = zeta_mat @ d_low
    g: np.ndarray
    cf: CharacteristicFn

    @classmethod
    def build(cls, spec: ModelSpec) -> "_Context":
        validate(spec)
        series = model_series(spec)
        ch = chi_matrix(spec)
        a = spec.a
        coeffs = eq45_coefficients(spec, series.H)
        zm = np.zeros((a, a))
        for k in range(a):
            for i in range(k + 1):
                zm[k, i] = coeffs.zeta[k - i, i]
        return cls(
            spec=spec,
            series=series,
            chi=ch,
            phi=_phi_polys(spec, series, ch),
            e=e_table(spec.g, a - 1),
            zeta_mat=zm,
            g=spec.g.dense(),
            cf=characteristic(spec, series),
        )

    def masses(self, d: np.ndarray):
        """Return ``(v, c_poly, u)`` implied by decision masses ``d[0..b-1]``.

        ``c_poly`` is the vacation-completion mass as a polynomial in the
        queue length; ``u`` is indexed by the lifted level.
        """
        spec = self.spec
        a, delta = spec.a, spec.delta
        c_low = self.zeta_mat @ d[:a]
        v = d[:a] + delta * c_low
        c_poly = np.zeros(1)
        for k in range(a):
            if v[k] != 0:
                c_poly = P.polyadd(c_poly, v[k] * np.concatenate([np.zeros(k), self.series.H[k].coeffs]))
        u = np.zeros(a + self.g.size)
        if delta == 0:
            for m in range(a):
                for j in range(m, a):
                    w = c_low[m] * self.e[j, m]
                    if w != 0:
                        u[j : j + self.g.size] += w * self.g
            u[:a] = 0.0
        return v, c_poly, u

    def m_poly(self, d: np.ndarray) -> np.ndarray:
        """Numerator ``M(z)`` of ``A_b(z) = K^b(z) M(z) / D(z)``."""
        spec = self.spec
        a, b = spec.a, spec.b
        v, c_poly, u = self.masses(d)
        c = np.zeros(b)
        c[: min(b, c_poly.size)] = c_poly[:b]
        out = P.polysub(c_poly, np.concatenate([d[:b] + c, np.zeros(0)]))
        for r in range(a, b):
            s_r = d[r] + c[r] + (u[r] if r < u.size else 0.0)
            if s_r != 0:
                out = P.polyadd(out, s_r * P.polymul(self.series.K[r].coeffs, self.phi[r]))
        if u.size > b:
            out = P.polyadd(out, np.concatenate([np.zeros(b), u[b:]]))
        return out

    def start_masses(self, d: np.ndarray):
        """FES start masses ``s[a..b-1]`` plus the ingredients needed downstream."""
        a, b = self.spec.a, self.spec.b
        v, c_poly, u = self.masses(d)
        c = np.zeros(b)
        c[: min(b, c_poly.size)] = c_poly[:b]
        s = np.zeros(b)
        for r in range(a, b):
            s[r] = d[r] + c[r] + (u[r] if r < u.size else 0.0)
        return s, v, c_poly, u


def _basis(ctx: _Context) -> list[np.ndarray]:
    b = ctx.spec.b
    out = []
    for j in range(b):
        d = np.zeros(b)
        d[j] = 1.0
        out.append(ctx.m_poly(d))
    return out


@dataclass(frozen=True)
class Boundary:
    """Solved decision masses ``d[0..b-1]`` with diagnostic information."""

    d: np.ndarray
    roots: RootSet
    residual: float
    condition: float
    A_b_at_one: float


def _total_row(ctx: _Context, basis: list[np.ndarray]) -> np.ndarray:
    """Linear functional giving total completion mass for each unit ``d``."""
    b = ctx.spec.b
    ch = ctx.chi
    dprime = ctx.cf.derivative_at_one()
    row = np.zeros(b)
    for j in range(b):
        d = np.zeros(b)
        d[j] = 1.0
        s, v, _, _ = ctx.start_masses(d)
        A_b1 = P.polyval(1.0, P.polyder(basis[j])) / dprime
        row[j] = (
            sum(s[r] * (2.0 - ch[r, 0]) for r in range(ctx.spec.a, b))
            + (2.0 - ch[b, 0]) * A_b1
            + v.sum()
        )
    return row


def solve_boundary(spec: ModelSpec, eps: float = 1e-7, _ctx: _Context | None = None) -> Boundary:
    """Solve for the ``b`` decision masses from interior zeros and normalization.

    Raises:
        ConditioningError: the linear system has condition number above 1e12.
        NegativeProbabilityError: a solved mass is below -1e-9.
    """
    ctx = _ctx or _Context.build(spec)
    roots = find_roots(ctx.cf, eps)
    basis = _basis(ctx)
    b = spec.b
    rows, rhs = [], []
    for xi in roots.interior:
        vals = np.array([P.polyval(xi, m) for m in basis])
        if abs(xi.imag) < 1e-12:
            rows.append(vals.real)
            rhs.append(0.0)
        elif xi.imag > 0:
            rows.append(vals.real)
            rows.append(vals.imag)
            rhs += [0.0, 0.0]
    rows.append(_total_row(ctx, basis))
    rhs.append(1.0)
    A = np.array(rows)
    y = np.array(rhs)
    if A.shape != (b, b):
        raise RootCountError(b - 1, len(roots.interior), np.abs(roots.interior))
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0] = 1.0
    As = A / norms[:, None]
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningError(f"boundary system condition number {cond:.3e} exceeds 1e12")
    d = np.linalg.solve(As, y / norms)
    residual = float(np.max(np.abs(A @ d - y)))
    if np.any(d < -1e-9):
        j = int(np.argmin(d))
        raise NegativeProbabilityError(
            f"boundary mass d[{j}] = {d[j]:.3e} < 0; cross-check this model with the truncated-chain engine"
        )
    d = np.where(d < 0, 0.0, d)
    A_b1 = P.polyval(1.0, P.polyder(ctx.m_poly(d))) / ctx.cf.derivative_at_one()
    return Boundary(d=d, roots=roots, residual=residual, condition=cond, A_b_at_one=float(A_b1))


# ---------------------------------------------------------------------------
# coefficient extraction


def _deflate(poly: np.ndarray, root: complex) -> np.ndarray:
    """Quotient of ``poly`` by ``(z - root)``, computed from the top coefficient."""
    n = poly.size - 1
    q = np.zeros(n, dtype=complex)
    acc = 0j
    for k in range(n, 0, -1):
        acc = poly[k] + root * acc
        q[k - 1] = acc
    return q


def _deflate_all(poly: np.ndarray, roots) -> np.ndarray:
    out = np.asarray(poly, dtype=complex)
    for z in roots:
        out = _deflate(out, z)
    return out.real


def _series_ratio(num: np.ndarray, den: np.ndarray, n_terms: int) -> np.ndarray:
    """First ``n_terms`` power-series coefficients of ``num/den`` (``den[0] != 0``)."""
    out = np.zeros(n_terms)
    numx = np.zeros(n_terms)
    numx[: min(n_terms, num.size)] = num[:n_terms]
    den = trim(den, tol=0.0)
    d0 = den[0]
    tail = den[1:]
    m = tail.size
    for n in range(n_terms):
        k = min(n, m)
        acc = numx[n]
        if k:
            acc -= tail[:k] @ out[n - 1 :: -1][:k]
        out[n] = acc / d0
    return out


def _clip(arr: np.ndarray, name: str) -> np.ndarray:
    low = arr.min() if arr.size else 0.0
    if low < -1e-9:
        idx = np.unravel_index(int(np.argmin(arr)), arr.shape)
        raise NegativeProbabilityError(f"{name}{list(idx)} = {low:.3e} is negative")
    if low < 0:
        count = int(np.sum(arr < 0))
        log.info("clipped %d negative round-off entries of %s (min %.2e)", count, name, low)
    return np.where(arr < 0, 0.0, arr)


def _pad(arr: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length)
    out[: min(length, arr.size)] = arr[:length]
    return out


def extract_departure(spec: ModelSpec, boundary: Boundary | None = None, n_max: int | None = None,
                      _ctx: _Context | None = None) -> DepartureDistribution:
    """Completion-epoch joint distribution, normalized over all completions.

    Args:
        spec: Validated stable model.
        boundary: Output of :func:`solve_boundary` (solved here if omitted).
        n_max: Force the last queue row; by default rows continue until the
            geometric tail estimate drops below 1e-10.
    """
    ctx = _ctx or _Context.build(spec)
    boundary = boundary or solve_boundary(spec, _ctx=ctx)
    a, b = spec.a, spec.b
    ch, K, T = ctx.chi, ctx.series.K, ctx.series.T
    d = boundary.d
    s, v, c_poly, u = ctx.start_masses(d)
    M = ctx.m_poly(d)
    num = P.polymul(K[b].coeffs, M)
    D = ctx.cf.D
    roots = boundary.roots
    deflators = [roots.unit] + list(roots.interior)
    num_t = _deflate_all(num, deflators)
    den_t = _deflate_all(D, deflators)

    # tail law from the smallest exterior zero
    tail_rate, residue = float("nan"), float("nan")
    if roots.exterior.size:
        xi = roots.exterior[0]
        tail_rate = 1.0 / abs(xi)
        repeated = roots.exterior.size > 1 and abs(roots.exterior[1] - xi) < 1e-8
        if not repeated:
            residue = -P.polyval(xi, num) / P.polyval(xi, P.polyder(D))
    finite_len = max(
        [K[r].coeffs.size for r in range(a, b + 1)]
        + [T[y].coeffs.size for y in range(1, b + 1)]
        + [c_poly.size, b + 1]
    )
    if n_max is None:
        n_rows = finite_len + 1
        if np.isfinite(tail_rate) and tail_rate > 0:
            scale = abs(residue) if np.isfinite(residue) else 1.0
            scale = max(scale, 1.0)
            need = np.log(TAIL_TARGET * (1 - tail_rate) / scale) / np.log(tail_rate)
            n_rows = max(n_rows, int(np.ceil(need)) + 2 * finite_len)
        n_rows = min(n_rows, MAX_ROWS)
    else:
        n_rows = n_max + 1

    alpha = np.zeros((n_rows, b + 1))
    for r in range(a, b):
        alpha[:, r] = s[r] * _pad(K[r].coeffs, n_rows)
    alpha[:, b] = _series_ratio(num_t, den_t, n_rows)
    beta = np.zeros((n_rows, b + 1))
    for y in range(1, b + 1):
        mix = sum(ch[r, y] * alpha[:, r] for r in range(max(a, y), b + 1))
        beta[:, y] = np.convolve(mix, T[y].coeffs)[:n_rows]
    gamma = np.zeros((n_rows, a))
    for k in range(a):
        gamma[k:, k] = v[k] * _pad(ctx.series.H[k].coeffs, n_rows - k)

    alpha = _clip(alpha, "alpha+")
    beta = _clip(beta, "beta+")
    gamma = _clip(gamma, "gamma+")
    total = alpha.sum() + beta.sum() + gamma.sum()
    bound = max(0.0, 1.0 - total)
    if np.isfinite(tail_rate) and np.isfinite(residue):
        geo = abs(residue) * tail_rate ** (n_rows + 1) / (1 - tail_rate) * (2.0 - ch[b, 0])
        bound = max(bound, geo)

    # internal consistency: recovered decision masses reproduce the unknowns
    d_rec = alpha[:b] @ ch[:, 0] + beta[:b].sum(axis=1)
    if np.max(np.abs(d_rec - d)) > 1e-7:
        raise NumericalError(
            f"extracted decision masses disagree with the boundary solve by {np.max(np.abs(d_rec - d)):.2e}"
        )

    theta = np.zeros(a)
    if spec.delta == 0:
        dep0 = DepartureDistribution(alpha, beta, gamma, theta, engine="analytic")
        nc = tau_lambda(spec, dep0)
        theta = dormant_profile(spec, gamma, ctx.e) / nc.E_star
    return DepartureDistribution(
        alpha_plus=alpha,
        beta_plus=beta,
        gamma_plus=gamma,
        theta=theta,
        scale=float(total),
        tail_rate=tail_rate,
        tail_mass_bound=float(bound),
        engine="analytic",
    )


# ---------------------------------------------------------------------------
# normalization constants


def dormant_profile(spec: ModelSpec, gamma_plus: np.ndarray, e: np.ndarray | None = None) -> np.ndarray:
    """Expected dormant slots at each level ``n < a`` per completion epoch, times ``lam``.

    ``out[n] = sum_{m<=n} e[n,m] c[m]``: the probability that the dormant
    walk started by a vacation completion at level ``m`` visits level ``n``.
    """
    a = spec.a
    if spec.delta == 1:
        return np.zeros(a)
    e = e_table(spec.g, a - 1) if e is None else e
    c_low = gamma_plus[:a].sum(axis=1)
    return np.array([e[n, : n + 1] @ c_low[: n + 1] for n in range(a)])


def next_activity_mean(spec: ModelSpec, dep: DepartureDistribution, e: np.ndarray | None = None) -> float:
    """Mean length of the activity begun at a completion epoch (dormant time excluded)."""
    a, b, delta = spec.a, spec.b, spec.delta
    ch = chi_matrix(spec)
    e = e_table(spec.g, a - 1) if e is None else e
    g = spec.g.dense()
    S = np.array([spec.fes[r].mean() if r >= a else 0.0 for r in range(b + 1)])
    SO = np.array([spec.sos[y].mean() if y >= 1 else 0.0 for y in range(b + 1)])
    V = np.array([spec.vacation[k].mean() for k in range(a)])
    ap, bp, gp = dep.alpha_plus, dep.beta_plus, dep.gamma_plus
    n_rows = ap.shape[0]
    d = ap @ ch[:, 0] + bp.sum(axis=1)
    c = gp.sum(axis=1)
    sos_after = ap @ (ch @ SO)
    lam_ = float(sos_after.sum())
    for n in range(n_rows):
        if n < a:
            lam_ += (d[n] + delta * c[n]) * V[n]
            if delta == 0 and c[n] > 0:
                lift = 0.0
                for j in range(n, a):
                    for i in range(1, g.size):
                        if g[i] > 0 and j + i >= a:
                            lift += e[j, n] * g[i] * S[min(j + i, b)]
                lam_ += c[n] * lift
        else:
            lam_ += (d[n] + c[n]) * S[min(n, b)]
    return lam_


def tau_lambda(spec: ModelSpec, dep: DepartureDistribution) -> NormalizationConstants:
    """Completion rate ``tau``, mean next-activity length ``Lambda`` and ``E*``."""
    e = e_table(spec.g, spec.a - 1)
    Lam = next_activity_mean(spec, dep, e)
    dorm = dormant_profile(spec, dep.gamma_plus, e).sum()
    E_star = spec.lam * Lam + (1 - spec.delta) * dorm
    if not (Lam > 0 and E_star > 0):
        raise NumericalError(f"non-positive normalization constants (Lambda={Lam}, E*={E_star})")
    tau = spec.lam / E_star
    return NormalizationConstants(tau=tau, Lambda=Lam, E_star=E_star)


def solve_departure(spec: ModelSpec, n_max: int | None = None) -> DepartureDistribution:
    """Convenience wrapper: boundary solve followed by extraction."""
    ctx = _Context.build(spec)
    return extract_departure(spec, solve_boundary(spec, _ctx=ctx), n_max=n_max, _ctx=ctx)
