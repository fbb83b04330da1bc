import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bulkvac import dists
from bulkvac.errors import ParameterError
from bulkvac.gf import arrivals_during, e_table, f_series, model_series, slot_arrival_pmf, trim
from bulkvac.model import chi_matrix

from conftest import toy_spec


def brute_arrivals(duration, lam, g, length):
    """Sum over slot counts l of P(S=l) times the l-fold convolution of the slot pmf."""
    slot = slot_arrival_pmf(lam, g).dense()
    out = np.zeros(length)
    conv = np.array([1.0])
    for l in range(0, duration.support_end + 1):
        if l >= 1:
            conv = np.convolve(conv, slot)
        w = duration.pmf(l)
        if w:
            n = min(length, conv.size)
            out[:n] += w * conv[:n]
    return out


@pytest.mark.parametrize(
    "duration",
    [dists.point_mass(3), dists.build_geometric(0.6, 1e-14), dists.explicit(2, [0.2, 0.5, 0.3])],
    ids=["det3", "geo", "explicit"],
)
@pytest.mark.parametrize("g", [dists.point_mass(1), dists.explicit(1, [0.4, 0.3, 0.3])], ids=["unit", "three"])
def test_arrivals_during_matches_brute_force(duration, g):
    series = arrivals_during(duration, 0.35, g)
    ref = brute_arrivals(duration, 0.35, g, series.coeffs.size)
    np.testing.assert_allclose(series.coeffs, ref, atol=1e-15)
    assert series.mean() == pytest.approx(0.35 * g.mean() * duration.mean(), rel=1e-10)


def test_unit_group_deterministic_duration_is_binomial():
    series = arrivals_during(dists.point_mass(5), 0.3, dists.point_mass(1))
    np.testing.assert_allclose(series.coeffs, stats.binom.pmf(np.arange(6), 5, 0.3), atol=1e-15)


def _walk_visits(g, n_max):
    """P(walk from i ever sits at n), by forward propagation of visit probabilities."""
    gd = g.dense(n_max + 2)
    e = np.zeros((n_max + 1, n_max + 1))
    for i in range(n_max + 1):
        visit = np.zeros(n_max + 1)
        visit[i] = 1.0
        for m in range(i, n_max + 1):
            for j in range(1, n_max + 1 - m):
                visit[m + j] += visit[m] * gd[j]
        e[:, i] = visit
    return e


@pytest.mark.parametrize("g", [dists.point_mass(1), dists.explicit(1, [0.4, 0.3, 0.3]), dists.explicit(2, [0.5, 0.5])])
def test_e_table_matches_forward_propagation(g):
    np.testing.assert_allclose(e_table(g, 6), _walk_visits(g, 6), atol=1e-15)


def test_e_table_rejects_negative():
    with pytest.raises(ParameterError):
        e_table(dists.point_mass(1), -1)


def test_f_series_definition():
    spec = toy_spec()
    s = model_series(spec)
    ch = chi_matrix(spec)
    f = f_series(2, spec, s.T)  # batch a+1 = 3
    expected = ch[3, 1] * s.T[1].coeffs
    for y in (2, 3):
        expected = np.polynomial.polynomial.polyadd(expected, ch[3, y] * s.T[y].coeffs)
    np.testing.assert_allclose(f, expected, atol=1e-16)
    with pytest.raises(ParameterError):
        f_series(0, spec, s.T)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=8), st.integers(0, 4))
def test_trim_drops_only_trailing_zeros(coeffs, pad):
    arr = np.array(coeffs + [0.0] * pad)
    t = trim(arr)
    assert t.size >= 1
    assert np.all(arr[t.size :] == 0)
    np.testing.assert_array_equal(arr[: t.size], t)
