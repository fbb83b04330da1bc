import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bulkvac.arbitrary import _renewal

from conftest import common_rows


def forward_renewal(source, g):
    x = np.zeros_like(source)
    for n in range(source.size):
        x[n] = source[n] + sum(g[i] * x[n - i] for i in range(1, min(n, g.size - 1) + 1))
    return x


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4),
    st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=25),
)
def test_renewal_matches_forward_recursion_for_zero_sum_sources(weights, raw):
    g = np.concatenate([[0.0], np.array(weights) / sum(weights)])
    src = np.array(raw + [-sum(raw)])
    np.testing.assert_allclose(_renewal(src, g), forward_renewal(src, g), atol=1e-10)


def test_arbitrary_matches_oracle_on_toy(toy_pair):
    sol, (_, arb_o) = toy_pair
    np.testing.assert_allclose(sol.arbitrary.theta, arb_o.theta, atol=1e-8)
    for name in ("alpha", "beta", "gamma"):
        x, y = common_rows(getattr(sol.arbitrary, name), getattr(arb_o, name))
        np.testing.assert_allclose(x, y, atol=1e-8)


def test_arbitrary_normalization(ref_solution):
    arb = ref_solution.arbitrary
    assert arb.total() == pytest.approx(1.0, abs=1e-8 + arb.tail_mass_bound)
    assert np.all(arb.alpha >= 0) and np.all(arb.beta >= 0) and np.all(arb.gamma >= 0)


def test_multiple_policy_has_no_dormant_mass(ref_multiple):
    assert np.all(ref_multiple.arbitrary.theta == 0)


def test_vacation_type_cannot_exceed_queue(ref_solution):
    gamma = ref_solution.arbitrary.gamma
    for k in range(gamma.shape[1]):
        assert np.all(gamma[:k, k] == 0)


def test_unused_batch_columns_are_zero(ref_solution):
    a = ref_solution.spec.a
    assert np.all(ref_solution.arbitrary.alpha[:, :a] == 0)
    assert np.all(ref_solution.arbitrary.beta[:, 0] == 0)
