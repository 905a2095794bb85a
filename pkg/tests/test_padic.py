from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaylab.ffield import make_field
from decaylab.padic import DEFAULT_N, DEFAULT_T, TSeries, lambda_element, teichmuller, witt_ring


def test_default_precisions():
    assert (DEFAULT_N, DEFAULT_T) == (8, 64)


@pytest.mark.parametrize("p", [3, 5])
def test_teichmuller_is_multiplicative_and_sigma_is_pth_power(p):
    F = make_field(p, 2)
    xs = list(F.elements())[1:7]
    for x in xs:
        for y in xs:
            assert teichmuller(x * y, 6) == teichmuller(x, 6) * teichmuller(y, 6)
        tx = teichmuller(x, 6)
        assert tx.sigma(1) == tx ** p


@pytest.mark.parametrize("p", [3, 5, 7])
def test_lambda_anti_invariant(p):
    lam = lambda_element(make_field(p, 2), 5)
    assert lam.sigma(1) == -lam
    assert lam.valuation() == 0


def test_witt_inverse_and_valuation():
    R = witt_ring(make_field(3, 2), 6)
    x = R.elem((4, 1))
    assert x * x.inverse() == R.one()
    assert R.elem(9).valuation() == 2
    assert R.elem(0).valuation() is None


def test_series_with_short_coefficient_is_zero_padded():
    R = witt_ring(make_field(3, 2), 1)
    s = TSeries.from_terms(R, 5, {2: [1]})
    assert s.to_sparse() == TSeries.from_terms(R, 5, {2: 1}).to_sparse()
    with pytest.raises(ValueError):
        TSeries.from_terms(R, 5, {1: [1, 0, 0]})


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.integers(0, 9), st.integers(1, 8), min_size=1, max_size=4),
       st.dictionaries(st.integers(0, 9), st.integers(1, 8), min_size=1, max_size=4))
def test_series_valuation_is_additive_over_a_field(a, b):
    R = witt_ring(make_field(3, 2), 1)
    f = TSeries.from_terms(R, 30, {k: [v % 3, v // 3] for k, v in a.items()})
    g = TSeries.from_terms(R, 30, {k: [v % 3, v // 3] for k, v in b.items()})
    assert (f * g).valuation() == f.valuation() + g.valuation()


def test_twist_over_residue_field_is_pth_power():
    R = witt_ring(make_field(3, 2), 1)
    f = TSeries.from_terms(R, 40, {1: [0, 1], 3: [2, 1]})
    assert f.twist(1) == f * f * f
