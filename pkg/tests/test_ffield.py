from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaylab.ffield import (
    fp_rank,
    frobenius,
    is_irreducible,
    least_irreducible,
    make_field,
    moore_det,
)

FIELDS = [(3, 3), (3, 2), (5, 2), (7, 1)]


def test_least_irreducible_is_lexicographically_first():
    f = least_irreducible(3, 2)
    assert is_irreducible(f, 3)
    # every monic quadratic earlier in index order factors
    for c0, c1 in itertools.product(range(3), repeat=2):
        g = [c0, c1, 1]
        if (c1, c0) < (f[1], f[0]):
            assert not is_irreducible(g, 3)


def test_reducible_modulus_rejected():
    with pytest.raises(ValueError):
        make_field(3, 2, [2, 0, 1])  # x^2 - 1


@pytest.mark.parametrize("p,k", FIELDS)
def test_multiplicative_group_is_cyclic_of_order_q_minus_1(p, k):
    F = make_field(p, k)
    units = [x for x in F.elements() if not x.is_zero()]
    assert len(units) == p**k - 1
    for x in units:
        assert x ** (p**k - 1) == F.one()
        assert x * x.inverse() == F.one()


@pytest.mark.parametrize("p,k", FIELDS)
def test_frobenius_is_additive_and_has_order_k(p, k):
    F = make_field(p, k)
    elems = list(F.elements())
    for x, y in zip(elems, reversed(elems)):
        assert frobenius(x + y, 1) == frobenius(x, 1) + frobenius(y, 1)
        assert x ** p == x.frobenius(1)
        assert x.frobenius(k) == x


def test_frobenius_fixed_points_are_prime_field():
    F = make_field(5, 2)
    fixed = [x for x in F.elements() if x.frobenius(1) == x]
    assert sorted(x.index() for x in fixed) == sorted(x.index() for x in F.prime_field())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=2))
def test_moore_det_vanishes_iff_fp_dependent(idx):
    F = make_field(3, 2)
    v = [F.from_index(i) for i in idx]
    assert (moore_det(v).is_zero()) == (fp_rank(v) < len(v))


def test_field_descriptor_roundtrip():
    F = make_field(3, 2)
    d = F.to_json()
    assert d["p"] == 3 and d["k"] == 2
    assert make_field(d["p"], d["k"], d["modulus"]) == F


def test_even_characteristic_rejected():
    with pytest.raises(ValueError):
        make_field(2, 3)
