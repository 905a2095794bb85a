from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaylab import lineconfig as lc
from decaylab import series
from decaylab.errors import DecayLabError, HypothesisViolated, RelationViolated
from decaylab.ffield import make_field
from decaylab.series import CaseParams


def test_H_sequence():
    assert series.H_sequence(5, 1, 3, 0) == 0
    assert series.H_sequence(5, 1, 3, 1) == 5
    assert series.H_sequence(5, 1, 3, 2) == 50
    for j in range(1, 5):
        assert series.H_sequence(7, 2, 5, j + 1) - series.H_sequence(7, 2, 5, j) == 7 * 5 ** (3 * j)


def test_D0_at_the_thin_boundary():
    prm = CaseParams(3, 1, 1, 2, 2, (1, 2), (3, 2), 6, 1)
    assert series.D0(prm) == 6
    assert series.d0_lemma(prm)["slack"] == 0
    flat = CaseParams(3, 2, 2, 3, 3, (2, 2, 2), (20, 20, 20), 40, 0)
    assert series.D0(flat) == 20 + 9 * 2


def test_case_params_validation():
    with pytest.raises(RelationViolated):
        CaseParams(3, 1, 1, 2, 2, (1, 2), (3, 3), 6, 1)  # thin gap must be p^0 (c_2 - c_1)
    with pytest.raises(RelationViolated):
        CaseParams(3, 1, 1, 2, 2, (1, 2), (3, 2), 5, 1)  # h below p c_1 + d_1
    prm = CaseParams(3, 1, 1, 2, 2, (1, 2), (3, 2), 6, 1)
    assert CaseParams.from_json(prm.to_json()) == prm


@pytest.mark.parametrize("p", [3, 5, 7])
def test_toy_chain_tables_and_sum(p):
    d = 2
    prm = series.toy_params(p, d)
    chain = series.aux_chain(prm, 1, periods=4)
    table = series.toy_tables(p, d, prm.h_ak, 4)
    got = [(e.lo, e.hi, e.density, e.cov_exp) for e in chain.entries]
    assert got[: len(table)] == table[: len(got)]
    assert chain.S() == 1 == series.toy_S2(p, d, prm.h_ak)


def test_toy_sum_below_one_away_from_the_extreme():
    assert series.toy_S2(3, 2, 11) < 1


def test_thick_border2_closed_form_equals_factored_form():
    for p in (3, 5):
        for m in range(2, 7):
            for n in range(2, m + 1):
                for a in range(1, n):
                    val = series.closed_form_border2(p, a, n, m)
                    assert val == series._factored_border2(p, a, n, m)
                    assert (val == 1) if n == a + 1 else (val < 1)


def test_case1_examples():
    res = series.case1_bound(3, 1, 3, 4)
    assert res["holds"] and res["margin"] == 2 and res["ratio"] == Fraction(35, 39)
    with pytest.raises(HypothesisViolated):
        series.case1_bound(3, 2, 3, 4)
    margins = [series.case1_bound(3, 1, n, 2 * n)["margin"] for n in range(3, 7)]
    assert margins == sorted(margins)


def test_loose_total_for_p3():
    rng = np.random.default_rng(5)
    prm = series.random_case_params(rng, 3, 4, 1, thin=True, tight=False)
    res = series.loose_bound(prm, 1)
    assert res["certificate"]["passed"]
    assert res["total"] <= Fraction(1) / (1 + Fraction(3) ** (-(prm.m + 1)))


def test_borderline1_small_case_bound():
    prm = series.random_case_params(np.random.default_rng(1), 3, 2, 1, thin=True)
    assert (prm.a, prm.n, prm.m, prm.bd) == (1, 2, 2, 1)
    res = series.S2_bound(prm, 1)
    assert res["certificate"]["passed"] and res["S"] < 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5]), st.integers(0, 2), st.booleans())
def test_chain_route_equals_closed_route(seed, p, bd, thin):
    rng = np.random.default_rng(seed)
    try:
        prm = series.random_case_params(rng, p, int(rng.integers(3, 6)), bd, thin)
    except DecayLabError:
        return
    M = int(rng.integers(1, p))
    res = series.S2_bound(prm, M)
    assert series.aux_chain(prm, M).S() == res["S"]
    assert res["certificate"]["passed"]
    series.d0_lemma(prm)


def test_chain_contains_decaying_lattice_for_small_r():
    rng = np.random.default_rng(0)
    seen = {True: 0, False: 0}
    for _ in range(60):
        m = int(rng.integers(2, 5))
        try:
            coll, _ = lc.random_stratum_collection(rng, make_field(3, 2), m, 1)
            label = lc.classify(lc.maximize(coll)[0], 1)
            chain = series.aux_chain(CaseParams.from_label(label), 1)
        except DecayLabError:
            continue
        for r in range(1, label.c[-1] + 1):
            desc = lc.chain_description(label, r)
            dim = chain.at(r).mod_p_dim
            equal_expected = all(label.c_all[j] >= r for j in range(label.n, m))
            assert desc.dim_max <= dim
            assert (desc.dim_max == dim) == equal_expected
            seen[equal_expected] += 1
    assert seen[True] and seen[False]
