from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaylab.errors import DegenerateForm
from decaylab.qlattice import (
    ModPForm,
    QuadLattice,
    build_L0,
    chi_classify,
    dual_index,
    enumerate_form_counts,
    form_from_upper,
    local_density,
    local_density_bruteforce,
    local_density_selfdual,
    local_density_unit,
    stable_exponent,
)

U = QuadLattice(((0, 1), (1, 0)), "half")


def test_hyperbolic_plane_density():
    assert local_density(3, U, 1) == Fraction(2, 3)
    assert local_density_bruteforce(3, U, 1, 1) == Fraction(2, 3)


def test_gram_validation():
    with pytest.raises(ValueError):
        QuadLattice(((1, 0), (0, 2)), "half")
    with pytest.raises(ValueError):
        QuadLattice(((2, 1), (0, 2)), "half")
    assert QuadLattice.from_json(U.to_json()) == U


def test_stable_exponent():
    assert stable_exponent(3, 1) == 1
    assert stable_exponent(3, 9) == 5
    assert stable_exponent(2, 1) == 3


def test_chi_of_hyperbolic_and_anisotropic_planes():
    assert chi_classify(ModPForm(3, ((0, 1), (1, 0)))) == 1
    assert chi_classify(ModPForm(3, ((1, 0), (0, 1)))) == -1  # -1 is a nonsquare mod 3
    assert chi_classify(ModPForm(5, ((1, 0), (0, 1)))) == 1
    with pytest.raises(DegenerateForm):
        chi_classify(ModPForm(3, ((1, 0), (0, 0))))


@pytest.mark.parametrize("p,n", [(3, 1), (3, 2), (5, 2)])
def test_closed_form_matches_enumeration(p, n):
    uppers, dets, counts = enumerate_form_counts(p, n)
    for up, det, cnt in zip(uppers, dets, counts):
        if det % p == 0:
            continue
        f = form_from_upper(p, n, [int(u) for u in up])
        for M in range(1, p):
            assert local_density_selfdual(f, M) == Fraction(int(cnt[M])) * Fraction(p) ** (1 - n)


def test_enumeration_counts_sum_to_all_vectors():
    _, _, counts = enumerate_form_counts(3, 3)
    assert np.all(counts.sum(axis=1) == 27)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([3, 5]), st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(1, 12))
def test_hensel_matches_bruteforce(p, a, b, c, m):
    L = QuadLattice(((2 * a, b), (b, 2 * c)), "half")
    if 4 * a * c - b * b == 0:
        return
    e = stable_exponent(p, m)
    assert local_density(p, L, m, e) == local_density_bruteforce(p, L, m, e)


def test_unit_density_matches_bruteforce_on_mixed_lattice():
    L = QuadLattice(((2, 1, 0), (1, 2, 0), (0, 0, 6)), "half")
    for M in (1, 2):
        assert local_density_unit(3, L, M) == local_density_bruteforce(3, L, M, 3)


def test_L0_and_dual_index():
    L0 = build_L0(5, 2)
    assert L0.gram == ((10, 0), (0, -20))
    assert dual_index(L0, 5) == 25
    assert dual_index(U, 5) == 1
