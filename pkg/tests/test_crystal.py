from __future__ import annotations

import numpy as np
import pytest

from decaylab import crystal
from decaylab.errors import AllInfinite, FieldTooSmall
from decaylab.ffield import make_field
from decaylab.padic import witt_ring


def _case1_germ(T: int = 80) -> tuple[crystal.SuperspecialModel, crystal.CurveGerm]:
    F = make_field(3, 2)
    model = crystal.SuperspecialModel(F, 2, N=4)
    al = F.gen().coeffs
    two_al = (F.gen() * F(2)).coeffs
    half = (-F(2).inverse()).coeffs
    germ = crystal.CurveGerm.from_terms(model, T, [{1: al}, {2: two_al}], [{5: 1}, {4: half}])
    return model, germ


def _unit(model: crystal.SuperspecialModel, label: str, c: int = 1) -> crystal.SpecialVector:
    coords = [0] * model.rank
    coords[model.basis_labels().index(label)] = c
    return crystal.SpecialVector(tuple(coords))


def test_model_basics():
    model = crystal.SuperspecialModel(make_field(5, 2), 3, N=3)
    assert model.rank == 8
    assert model.basis_labels() == ["e'", "f'", "e1", "e2", "e3", "f1", "f2", "f3"]
    assert model.change_of_basis_roundtrip()
    with pytest.raises(FieldTooSmall):
        crystal.SuperspecialModel(make_field(5, 1), 2, N=3)


def test_a_sequence():
    assert crystal.a_sequence([None, 8, 14], 3) == [1]
    assert crystal.a_sequence([None, 9, 4, 4], 4) == [1, 2, 3]
    with pytest.raises(AllInfinite):
        crystal.a_sequence([None, None], 2)


def test_h_values_of_explicit_germ():
    _, germ = _case1_germ()
    assert germ.h_values(2) == [None, 8, 14]


def test_teichmuller_digits_reassemble():
    p, K = 5, 4
    ring = witt_ring(make_field(p, 1), K)
    for value in (0, 1, 7, 123, 624):
        total = ring.zero()
        for k, a in enumerate(crystal.teichmuller_digits(value, p, K)):
            if a:
                total = total + ring.elem(ring.teich_coords(ring.field(a))) * ring.elem(p**k)
        assert total == ring.elem(value)


@pytest.mark.parametrize("p", [3, 5])
def test_F_infty_closed_matches_product(p, rng):
    model = crystal.SuperspecialModel(make_field(p, 2), 2, N=3)
    W = crystal.random_paired_germ(rng, model, 20).lift(3)
    prod = crystal.F_infty_product(model, W, 2)
    closed = crystal.F_infty_closed(model, W, 2)
    for n in (1, 2):
        assert crystal.assemble_blocks(closed[n - 1]) == prod[n]


def test_U_closed_matches_recursion(rng):
    model = crystal.SuperspecialModel(make_field(3, 2), 2, N=3)
    view = crystal.GermView.from_wgerm(crystal.random_paired_germ(rng, model, 24).lift(3))
    for n in (1, 2, 3):
        assert crystal.U_closed(model, view, n) == crystal.U_recursive(model, view, n)


def test_decay_rate_matches_definitional_route(rng):
    model = crystal.SuperspecialModel(make_field(3, 2), 2, N=4)
    germ = crystal.random_paired_germ(rng, model, 24)
    W = germ.lift(4)
    for label in ("e1", "f2", "e'"):
        v = _unit(model, label)
        for n in (1, 2):
            assert crystal.decay_rate(model, germ, v, n) == crystal.decay_rate_definitional(model, W, v, n)


def test_strict_decay_order_on_explicit_germ():
    model, germ = _case1_germ()
    first = {lab: crystal.decay_profile(model, germ, _unit(model, lab), 1).d[1] for lab in model.basis_labels()}
    assert first == {"e1": 1, "e2": 2, "f2": 4, "f1": 5, "e'": 8, "f'": 8}


def test_profiles_are_nondecreasing(rng):
    model = crystal.SuperspecialModel(make_field(3, 2), 2, N=4)
    germ = crystal.random_germ(rng, model, 60, a=1)
    for _ in range(4):
        coords = tuple(int(c) for c in rng.integers(-3, 4, size=model.rank))
        if not any(c % 3 for c in coords):
            continue
        assert crystal.decay_profile(model, germ, crystal.SpecialVector(coords), 3).is_nondecreasing()


@pytest.mark.parametrize("m", [2, 3])
def test_newton_vanishing(m):
    model = crystal.SuperspecialModel(make_field(3, 2), m, N=2)
    germ = crystal.random_germ(np.random.default_rng(m), model, 40, a=m)
    assert crystal.newton_vanishing_check(model, germ, 10)["pass"]
