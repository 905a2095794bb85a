from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest

from decaylab.eisenstein import (
    CharDescriptor,
    EisensteinParams,
    dirichlet_L,
    kronecker,
    q_L,
    sigma_s_chi,
    split_m0_f,
)
from decaylab.errors import BadDiscriminant
from decaylab.qlattice import QuadLattice

E8 = [
    [2, -1, 0, 0, 0, 0, 0, 0],
    [-1, 2, -1, 0, 0, 0, 0, 0],
    [0, -1, 2, -1, 0, 0, 0, -1],
    [0, 0, -1, 2, -1, 0, 0, 0],
    [0, 0, 0, -1, 2, -1, 0, 0],
    [0, 0, 0, 0, -1, 2, -1, 0],
    [0, 0, 0, 0, 0, -1, 2, 0],
    [0, 0, -1, 0, 0, 0, 0, 2],
]


def _uu_plus(block: list[list[int]]) -> QuadLattice:
    n = 4 + len(block)
    g = [[0] * n for _ in range(n)]
    g[0][1] = g[1][0] = g[2][3] = g[3][2] = 1
    for i, row in enumerate(block):
        for j, x in enumerate(row):
            g[4 + i][4 + j] = x
    return QuadLattice(tuple(map(tuple, g)), "half")


def test_kronecker_small_table():
    assert [kronecker(-3, a) for a in range(1, 7)] == [1, -1, 0, 1, -1, 0]
    assert kronecker(5, 2) == -1
    with pytest.raises(BadDiscriminant):
        kronecker(3, 2)


def test_sigma_and_split():
    assert sigma_s_chi(6, None, 1) == 12
    assert split_m0_f(72, [3]) == (18, 2)


def test_zeta_and_L_enclosures():
    assert dirichlet_L(2, None, 1e-12).contains(mpmath.pi**2 / 6)
    # L(2, chi_{-4}) is Catalan's constant
    assert dirichlet_L(2, CharDescriptor(-4), 1e-10).contains(mpmath.catalan)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 6, 10])
def test_unimodular_lattice_gives_scalar_eisenstein_series(m):
    # U + U + E8 is even unimodular of signature (10, 2): the series is E_6 = 1 - 504 sum sigma_5(m) q^m
    v, _ = q_L(EisensteinParams(_uu_plus(E8), 10), m, 1e-12)
    assert v.contains(-504 * sigma_s_chi(m, None, 5))
    assert v.width <= 1e-10 * abs(v.lo)


def test_rank_mismatch_rejected():
    with pytest.raises(ValueError):
        EisensteinParams(_uu_plus(E8), 8)


def test_small_lattice_coefficients_are_nonpositive():
    A2 = [[2, 1], [1, 2]]
    P = EisensteinParams(_uu_plus(A2), 4)
    for m in range(1, 25):
        v, info = q_L(P, m, 1e-10)
        assert v.hi <= 0
        assert Fraction(info["densities"][3]) >= 0
