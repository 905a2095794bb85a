from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from decaylab import lineconfig as lc
from decaylab.errors import RelationViolated
from decaylab.ffield import make_field
from decaylab.lineconfig import INF, Line, LineConfig


def _cfg(pairs, p=3) -> LineConfig:
    return LineConfig(tuple(Line.from_valuations(a, b) for a, b in pairs), p)


def test_line_normalization_and_order():
    assert Line.from_valuations(3, 1) == Line(1, 3)
    assert Line(1, 1).diagonal and not Line(1, 2).diagonal
    assert Line(INF, 2).degenerate
    assert lc.lies_above(Line(2, 2), Line(1, 3))
    assert not lc.lies_above(Line(1, 3), Line(2, 2))
    assert lc.lies_above(Line(INF, 5), Line(9, 9))


def test_envelope_and_vertices():
    cfg = _cfg([(1, 5), (2, 2), (4, 0)])
    assert cfg.envelope(1) == 4
    assert lc.envelope_vertices(cfg, 1, 9) == [(Fraction(1), Fraction(4)), (Fraction(9), Fraction(4))]
    cfg = _cfg([(1, 5), (2, 2)])
    assert lc.envelope_vertices(cfg, 1, 9) == [(1, 4), (3, 8), (9, 14)]


def test_critical_points_and_law():
    cfg = _cfg([(1, 1), (2, 0)])
    cps = lc.critical_points(cfg, 2)
    assert [cp.r for cp in cps] == [0, 1, 2]
    # x = 1 lies on both lines; x = 3 and x = 9 only on the non-diagonal line y = 0 x + 2
    assert [cp.r for cp in lc.critical_point_law(cfg, 2)] == [1, 2]


def test_redundancy_statuses():
    cfg = _cfg([(1, 1), (3, 3), (1, INF)])
    rep = lc.redundancy(cfg, s=1)
    assert rep.status[1] == "redundant" and rep.status[2] == "redundant"
    assert rep.n == 1


def test_orthogonal_group_order_matches_enumeration():
    assert len(lc.isometry_group(1, 3)) == lc.orthogonal_group_order(1, 3)
    assert len(lc.isometry_group(2, 3)) == lc.orthogonal_group_order(2, 3)


def test_random_isometries_preserve_the_form(rng):
    for p in (3, 5):
        for n in (2, 3):
            assert lc.is_isometry(lc.random_isometry(rng, n, p), p)


def test_maximize_reaches_an_exhaustive_maximum(rng):
    fld = make_field(3, 1)
    for _ in range(8):
        coll = lc.random_collection(rng, fld, 2, vmax=3, tail=1, T=12)
        mx, log = lc.maximize(coll)
        assert lc.is_maximal_exhaustive(mx)
        assert lc.config_geq(mx.line_config().lines, coll.line_config().lines) or log


def test_maximize_preserves_Q(rng):
    fld = make_field(5, 2)
    coll = lc.random_collection(rng, fld, 3, vmax=3, tail=2)
    mx, _ = lc.maximize(coll)
    for r in range(3):
        assert lc.q_series(mx, r) == lc.q_series(coll, r)


def test_degenerate_collections_obey_the_law(rng):
    fld = make_field(3, 2)
    for s in (0, 1):
        coll = lc.random_degenerate_collection(rng, fld, 3, s, vmax=4, tail=2)
        assert lc.q_degenerate(coll, s)
        assert not lc.critical_point_law(coll.line_config(), s)


def test_borderline_space_of_maximal_collection_is_small(rng):
    fld = make_field(5, 2)
    for _ in range(10):
        mx, _ = lc.maximize(lc.random_collection(rng, fld, 3, diag_prob=0.8))
        vx, vy = mx.valuations()
        for d in {a for a, b in zip(vx, vy) if a == b and a != INF}:
            assert lc.borderline_space(mx, int(d)).dim <= 2


def test_collection_json_roundtrip(rng):
    coll = lc.random_collection(rng, make_field(3, 2), 2)
    assert lc.Collection.from_json(coll.to_json()).to_json() == coll.to_json()


def test_classify_and_chain_on_stratum_germ():
    rng = np.random.default_rng(3)
    coll, _ = lc.random_stratum_collection(rng, make_field(3, 2), 3, 1)
    label = lc.classify(lc.maximize(coll)[0], 1)
    assert label.a == 1 and label.a_k == 1 and label.tight
    assert label.n + label.r == 3
    dims = [lc.chain_description(label, r).dim_min for r in range(1, int(label.h_ak) + 1)]
    assert dims == sorted(dims, reverse=True)


def test_thick_relation_counterexample_with_repeated_lines():
    # maximal for Q (the valuation-2 leading space is anisotropic) yet the two-sided
    # thick bound fails because two pairs of lines coincide
    coll = lc.Collection.from_json({
        "field": {"p": 3, "k": 2}, "T": 9,
        "x": [{"4": [1, 1]}, {"2": [2, 1], "4": [2, 0]}, {"2": [0, 1], "4": [2, 2]}, {"4": [0, 2]}],
        "y": [{"1": [2, 2], "3": [1, 2], "4": [2, 0], "5": [2, 0], "6": [2, 0], "7": [2, 0], "8": [0, 2]},
              {"2": [1, 2], "3": [1, 1], "4": [1, 2], "5": [2, 0], "6": [1, 1], "7": [0, 1], "8": [2, 0]},
              {"2": [1, 0], "3": [2, 0], "4": [1, 2], "5": [2, 2], "6": [2, 0], "7": [1, 1], "8": [1, 2]},
              {"1": [0, 2], "2": [0, 1], "3": [1, 2], "4": [2, 0], "5": [1, 2], "6": [2, 2], "7": [2, 1], "8": [2, 0]}],
    })
    assert lc.q_series(coll, 0).is_zero()
    mx, log = lc.maximize(coll)
    assert not log
    with pytest.raises(RelationViolated, match="thick relation"):
        lc.classify(mx, 1)
