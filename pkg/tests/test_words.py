from __future__ import annotations

import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from decaylab import words
from decaylab.errors import MissingValuation
from decaylab.words import INF, ValuationContext, Word


def _ctx(vx=5) -> ValuationContext:
    return ValuationContext(3, 3, {0: INF, 1: 8, 2: 14}, vx)


def test_context_roundtrip_and_sequence():
    ctx = _ctx()
    assert ValuationContext.from_json(ctx.to_json()) == ctx
    assert ctx.a == 1 and ctx.a_k == 1 and ctx.h_ak == 8


def test_word_valuation_evaluated_from_the_right():
    ctx = _ctx()
    # Q_1 Q_1 x_v: 8 + p^2 (8 + p^2 * 5)
    assert words.nu(Word((1, 1), True), ctx) == 8 + 9 * (8 + 9 * 5)
    with pytest.raises(MissingValuation):
        words.nu(Word((1,), True), ctx.with_vx(None))


def test_explicit_minimal_words():
    W, lo = words.minimal_words(3, _ctx(), "L1")
    assert [str(w) for w in W] == ["Q1Q1x"] and lo == 485
    W, lo = words.minimal_words(2, _ctx(), "L0")
    assert lo == 80


def test_interval_needs_a_Q_letter_for_L1():
    with pytest.raises(ValueError):
        words.interval(1, _ctx(), "L1")


def test_word_term_roundtrip():
    w = Word((2, 1, 3), True)
    assert words.term_to_word(words.word_to_term(w)) == w


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([3, 5]), st.integers(2, 4), st.integers(1, 3))
def test_minimal_words_match_brute_force(seed, p, m, r):
    ctx = words.random_context(random.Random(seed), p, m)
    assume(ctx.vx is not None)
    for cls in ("L0", "L1"):
        c = ctx if cls == "L1" else ctx.with_vx(None)
        assert words.minimal_words(r, c, cls) == words.minimal_words_brute(r, c, cls)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([3, 5]), st.integers(2, 4))
def test_minimal_words_satisfy_structural_conditions(seed, p, m):
    ctx = words.random_context(random.Random(seed), p, m)
    assume(ctx.vx is not None)
    for r in range(1, 5):
        W, _ = words.minimal_words(r, ctx, "L1")
        for w in W:
            conds = words.wordtruncate_conditions(words.word_to_term(w), len(w.letters) + 1, ctx.a_seq)
            assert all(conds.values()), (str(w), conds)


def test_vector_class():
    assert words.vector_class((1, 0, 0, 0), 3) == "L0"
    assert words.vector_class((1, 0, 3, 0), 3) == "L0"
    assert words.vector_class((0, 0, 1, 0), 3) == "L1"
