"""Words in the letters Q_a..Q_{m-1}, their valuations, and minimal words.

A word Q_{u_1} ... Q_{u_r} (optionally followed by the terminal x_v) has
valuation nu(Q_i W) = h_i + p^{i+1} nu(W), nu(Q_i) = h_i, nu(x_v) = vx.
Since nu is increasing in the valuation of the suffix, the minimal words of
length r are Q_i times the minimal words of length r - 1 for each i that
attains the minimum, which gives a dynamic program over suffix length.

Infinite valuations are ``math.inf`` and absorb under + and *.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

from .errors import MissingValuation, NotRapid, ResourceLimit

__all__ = [
    "INF",
    "Word",
    "ValuationContext",
    "nu",
    "minimal_words",
    "minimal_words_brute",
    "interval",
    "word_to_term",
    "term_to_word",
    "term_valuation",
    "minimal_terms_brute",
    "wordtruncate_conditions",
    "rapid_decay_predicate",
    "vector_class",
    "random_context",
]

INF = math.inf
VClass = Literal["L0", "L1"]
WORD_CAP = 200_000
R_CAP = 64


@dataclass(frozen=True)
class Word:
    """Letters are Q-indices; ``terminal`` marks a trailing x_v."""

    letters: tuple[int, ...]
    terminal: bool = False

    @property
    def length(self) -> int:
        return len(self.letters) + (1 if self.terminal else 0)

    def first(self) -> int:
        if not self.letters:
            raise ValueError("word has no Q letter")
        return self.letters[0]

    def __str__(self) -> str:
        s = "".join(f"Q{u}" for u in self.letters)
        return s + ("x" if self.terminal else "")


@dataclass
class ValuationContext:
    """h_i for 0 <= i < m (INF allowed), the prime p, and optionally v_t(x_v)."""

    p: int
    m: int
    h: dict[int, float]
    vx: float | None = None
    a_seq: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        self.h = {int(i): (INF if v is None else v) for i, v in self.h.items()}
        # curves live in the non-ordinary locus, where Q_0 vanishes identically
        self.h.setdefault(0, INF)
        if self.h[0] != INF:
            raise ValueError("h_0 must be infinite (Q_0 = 0 on the curve)")
        derived = self._derive_a_seq()
        if self.a_seq and tuple(self.a_seq) != derived:
            raise ValueError(f"a-sequence {self.a_seq} inconsistent with h (expected {derived})")
        self.a_seq = derived

    def _derive_a_seq(self) -> tuple[int, ...]:
        finite = [i for i in range(self.m) if self.h.get(i, INF) != INF]
        if not finite:
            return ()
        seq = [finite[0]]
        for j in range(finite[0] + 1, self.m):
            hj = self.h.get(j, INF)
            if hj != INF and hj <= self.h[seq[-1]]:
                seq.append(j)
        return tuple(seq)

    @property
    def a(self) -> int:
        if not self.a_seq:
            raise MissingValuation("all h_i are infinite")
        return self.a_seq[0]

    @property
    def a_k(self) -> int:
        return self.a_seq[-1]

    @property
    def h_ak(self) -> float:
        return self.h[self.a_k]

    def letters(self) -> list[int]:
        return list(range(self.a, self.m))

    def hval(self, i: int) -> float:
        if i >= self.m or i < 0:
            return INF
        if i not in self.h:
            raise MissingValuation(f"h_{i} not provided")
        return self.h[i]

    def with_vx(self, vx: float | None) -> "ValuationContext":
        return ValuationContext(self.p, self.m, dict(self.h), vx)

    def to_json(self) -> dict:
        return {"p": self.p, "m": self.m, "vx": _js(self.vx),
                "h": {str(i): _js(v) for i, v in sorted(self.h.items())}}

    @classmethod
    def from_json(cls, data: dict) -> "ValuationContext":
        h = {int(k): (INF if v in (None, "inf") else int(v)) for k, v in data["h"].items()}
        vx = data.get("vx")
        vx = INF if vx == "inf" else vx
        return cls(int(data["p"]), int(data["m"]), h, vx)


def _js(v):
    if v is None:
        return None
    return "inf" if v == INF else int(v)


def nu(w: Word, ctx: ValuationContext) -> float:
    """Valuation of a word, evaluated from the right."""
    if w.terminal:
        if ctx.vx is None:
            raise MissingValuation("word ends in x_v but vx is not set")
        acc = ctx.vx
    else:
        acc = 0
    for u in reversed(w.letters):
        hu = ctx.hval(u)
        acc = INF if (hu == INF or acc == INF) else hu + ctx.p ** (u + 1) * acc
    return acc


def _base(ctx: ValuationContext, v_class: VClass) -> tuple[int, float, bool]:
    """Number of Q letters for length r is r - offset; base valuation; terminal."""
    if v_class == "L1":
        if ctx.vx is None:
            raise MissingValuation("L1 words need vx")
        return 1, ctx.vx, True
    if v_class == "L0":
        return 0, 0, False
    raise ValueError(f"unknown class {v_class!r}")


def minimal_words(r: int, ctx: ValuationContext, v_class: VClass) -> tuple[set[Word], float]:
    """Minimal words of I_r (L0) or I_r(v) (L1) together with nu_r^min."""
    if r < 1:
        raise ValueError("r must be positive")
    if r > R_CAP:
        raise ResourceLimit(f"r={r} exceeds the cap {R_CAP}")
    offset, base, terminal = _base(ctx, v_class)
    nq = r - offset
    letters = ctx.letters()
    # suffixes of length L: (min value, set of letter tuples)
    best_val = base
    best: list[tuple[int, ...]] = [()]
    for _ in range(nq):
        cand = []
        for i in letters:
            hi = ctx.hval(i)
            val = INF if (hi == INF or best_val == INF) else hi + ctx.p ** (i + 1) * best_val
            cand.append((val, i))
        new_val = min(v for v, _ in cand)
        heads = [i for v, i in cand if v == new_val]
        if len(heads) * len(best) > WORD_CAP:
            raise ResourceLimit("minimal word set too large")
        best = [(i,) + s for i in heads for s in best]
        best_val = new_val
    return {Word(s, terminal) for s in best}, best_val


def minimal_words_brute(r: int, ctx: ValuationContext, v_class: VClass) -> tuple[set[Word], float]:
    """Exhaustive enumeration, kept as an oracle for small r."""
    offset, _, terminal = _base(ctx, v_class)
    nq = r - offset
    letters = ctx.letters()
    if len(letters) ** nq > WORD_CAP:
        raise ResourceLimit("brute-force word enumeration too large")
    words = [Word(s, terminal) for s in itertools.product(letters, repeat=nq)]
    vals = {w: nu(w, ctx) for w in words}
    lo = min(vals.values())
    return {w for w, v in vals.items() if v == lo}, lo


def _check_first_order(ctx: ValuationContext, v_class: VClass) -> None:
    if v_class == "L1":
        if ctx.vx is None or not ctx.vx < ctx.h_ak:
            raise NotRapid(f"L1 class needs vx < h_(a_k) = {ctx.h_ak}, got {ctx.vx}")
    elif ctx.vx is not None and ctx.vx != ctx.h_ak:
        raise NotRapid(f"L0 class needs vx = h_(a_k) = {ctx.h_ak}, got {ctx.vx}")


def interval(r: int, ctx: ValuationContext, v_class: VClass) -> tuple[int, int]:
    """I_r(v) = [min, max] of the first letter over the minimal words of length r.

    For the L1 class a word of length r carries r - 1 letters before x_v, so
    r must be at least 2.
    """
    _check_first_order(ctx, v_class)
    if v_class == "L1" and r < 2:
        raise ValueError("an L1 word of length 1 has no Q letter")
    words, _ = minimal_words(r, ctx, v_class)
    firsts = [w.first() for w in words]
    return min(firsts), max(firsts)


def word_to_term(w: Word) -> tuple[int, ...]:
    """Index chain i_1 < ... < i_{2r}: i_1 = 0, unit gaps between pairs."""
    chain: list[int] = []
    pos = 0
    for k, u in enumerate(w.letters):
        if k:
            pos += 1
        chain.extend([pos, pos + u])
        pos += u
    return tuple(chain)


def term_to_word(chain: Sequence[int], terminal: bool = True) -> Word:
    """Inverse of word_to_term on chains of that shape."""
    if len(chain) % 2:
        raise ValueError("chain length must be even")
    letters = tuple(chain[2 * k + 1] - chain[2 * k] for k in range(len(chain) // 2))
    return Word(letters, terminal)


def term_valuation(chain: Sequence[int], ctx: ValuationContext, terminal: bool = True) -> float:
    """sum_k p^{i_{2k-1}} h_{i_{2k} - i_{2k-1}} + p^{1 + i_{2r}} vx."""
    total: float = 0
    for k in range(len(chain) // 2):
        h = ctx.hval(chain[2 * k + 1] - chain[2 * k])
        if h == INF:
            return INF
        total += ctx.p ** chain[2 * k] * h
    if terminal:
        if ctx.vx is None:
            raise MissingValuation("term carries x_v but vx is not set")
        if ctx.vx == INF:
            return INF
        last = chain[-1] if chain else -1
        total += ctx.p ** (1 + last) * ctx.vx
    return total


def minimal_terms_brute(n: int, ctx: ValuationContext, max_index: int | None = None,
                        extra_pairs: int = 1) -> tuple[list[tuple[int, ...]], float]:
    """Minimal terms Q_{i_1<...<i_{2r}} x_v^{(1+i_{2r})} with r >= n - 1 and i_1 even.

    Searches r in [n-1, n-1+extra_pairs] and indices up to ``max_index``.
    """
    if max_index is None:
        max_index = n * ctx.m + n
    best: float = INF
    found: list[tuple[int, ...]] = []
    for r in range(max(n - 1, 0), n + extra_pairs):
        for chain in itertools.combinations(range(max_index + 1), 2 * r):
            if chain and chain[0] % 2:
                continue
            val = term_valuation(chain, ctx, terminal=True)
            if val < best:
                best, found = val, [chain]
            elif val == best and val != INF:
                found.append(chain)
    return found, best


def wordtruncate_conditions(chain: Sequence[int], n: int, a_seq: Sequence[int]) -> dict[str, bool]:
    """The three structural conditions on a minimal term."""
    r = len(chain) // 2
    gaps = [chain[2 * k] - chain[2 * k - 1] for k in range(1, r)]
    letters = [chain[2 * k + 1] - chain[2 * k] for k in range(r)]
    return {
        "length_and_start": r == n - 1 and (r == 0 or chain[0] == 0),
        "unit_gaps": all(g == 1 for g in gaps),
        "letters_in_a_sequence": all(u in set(a_seq) for u in letters),
    }


def vector_class(coords: Sequence[int], p: int) -> VClass:
    """L0 when v mod p lies in span(e', f'); otherwise L1.

    A vector whose reduction meets both parts is treated as L1 since its
    first-order decay is governed by the L1 component.
    """
    if all(c % p == 0 for c in coords[2:]):
        return "L0"
    return "L1"


def rapid_decay_predicate(profile, ctx: ValuationContext, r: int, v_class: VClass | None = None) -> bool:
    """True iff the profile decays rapidly to order r.

    ``profile`` is a crystal.DecayProfile.  A rate reported as None (beyond
    the truncation) counts as infinite.
    """
    if v_class is None:
        v_class = vector_class(profile.vector.coords, ctx.p)
    d = {k: (INF if v is None else v) for k, v in profile.d.items()}
    if r not in d:
        raise ValueError(f"profile has no d_{r}")
    if v_class == "L1":
        vx = INF if profile.x_v_val is None else profile.x_v_val
        if not vx < ctx.h_ak:
            return False
        _, lo = minimal_words(r, ctx.with_vx(vx), "L1")
        return d[r] == lo
    _, lo = minimal_words(r, ctx.with_vx(None), "L0")
    return d[r] == lo


def random_context(rng: random.Random, p: int, m: int, a: int | None = None, hmax: int = 40,
                   inf_prob: float = 0.1, vx: int | None = None) -> ValuationContext:
    """Random h with h_i = INF below a; vx drawn below h_(a_k) when not given."""
    if m < 2:
        raise ValueError("need m >= 2 for a nonvanishing Q_a with a >= 1")
    if a is None:
        a = rng.randrange(1, m)
    h: dict[int, float] = {}
    for i in range(m):
        if i < a:
            h[i] = INF
        elif i == a:
            h[i] = rng.randint(1, hmax)
        else:
            h[i] = INF if rng.random() < inf_prob else rng.randint(1, hmax)
    ctx = ValuationContext(p, m, h)
    if vx is None and ctx.h_ak > 1:
        vx = rng.randint(1, int(ctx.h_ak) - 1)
    return ctx.with_vx(vx)
