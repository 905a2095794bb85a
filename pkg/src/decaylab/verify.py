"""Property suites behind ``decaylab verify``.

Each suite draws its cases from a seeded generator and returns one row per
property: how many cases ran and which failed.  The counts are modest so
the whole run stays interactive; the test suite runs the full-size checks.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import crystal, lineconfig, qlattice, series, words
from .errors import DecayLabError
from .ffield import make_field

__all__ = ["Row", "SUITES", "run_suites"]


@dataclass
class Row:
    suite: str
    prop: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0  # wall time of the whole suite

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"suite": self.suite, "property": self.prop, "cases": self.cases,
                "failures": len(self.failures), "examples": self.failures[:3], "seconds": round(self.seconds, 2)}


class _Rec:
    def __init__(self, suite: str) -> None:
        self.suite = suite
        self.rows: dict[str, Row] = {}
        self._t = time.perf_counter()

    def check(self, prop: str, ok: bool, detail: str = "") -> None:
        row = self.rows.setdefault(prop, Row(self.suite, prop))
        row.cases += 1
        if not ok:
            row.failures.append(detail or "failed")

    def done(self) -> list[Row]:
        total = time.perf_counter() - self._t
        for row in self.rows.values():
            row.seconds = total
        return list(self.rows.values())


def _density(rng: np.random.Generator) -> list[Row]:
    rec = _Rec("density")
    for p, n in ((3, 1), (3, 2), (3, 3), (5, 1), (5, 2)):
        uppers, dets, counts = qlattice.enumerate_form_counts(p, n)
        for up, det, cnt in zip(uppers, dets, counts):
            if det % p == 0:
                continue
            f = qlattice.form_from_upper(p, n, [int(u) for u in up])
            for M in range(1, p):
                brute = Fraction(int(cnt[M])) * Fraction(p) ** (1 - n)
                rec.check("closed form = enumeration", brute == qlattice.local_density_selfdual(f, M),
                          f"p={p} form={list(up)} M={M}")
    for _ in range(15):
        l = int(rng.choice([2, 3, 5]))
        L, m = _random_lattice(rng, l)
        a = qlattice.stable_exponent(l, m)
        try:
            hensel = qlattice.local_density(l, L, m, a)
            b0 = qlattice.local_density_bruteforce(l, L, m, a)
            b1 = qlattice.local_density_bruteforce(l, L, m, a + 1)
        except DecayLabError:
            continue
        rec.check("Hensel recursion = enumeration", hensel == b0, f"l={l} gram={L.gram} m={m}")
        rec.check("stabilization at 1+2v(2m)", b0 == b1, f"l={l} gram={L.gram} m={m}")
    return rec.done()


def _random_lattice(rng: np.random.Generator, l: int) -> tuple[qlattice.QuadLattice, int]:
    n = int(rng.integers(1, 4 if l < 5 else 3))
    while True:
        g = rng.integers(-3, 4, size=(n, n))
        g = g + g.T
        if round(np.linalg.det(g.astype(float))) != 0:
            break
    m = int(rng.integers(1, 13))
    return qlattice.QuadLattice(tuple(tuple(int(x) for x in r) for r in g), "half"), m


def _eisenstein(rng: np.random.Generator) -> list[Row]:
    from .eisenstein import EisensteinParams, dirichlet_L, q_L

    rec = _Rec("eisenstein")
    import mpmath

    z = dirichlet_L(2, None, 1e-12)
    rec.check("zeta(2) enclosure contains pi^2/6", z.contains(mpmath.pi**2 / 6))
    P = EisensteinParams(_eisenstein_lattice(), 4)
    for m in sorted(set(int(x) for x in rng.integers(1, 200, size=12))):
        v, _ = q_L(P, m, 1e-10)
        rec.check("q_L(m) <= 0", v.hi <= 0, f"m={m}")
    return rec.done()


def _eisenstein_lattice() -> qlattice.QuadLattice:
    """U + U + A_2, signature (4, 2), 2 det smooth."""
    g = [[0] * 6 for _ in range(6)]
    g[0][1] = g[1][0] = g[2][3] = g[3][2] = 1
    g[4][4] = g[5][5] = 2
    g[4][5] = g[5][4] = 1
    return qlattice.QuadLattice(tuple(map(tuple, g)), "half")


def _crystal(rng: np.random.Generator) -> list[Row]:
    rec = _Rec("crystal")
    for p in (3, 5):
        model = crystal.SuperspecialModel(make_field(p, 2), 2, N=4)
        germ = crystal.random_paired_germ(rng, model, 30)
        W = germ.lift(4)
        prod = crystal.F_infty_product(model, W, 3)
        closed = crystal.F_infty_closed(model, W, 3)
        for n in range(1, 4):
            A = crystal.assemble_blocks(closed[n - 1])
            same = all(a == b for ra, rb in zip(A, prod[n]) for a, b in zip(ra, rb))
            rec.check("F_infty blocks = truncated product", same, f"p={p} n={n}")
    for _ in range(12):
        p = int(rng.choice([3, 5]))
        model = crystal.SuperspecialModel(make_field(p, 2), 2, N=4)
        germ = crystal.random_germ(rng, model, 60, a=1)
        for row in decay_checks(rng, model, germ, 3, vectors=3):
            rec.check(row[0], row[1], row[2])
    for m in (2, 3):
        model = crystal.SuperspecialModel(make_field(3, 2), m, N=2)
        germ = crystal.random_germ(rng, model, 40, a=m)
        try:
            ok = crystal.newton_vanishing_check(model, germ, 10)["pass"]
        except DecayLabError:
            ok = False
        rec.check("Newton vanishing Q_h = 0 for h <= 10", ok, f"m={m}")
    return rec.done()


def decay_checks(rng: np.random.Generator, model: crystal.SuperspecialModel, germ: crystal.CurveGerm,
                 n_max: int, vectors: int = 1) -> list[tuple[str, bool, str]]:
    """Recursion and word lower bound for random special vectors on one germ."""
    p, m = model.p, model.m
    h_vals = germ.h_values(m - 1)
    h = {i: (words.INF if v is None else v) for i, v in enumerate(h_vals)}
    ctx = words.ValuationContext(p, m, h)
    U = crystal.Ubar_sequence(model, germ, n_max + 8)
    out = []
    for _ in range(vectors):
        coords = tuple(int(c) for c in rng.integers(-p, p + 1, size=model.rank))
        if not any(c % p for c in coords):
            coords = (1,) + coords[1:]
        v = crystal.SpecialVector(coords)
        d = {n: crystal.decay_rate(model, germ, v, n, U) for n in range(1, n_max + 1)}
        dd = {n: (words.INF if x is None else x) for n, x in d.items()}
        for n in range(1, n_max):
            if d[n + 1] is None or dd[n] == words.INF:
                continue
            bound = min(ctx.hval(i) + p ** (i + 1) * dd[n] for i in ctx.letters())
            out.append(("d_{n+1} >= min_i h_i + p^{i+1} d_n", dd[n + 1] >= bound, f"v={coords} n={n}"))
        cls = words.vector_class(coords, p)
        vx = dd[1] if cls == "L1" else None
        if cls == "L1" and not vx < ctx.h_ak:
            continue
        c = ctx.with_vx(vx)
        for r in range(2 if cls == "L1" else 1, n_max + 1):
            if d[r] is None:
                continue
            _, lo = words.minimal_words(r, c, cls)
            out.append(("d_r >= nu_r^min", dd[r] >= lo, f"v={coords} r={r}"))
    return out


def _words(rng: np.random.Generator) -> list[Row]:
    rec = _Rec("words")
    r_py = random.Random(int(rng.integers(2**31)))
    for _ in range(30):
        ctx = words.random_context(r_py, int(rng.choice([3, 5])), int(rng.integers(2, 5)))
        if ctx.vx is None:
            continue
        for r in range(1, 5):
            for cls in ("L0", "L1"):
                W, lo = words.minimal_words(r, ctx, cls)
                if r <= 3:
                    W2, lo2 = words.minimal_words_brute(r, ctx, cls)
                    rec.check("minimal words = brute force", W == W2 and lo == lo2, f"{ctx.to_json()} r={r}")
                for w in W:
                    chain = words.word_to_term(w)
                    conds = words.wordtruncate_conditions(chain, len(w.letters) + 1, ctx.a_seq)
                    rec.check("three structural conditions", all(conds.values()), f"{w} {conds}")
    return rec.done()


def _lineconfig(rng: np.random.Generator) -> list[Row]:
    rec = _Rec("lineconfig")
    for it in range(30):
        p = (3, 5)[it % 2]
        fld = make_field(p, 1 + it % 2)
        s = int(rng.integers(0, 2))
        try:
            coll = lineconfig.random_degenerate_collection(rng, fld, int(rng.integers(2, 5)), s, vmax=4, tail=2)
        except DecayLabError:
            continue
        cfg = coll.line_config()
        rec.check("critical-point law", not lineconfig.critical_point_law(cfg, s))
        mx, _ = lineconfig.maximize(coll)
        vx, vy = mx.valuations()
        if any(v == lineconfig.INF for v in vx + vy) or not lineconfig.q_degenerate(mx, s):
            continue
        res = lineconfig.cor_maximal_checks(mx.line_config(), s)
        rec.check("|R| >= s + 2 after maximization", res["R"] >= s + 2)
        rec.check("edge counts and tight structure", not res["failures"], "; ".join(res["failures"]))
    for it in range(60):
        p = (3, 5)[it % 2]
        fld = make_field(p, 1 + it % 2)
        coll = lineconfig.random_collection(rng, fld, int(rng.integers(2, 4)), diag_prob=0.7)
        mx, _ = lineconfig.maximize(coll)
        vx, vy = mx.valuations()
        for d in sorted({int(a) for a, b in zip(vx, vy) if a == b and a != lineconfig.INF}):
            try:
                bs = lineconfig.borderline_space(mx, d)
                rec.check("borderline dim <= 2, zero/nondegenerate/inert", bs.dim <= 2)
            except DecayLabError as e:
                rec.check("borderline dim <= 2, zero/nondegenerate/inert", False, str(e))
    return rec.done()


def _series(rng: np.random.Generator) -> list[Row]:
    rec = _Rec("series")
    for p in (3, 5, 7):
        prm = series.toy_params(p, 2)
        rec.check("toy m=2 chain sums to 1", series.aux_chain(prm, 1).S() == 1 == series.toy_S2(p, 2, (p + 1) * 2))
    for _ in range(40):
        p = int(rng.choice([3, 5]))
        bd, thin, tight = int(rng.integers(0, 3)), bool(rng.integers(0, 2)), bool(rng.integers(0, 2))
        try:
            prm = series.random_case_params(rng, p, int(rng.integers(2, 6)), bd, thin, tight)
        except DecayLabError:
            continue
        M = int(rng.integers(1, p))
        rec.check("D_0 lemma", _ok(lambda: series.d0_lemma(prm)))
        if prm.tight:
            res = series.S2_bound(prm, M)
            rec.check("chain route = closed route", series.aux_chain(prm, M).S() == res["S"], str(prm))
            rec.check("certificate", res["certificate"]["passed"], str(prm))
        else:
            rec.check("loose bound < 1", series.loose_bound(prm, M)["certificate"]["passed"], str(prm))
    for p in (3, 5):
        for m in range(2, 7):
            for n in range(2, m + 1):
                for a in range(1, n):
                    val = series.closed_form_border2(p, a, n, m)
                    rec.check("border-2 closed form: thin = 1, thick < 1", val == 1 if n == a + 1 else val < 1)
                for a in range(1, n - 1):
                    rec.check("case-1 inequality", series.case1_bound(p, a, n, 2 * m)["holds"])
    return rec.done()


def _ok(fn: Callable[[], object]) -> bool:
    try:
        fn()
        return True
    except DecayLabError:
        return False


SUITES: dict[str, Callable[[np.random.Generator], list[Row]]] = {
    "density": _density,
    "eisenstein": _eisenstein,
    "crystal": _crystal,
    "words": _words,
    "lineconfig": _lineconfig,
    "series": _series,
}


def run_suites(names: list[str], seed: int) -> list[Row]:
    rows: list[Row] = []
    for name in names:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        rows += SUITES[name](rng)
    return rows
