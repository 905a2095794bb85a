"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the summary lines.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

import numpy as np
import pytest

from decaylab import crystal, lineconfig, qlattice, series, words
from decaylab.eisenstein import EisensteinParams, Interval, q_L
from decaylab.errors import DecayLabError
from decaylab.ffield import make_field
from decaylab.verify import _eisenstein_lattice, decay_checks


class Criterion:
    """Collects failures and prints the verdict line once."""

    def __init__(self, number: int, title: str, limit_s: float) -> None:
        self.number, self.title, self.limit = number, title, limit_s
        self.cases = 0
        self.failures: list[str] = []
        self.start = time.perf_counter()

    def check(self, ok: bool, detail: str = "") -> None:
        self.cases += 1
        if not ok:
            self.failures.append(detail)

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.start
        if elapsed > self.limit:
            self.failures.append(f"took {elapsed:.1f}s > {self.limit:.0f}s")
        verdict = "PASS" if not self.failures and self.cases else "FAIL"
        print(f"\n[criterion {self.number:2d}] {verdict} {self.title}: {self.cases} checks, "
              f"{len(self.failures)} failures, {elapsed:.1f}s")
        assert self.cases, "no cases were checked"
        assert not self.failures, self.failures[:5]


# -- 1 -------------------------------------------------------------------------------------


def test_criterion_01_density_closed_form_vs_enumeration():
    crit = Criterion(1, "closed-form density = enumeration, rank <= 4 over F_3 and F_5", 60)
    rng = np.random.default_rng(1)
    for p in (3, 5):
        for n in (1, 2, 3, 4):
            uppers, dets, counts = qlattice.enumerate_form_counts(p, n)
            nondeg = np.flatnonzero(dets % p)
            if p ** (n * (n + 1) // 2) <= 60_000:
                # every form through the closed form directly
                for f_idx in nondeg:
                    f = qlattice.form_from_upper(p, n, [int(u) for u in uppers[f_idx]])
                    for M in range(1, p):
                        brute = Fraction(int(counts[f_idx, M])) * Fraction(p) ** (1 - n)
                        crit.check(qlattice.local_density_selfdual(f, M) == brute, f"p={p} n={n} form {f_idx}")
                continue
            # rank 4 over F_5: counts of every form, grouped by determinant
            for det in range(1, p):
                members = nondeg[dets[nondeg] == det]
                rows = counts[members]
                crit.check(bool(np.all(rows == rows[0])), f"p={p} det={det}: counts vary within class")
                rep = qlattice.form_from_upper(p, n, [int(u) for u in uppers[members[0]]])
                for M in range(1, p):
                    brute = Fraction(int(rows[0, M])) * Fraction(p) ** (1 - n)
                    crit.check(qlattice.local_density_selfdual(rep, M) == brute, f"p={p} det={det} M={M}")
            # second route: closed form evaluated on a large random sample of individual forms
            for f_idx in rng.choice(nondeg, size=20_000, replace=False):
                f = qlattice.form_from_upper(p, n, [int(u) for u in uppers[f_idx]])
                M = int(rng.integers(1, p))
                brute = Fraction(int(counts[f_idx, M])) * Fraction(p) ** (1 - n)
                crit.check(qlattice.local_density_selfdual(f, M) == brute, f"p={p} n={n} form {f_idx} M={M}")
    crit.finish()


# -- 2 -------------------------------------------------------------------------------------


def _stabilization_draw(rng: np.random.Generator) -> tuple[int, qlattice.QuadLattice, int]:
    while True:
        l = int(rng.choice([2, 3, 5]))
        n = int(rng.integers(1, 4))
        g = rng.integers(-4, 5, size=(n, n))
        g = g + g.T
        if round(np.linalg.det(g.astype(float))) == 0:
            continue
        m = int(rng.integers(1, 41))
        a = qlattice.stable_exponent(l, m)
        if (l ** (a + 1)) ** n > 2 * 10**7:
            continue  # keep the brute force at desk scale
        return l, qlattice.QuadLattice(tuple(tuple(int(x) for x in r) for r in g), "half"), m


def test_criterion_02_stabilization():
    crit = Criterion(2, "brute-force density stable from a = 1 + 2 v_l(2m)", 120)
    rng = np.random.default_rng(2)
    for _ in range(50):
        l, L, m = _stabilization_draw(rng)
        a = qlattice.stable_exponent(l, m)
        d0 = qlattice.local_density_bruteforce(l, L, m, a)
        d1 = qlattice.local_density_bruteforce(l, L, m, a + 1)
        crit.check(d0 == d1, f"l={l} gram={L.gram} m={m}: {d0} != {d1}")
    crit.finish()


# -- 3 -------------------------------------------------------------------------------------


def test_criterion_03_eisenstein_sign_and_growth():
    """U + U + A_2 has b = 4 and 2 det L = 6 smooth.

    The window for |q_L(m)|/m^2 is calibrated on m <= 50 as [min/2, 2 max] and
    then has to contain every later m up to 500.
    """
    crit = Criterion(3, "q_L(m) <= 0 and |q_L(m)|/m^2 in a fixed positive window, m <= 500", 600)
    P = EisensteinParams(_eisenstein_lattice(), 4)
    ratios: list[Interval] = []
    for m in range(1, 501):
        v, _ = q_L(P, m, 1e-9)
        crit.check(v.hi <= 0, f"m={m}: upper end {v.hi} > 0")
        if v.hi < 0:  # represented: every m is, since U represents all integers
            ratios.append(-v / Interval.exact(m * m))
    lo = min(r.lo for r in ratios[:50]) / 2
    hi = max(r.hi for r in ratios[:50]) * 2
    crit.check(lo > 0, "window does not stay away from 0")
    for m, r in enumerate(ratios, start=1):
        crit.check(lo <= r.lo and r.hi <= hi, f"m={m}: ratio {r.as_text()} outside [{lo}, {hi}]")
    crit.check(len(ratios) == 500, f"only {len(ratios)} nonzero coefficients")
    crit.finish()


# -- 4 -------------------------------------------------------------------------------------


def test_criterion_04_F_infty_closed_form():
    crit = Criterion(4, "F_infty blocks F_1..F_3 = truncated product, precision (p^4, t^30)", 300)
    rng = np.random.default_rng(4)
    for p in (3, 5):
        model = crystal.SuperspecialModel(make_field(p, 2), 2, N=4)
        for g in range(20):
            germ = crystal.random_paired_germ(rng, model, 30)
            crit.check(germ.h_values(0)[0] is None, f"p={p} germ {g} is ordinary")
            W = germ.lift(4)
            prod = crystal.F_infty_product(model, W, 3)
            closed = crystal.F_infty_closed(model, W, 3)
            for n in (1, 2, 3):
                crit.check(crystal.assemble_blocks(closed[n - 1]) == prod[n], f"p={p} germ {g} F_{n}")
    crit.finish()


# -- 5 -------------------------------------------------------------------------------------


def test_criterion_05_decay_recursion_and_word_bound():
    crit = Criterion(5, "d_{n+1} >= min_i h_i + p^{i+1} d_n and d_r >= nu_r^min, 200 pairs", 300)
    rng = np.random.default_rng(5)
    pairs = 0
    while pairs < 200:
        p = int(rng.choice([3, 5]))
        m = int(rng.integers(2, 4))
        model = crystal.SuperspecialModel(make_field(p, 2), m, N=4)
        germ = crystal.random_germ(rng, model, 60, a=int(rng.integers(1, m)))
        for prop, ok, detail in decay_checks(rng, model, germ, 3, vectors=4):
            crit.check(ok, f"{prop}: p={p} m={m} {detail}")
        pairs += 4
    crit.finish()


# -- 6 -------------------------------------------------------------------------------------


def test_criterion_06_newton_vanishing():
    crit = Criterion(6, "Q_0 = .. = Q_{m-1} = 0 forces Q_h = 0 for h <= 10", 120)
    rng = np.random.default_rng(6)
    for g in range(20):
        m = 2 + g % 2
        p = (3, 5)[(g // 2) % 2]
        model = crystal.SuperspecialModel(make_field(p, 2), m, N=2)
        germ = crystal.random_germ(rng, model, 40, a=m)
        crit.check(all(h is None for h in germ.h_values(m - 1)), f"germ {g} not in the Newton stratum")
        try:
            res = crystal.newton_vanishing_check(model, germ, 10)
            crit.check(res["pass"] and res["checked"] == list(range(m, 11)), f"germ {g}: {res}")
        except DecayLabError as e:
            crit.check(False, f"germ {g} m={m}: {e}")
    crit.finish()


# -- 7 -------------------------------------------------------------------------------------


def _overlap(a: tuple[int, int], b: tuple[int, int]) -> int:
    return min(a[1], b[1]) - max(a[0], b[0])


def test_criterion_07_minimal_word_structure():
    crit = Criterion(7, "minimal-word conditions and interval overlaps, 100 contexts, r <= 4", 120)
    r_py = random.Random(7)
    contexts = 0
    while contexts < 100:
        ctx = words.random_context(r_py, r_py.choice([3, 5]), r_py.randrange(2, 5))
        if ctx.vx is None:
            continue
        contexts += 1
        for cls in ("L0", "L1"):
            c = ctx if cls == "L1" else ctx.with_vx(None)
            for r in range(1, 5):
                W, _ = words.minimal_words(r, c, cls)
                for w in W:
                    conds = words.wordtruncate_conditions(words.word_to_term(w), len(w.letters) + 1, ctx.a_seq)
                    crit.check(all(conds.values()), f"{ctx.to_json()} {cls} r={r} {w}: {conds}")
        # intervals: distinct x-valuations for any r, s; equal x-valuations for r != s
        vxs = sorted({v for v in (ctx.vx, ctx.vx + 1, max(0, ctx.vx - 1), r_py.randrange(0, 30)) if v < ctx.h_ak})
        I = {(vx, r): words.interval(r, ctx.with_vx(vx), "L1") for vx in vxs for r in range(2, 5)}
        I0 = {r: words.interval(r, ctx.with_vx(None), "L0") for r in range(1, 5)}
        keys = list(I)
        for i, k1 in enumerate(keys):
            for k2 in keys[i + 1:]:
                if k1[0] == k2[0] and k1[1] == k2[1]:
                    continue
                crit.check(_overlap(I[k1], I[k2]) <= 0, f"{ctx.to_json()} I{k1}={I[k1]} I{k2}={I[k2]}")
        for r in range(1, 5):
            for s in range(r + 1, 5):
                crit.check(_overlap(I0[r], I0[s]) <= 0, f"{ctx.to_json()} L0 I_{r}={I0[r]} I_{s}={I0[s]}")
    crit.finish()


# -- 8 -------------------------------------------------------------------------------------


def test_criterion_08_line_configuration_laws():
    crit = Criterion(8, "critical-point law, |R| >= s + 2, borderline dim <= 2 on 500 maximal collections", 600)
    rng = np.random.default_rng(8)
    for it in range(120):
        p = (3, 5)[it % 2]
        fld = make_field(p, 1 + (it // 2) % 2)
        s = int(rng.integers(0, 3))
        try:
            coll = lineconfig.random_degenerate_collection(rng, fld, int(rng.integers(2, 5)), s, vmax=4, tail=2)
        except DecayLabError:
            continue
        crit.check(lineconfig.q_degenerate(coll, s), f"generator returned a non-degenerate collection (s={s})")
        bad = lineconfig.critical_point_law(coll.line_config(), s)
        crit.check(not bad, f"it={it} s={s}: lonely critical points {[b.to_json() for b in bad]}")
        mx, _ = lineconfig.maximize(coll)
        vx, vy = mx.valuations()
        if any(v == lineconfig.INF for v in vx + vy) or not lineconfig.q_degenerate(mx, s):
            continue
        res = lineconfig.cor_maximal_checks(mx.line_config(), s)
        crit.check(res["R"] >= s + 2, f"it={it} s={s}: |R| = {res['R']}")
        crit.check(not res["failures"], f"it={it}: {res['failures']}")
    maximal = 0
    while maximal < 500:
        p = (3, 5)[maximal % 2]
        fld = make_field(p, 1 + (maximal // 2) % 2)
        mx, _ = lineconfig.maximize(lineconfig.random_collection(rng, fld, int(rng.integers(2, 4)), diag_prob=0.7))
        maximal += 1
        vx, vy = mx.valuations()
        for d in sorted({int(a) for a, b in zip(vx, vy) if a == b and a != lineconfig.INF}):
            try:
                bs = lineconfig.borderline_space(mx, d)
            except DecayLabError as e:
                crit.check(False, f"collection {maximal} d={d}: {e}")
                continue
            crit.check(bs.dim <= 2 and bs.type in ("zero", "nondegenerate", "inert"),
                       f"collection {maximal} d={d}: dim {bs.dim} type {bs.type}")
    crit.finish()


# -- 9 -------------------------------------------------------------------------------------


def test_criterion_09_toy_chain():
    crit = Criterion(9, "m = 2 toy chain tables and S'' = 1, p in {3, 5, 7}", 30)
    for p in (3, 5, 7):
        for d in (1, 2, 3):
            prm = series.toy_params(p, d)
            h = (p + 1) * d
            chain = series.aux_chain(prm, 1, periods=6)
            table = series.toy_tables(p, d, h, 6)
            got = [(e.lo, e.hi, e.density, e.cov_exp) for e in chain.entries]
            crit.check(got == table[: len(got)] and len(got) >= len(table) - 1,
                       f"p={p} d={d}: chain table differs from the display")
            crit.check(table[0][2] == 1 - Fraction(1, p * p) and table[1][2] == 1 + Fraction(1, p),
                       f"p={p}: densities")
            crit.check(chain.S() == 1, f"p={p} d={d}: chain sum {chain.S()}")
            crit.check(series.toy_S2(p, d, h) == 1, f"p={p} d={d}: displayed sum {series.toy_S2(p, d, h)}")
    crit.finish()


# -- 10 ------------------------------------------------------------------------------------


def test_criterion_10_case_bounds():
    crit = Criterion(10, "border-2 closed form, D lemmas on 1000 params each, loose and Case-1 bounds", 120)
    for p in (3, 5):
        for m in range(2, 7):
            for n in range(2, m + 1):
                for a in range(1, n - 1):
                    crit.check(series.closed_form_border2(p, a, n, m) < 1, f"thick p={p} a={a} n={n} m={m}")
                    c1 = series.case1_bound(p, a, n, 2 * m)
                    crit.check(c1["holds"] and c1["margin"] >= 0, f"case 1 p={p} a={a} n={n}: {c1['checks']}")
    rng = np.random.default_rng(10)
    for bd in (2, 1, 0):
        got = 0
        while got < 1000:
            p = int(rng.choice([3, 5]))
            thin = bool(rng.integers(0, 2))
            try:
                prm = series.random_case_params(rng, p, int(rng.integers(3, 7)), bd, thin)
            except DecayLabError:
                continue
            got += 1
            D = series.D_quantities(prm)
            cap = Fraction(p) ** (-prm.a_k) * prm.h_ak
            crit.check(D["D"] <= cap and D["D_delta"] <= cap, f"bd={bd} {prm}: D={D}")
            try:
                series.d0_lemma(prm)
                crit.check(True)
            except DecayLabError as e:
                crit.check(False, f"bd={bd} {prm}: {e}")
    loose = 0
    while loose < 200:
        p = int(rng.choice([3, 5]))
        try:
            prm = series.random_case_params(rng, p, int(rng.integers(3, 7)), int(rng.integers(0, 3)),
                                            bool(rng.integers(0, 2)), tight=False)
        except DecayLabError:
            continue
        loose += 1
        res = series.loose_bound(prm, int(rng.integers(1, p)))
        crit.check(res["certificate"]["passed"] and res["total"] < 1, f"loose {prm}")
    crit.finish()


# -- 11 ------------------------------------------------------------------------------------


def _case3_germ(p: int, d: int, gammas: tuple[int, int]) -> tuple[crystal.SuperspecialModel, crystal.CurveGerm]:
    F = make_field(p, 2)
    g1, g2 = gammas
    target = F(-g1) * F(g2).inverse()
    lam = next(x for x in F.elements() if x * x == target)
    beta = [F(1), lam]
    alpha = [F(g1) * beta[0], F(g2) * beta[1]]
    model = crystal.SuperspecialModel(F, 2, N=4)
    T = (p + 1) * d * p + 4
    germ = crystal.CurveGerm.from_terms(model, T, [{d: alpha[0].coeffs}, {d: alpha[1].coeffs}],
                                        [{d: beta[0].coeffs}, {d: beta[1].coeffs}])
    return model, germ


def _vec(model: crystal.SuperspecialModel, **coeffs: int) -> crystal.SpecialVector:
    labels = model.basis_labels()
    coords = [0] * model.rank
    for k, v in coeffs.items():
        coords[labels.index(k.replace("p", "'"))] = v
    return crystal.SpecialVector(tuple(coords))


def test_criterion_11_decay_pattern():
    crit = Criterion(11, "decay order on case-(3) and case-1 germs", 120)
    inert = {3: (1, 1), 5: (1, 2), 7: (1, 1)}
    for p, gam in inert.items():
        for d in (1, 2):
            model, germ = _case3_germ(p, d, gam)
            h = germ.h_values(2)
            h_P = (p + 1) * d
            crit.check(h[0] is None and h[1] == h_P, f"p={p} d={d}: h = {h}")
            first = {lab: crystal.decay_rate(model, germ, _vec(model, **{lab: 1}), 1)
                     for lab in ("e1", "e2", "f1", "f2", "ep", "fp")}
            crit.check(first["e1"] == first["e2"] == d, f"p={p} d={d}: e-side {first}")
            crit.check(all(first[f"e{i}"] <= first[f"f{i}"] for i in (1, 2)), f"p={p} d={d}: e before f {first}")
            crit.check(first["ep"] == first["fp"] == h_P, f"p={p} d={d}: e', f' at {first['ep']}, {first['fp']}")
            for i, g in enumerate(gam, start=1):
                v = _vec(model, **{f"e{i}": 1, f"f{i}": -g})
                rate = crystal.decay_rate(model, germ, v, 1)
                crit.check(rate is None or rate > d, f"p={p} d={d}: e{i} - {g} f{i} decays at {rate}")
    # strict ordering on a case-1 germ: e1 < e2 < f2 < f1 < e' = f' = h_1
    F = make_field(3, 2)
    model = crystal.SuperspecialModel(F, 2, N=4)
    al = F.gen()
    germ = crystal.CurveGerm.from_terms(model, 80, [{1: al.coeffs}, {2: (F(2) * al).coeffs}],
                                        [{5: 1}, {4: (-F(2).inverse()).coeffs}])
    h = germ.h_values(2)
    first = {lab: crystal.decay_rate(model, germ, _vec(model, **{lab: 1}), 1) for lab in ("e1", "e2", "f1", "f2", "ep", "fp")}
    crit.check(h == [None, 8, 14], f"case-1 h = {h}")
    crit.check(first["e1"] < first["e2"] < first["f2"] < first["f1"] < first["ep"] == first["fp"] == h[1],
               f"case-1 first decays {first}")
    second = [crystal.decay_rate(model, germ, _vec(model, **{lab: 1}), 2) for lab in ("e1", "e2", "f2", "f1")]
    crit.check(second == sorted(second) and len(set(second)) == 4, f"case-1 second decays {second}")
    crit.finish()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-s", "-q"]))
