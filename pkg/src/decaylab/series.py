"""Auxiliary lattice chains and the exact series S''(M).

Everything here is exact rational arithmetic.  Two routes are kept apart:

* the closed route evaluates the quantities D, D_delta and the geometric
  tail from their defining formulas;
* the chain route builds the auxiliary lattices explicitly inside
  L = L_0 + L_1 (basis e', f', e_1..e_m, f_1..f_m), reads covolumes off
  ranks, computes densities from the mod-p forms and sums term by term.

The two must agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import sympy

from .errors import DensityMismatch, HypothesisViolated, RelationViolated
from .qlattice import QuadLattice, build_L0, legendre, local_density_unit

__all__ = [
    "CaseParams",
    "ChainEntry",
    "AuxChain",
    "H_sequence",
    "Deltas",
    "deltas",
    "D0",
    "d0_lemma",
    "D_quantities",
    "S2_bound",
    "aux_chain",
    "loose_bound",
    "case1_bound",
    "toy_tables",
    "toy_S2",
    "toy_params",
    "random_case_params",
    "closed_form_border2",
]


def _nonsquare(p: int) -> int:
    return next(g for g in range(2, p) if legendre(g, p) == -1)


def default_gammas(p: int, bd: int) -> tuple[int, ...]:
    """Residues gamma with gamma_1 X^2 + gamma_2 Y^2 anisotropic when bd = 2."""
    if bd == 0:
        return ()
    if bd == 1:
        return (1,)
    # -gamma_1 gamma_2 must be a nonsquare
    g2 = next(g for g in range(1, p) if legendre(-g % p, p) == -1)
    return (1, g2)


@dataclass(frozen=True)
class CaseParams:
    """Valuation data of a normalized maximal collection.

    c and d are 1-based in the text and 0-based here: c[0] = c_1.
    """

    p: int
    a: int
    a_k: int
    n: int
    m: int
    c: tuple[int, ...]
    d: tuple[int, ...]
    h_ak: int
    bd: int
    h_a: int | None = None
    gammas: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", tuple(int(x) for x in self.c))
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if self.h_a is None:
            object.__setattr__(self, "h_a", self.h_ak)
        if self.gammas is None:
            object.__setattr__(self, "gammas", default_gammas(self.p, self.bd))
        object.__setattr__(self, "gammas", tuple(int(g) % self.p for g in self.gammas))
        self.validate()

    @property
    def thin(self) -> bool:
        return self.n == self.a_k + 1

    @property
    def tight(self) -> bool:
        return self.a_k == self.a

    def validate(self) -> None:
        p, n, m, c, d = self.p, self.n, self.m, self.c, self.d

        def bad(msg: str) -> None:
            raise RelationViolated(msg)

        if p < 3 or not sympy.isprime(p):
            bad(f"p = {p} must be an odd prime")
        if not 1 <= self.a <= self.a_k:
            bad(f"need 1 <= a <= a_k, got a = {self.a}, a_k = {self.a_k}")
        if not self.a_k + 1 <= n <= m:
            bad(f"need a_k + 1 <= n <= m, got n = {n}, a_k = {self.a_k}, m = {m}")
        if len(c) != n or len(d) != n:
            bad("c and d must have length n")
        if c[0] < 1:
            bad("valuations must be positive")
        chain = list(c) + list(d[::-1])
        if any(u > w for u, w in zip(chain, chain[1:])):
            bad(f"not sorted as c_1 <= .. <= c_n <= d_n <= .. <= d_1: c={c}, d={d}")
        for i in range(1, n):  # 1-based i as in the text
            gap_d, gap_c = d[i - 1] - d[i], c[i] - c[i - 1]
            lo, hi = p ** (n - 1 - i) * gap_c, p ** (n - i) * gap_c
            if self.thin and gap_d != lo:
                bad(f"thin relation d_{i}-d_{i + 1} = {gap_d} != {lo}")
            if not self.thin and not lo <= gap_d <= hi:
                bad(f"thick relation {lo} <= d_{i}-d_{i + 1} = {gap_d} <= {hi} fails")
        if self.h_ak < p**self.a_k * c[0] + d[0]:
            bad(f"h_(a_k) = {self.h_ak} < p^(a_k) c_1 + d_1 = {p**self.a_k * c[0] + d[0]}")
        if self.tight and self.h_a != self.h_ak:
            bad("tight case needs h_a = h_(a_k)")
        if not self.tight and self.h_a < self.h_ak:
            bad("h_a >= h_(a_k) fails")
        if self.bd not in (0, 1, 2):
            bad("borderline dimension must be 0, 1 or 2")
        if len(self.gammas) != self.bd or any(g == 0 for g in self.gammas):
            bad("need one nonzero gamma per borderline vector")
        if self.bd == 1 and c[-1] != d[-1]:
            bad("borderline case 1 needs c_n = d_n")
        if self.bd == 2:
            if n < 2 or not c[-2] == c[-1] == d[-1] == d[-2]:
                bad("borderline case 2 needs c_(n-1) = c_n = d_n = d_(n-1)")
            if legendre(-self.gammas[0] * self.gammas[1] % p, p) != -1:
                bad("borderline plane must be anisotropic")

    @classmethod
    def from_label(cls, label, h_a: int | None = None, gammas: tuple[int, ...] | None = None) -> "CaseParams":
        """Build from a lineconfig CaseLabel."""
        h_ak = int(label.h[label.a_k])
        if h_a is None:
            h_a = int(label.h[label.a]) if label.h.get(label.a, math.inf) != math.inf else h_ak
        return cls(label.p, label.a, label.a_k, label.n, label.m, tuple(label.c), tuple(label.d), h_ak,
                   label.borderline_dim, h_a, gammas)

    def to_json(self) -> dict:
        return {"p": self.p, "a": self.a, "a_k": self.a_k, "n": self.n, "m": self.m, "c": list(self.c),
                "d": list(self.d), "h_ak": self.h_ak, "h_a": self.h_a, "bd": self.bd,
                "gammas": list(self.gammas), "thin": self.thin, "tight": self.tight}

    @classmethod
    def from_json(cls, obj: dict) -> "CaseParams":
        return cls(int(obj["p"]), int(obj["a"]), int(obj["a_k"]), int(obj["n"]), int(obj["m"]),
                   tuple(obj["c"]), tuple(obj["d"]), int(obj["h_ak"]), int(obj["bd"]),
                   None if obj.get("h_a") is None else int(obj["h_a"]),
                   None if obj.get("gammas") is None else tuple(obj["gammas"]))


def H_sequence(h_P: int, a_k: int, p: int, j: int) -> int:
    """H_0 = 0 and H_j = h_P (1 + p^(a_k+1) + .. + p^((a_k+1)(j-1)))."""
    if j < 0:
        raise ValueError("j must be >= 0")
    return h_P * sum(p ** ((a_k + 1) * i) for i in range(j))


# -- explicit lattices ----------------------------------------------------------------


class _Model:
    """Vectors of L = L_0 + L_1 in the basis e', f', e_1..e_m, f_1..f_m."""

    def __init__(self, params: CaseParams) -> None:
        self.params = params
        p, m = params.p, params.m
        self.N = 2 * m + 2
        hyp = QuadLattice(((0, 1), (1, 0)))
        L = build_L0(p, 1)
        L1 = hyp
        for _ in range(m - 1):
            L1 = L1.direct_sum(hyp)
        # reorder hyperbolic pairs into e_1..e_m, f_1..f_m
        perm = [2 * i for i in range(m)] + [2 * i + 1 for i in range(m)]
        P = [[1 if perm[i] == j else 0 for j in range(2 * m)] for i in range(2 * m)]
        self.lattice = L.direct_sum(L1.transform(P))

    def unit(self, k: int) -> list[int]:
        v = [0] * self.N
        v[k] = 1
        return v

    def e0(self) -> list[int]:
        return self.unit(0)

    def f0(self) -> list[int]:
        return self.unit(1)

    def e(self, i: int) -> list[int]:  # 1-based
        return self.unit(1 + i)

    def f(self, i: int) -> list[int]:
        return self.unit(1 + self.params.m + i)

    def brd(self) -> list[list[int]]:
        prm = self.params
        n, m, p = prm.n, prm.m, prm.p
        out = []
        for k, g in enumerate(prm.gammas):
            i = n - prm.bd + 1 + k
            out.append([(x - g * y) % p for x, y in zip(self.e(i), self.f(i))])
        for i in range(n + 1, m + 1):
            out += [self.e(i), self.f(i)]
        return out

    def L_gt(self, i: int) -> list[list[int]]:
        n = self.params.n
        return [self.e0(), self.f0()] + [self.e(j) for j in range(i + 1, n + 1)] + [self.f(j) for j in range(1, n + 1)]

    def Lp_le(self, i: int) -> list[list[int]]:
        return [self.e0(), self.f0()] + [self.f(j) for j in range(1, i + 1)]


def _independent_rows(vecs: Sequence[Sequence[int]], p: int) -> list[list[int]]:
    """A maximal subset of vecs independent mod p (greedy, in order)."""
    basis: list[list[int]] = []
    reduced: list[tuple[int, list[int]]] = []
    for v in vecs:
        w = [x % p for x in v]
        for piv, r in reduced:
            if w[piv]:
                c = w[piv]
                w = [(x - c * y) % p for x, y in zip(w, r)]
        piv = next((k for k, x in enumerate(w) if x), None)
        if piv is None:
            continue
        inv = pow(w[piv], p - 2, p)
        w = [x * inv % p for x in w]
        for k, (pv, r) in enumerate(reduced):
            if r[piv]:
                c = r[piv]
                reduced[k] = (pv, [(x - c * y) % p for x, y in zip(r, w)])
        reduced.append((piv, w))
        basis.append(list(v))
    return basis


def _complement(vecs: Sequence[Sequence[int]], N: int, p: int) -> list[list[int]]:
    """Unit vectors completing vecs to a basis mod p."""
    cur = _independent_rows(vecs, p)
    out = []
    for k in range(N):
        u = [0] * N
        u[k] = 1
        if len(_independent_rows(cur + [u], p)) > len(cur):
            cur.append(u)
            out.append(u)
    return out


def _density(model: _Model, rows: Sequence[Sequence[int]], M: int) -> Fraction:
    if not rows:
        return Fraction(0)
    return local_density_unit(model.params.p, model.lattice.transform(rows), M)


# -- densities --------------------------------------------------------------------------


@dataclass(frozen=True)
class Deltas:
    """delta_0..delta_n and delta'_0..delta'_n, both routes.

    ``used`` lists the keys whose r-interval is nonempty; only those enter
    any sum, so only those are held to the closed-form table.
    """

    delta: tuple[Fraction, ...]
    delta_prime: tuple[Fraction, ...]
    table: dict[str, Fraction | None]
    used: tuple[str, ...]

    def to_json(self) -> dict:
        return {"delta": [str(x) for x in self.delta], "delta_prime": [str(x) for x in self.delta_prime],
                "table": {k: (None if v is None else str(v)) for k, v in self.table.items()},
                "used": list(self.used)}


def _table_value(params: CaseParams, key: str, i: int) -> Fraction | None:
    """Closed-form value from the case table; None where only a bound is stated."""
    p, n, m = params.p, params.n, params.m
    P = Fraction(p)
    if key == "delta":
        if i <= n - 1:
            return 1 - P ** (i - m)
        return 1 - P ** (n - m)  # delta_n is the density of L_brd + L'_{<=n}
    if params.bd == 2:
        return 1 + P ** (n - m - 1)
    if params.bd == 1:
        return None
    return 1 - P ** (n - m)


def _used_keys(params: CaseParams) -> list[tuple[str, int]]:
    c, d, n = params.c, params.d, params.n
    used = [("delta", 0)] if c[0] > 0 else []
    used += [("delta", i) for i in range(1, n) if c[i] > c[i - 1]]
    if d[-1] > c[-1]:
        used.append(("delta", n))
    used += [("delta_prime", j) for j in range(1, n) if d[j - 1] > d[j]]
    used.append(("delta_prime", 0))
    return used


def deltas(params: CaseParams, M: int) -> Deltas:
    """Densities of L_brd + L_{>i} and L_brd + L'_{<=i} at a unit M.

    The explicit-lattice value is the result; it is checked against the
    closed-form table wherever that table gives an equality (and against the
    stated bound in borderline case 1).
    """
    p, n, m = params.p, params.n, params.m
    if M % p == 0:
        raise ValueError("M must be coprime to p")
    model = _Model(params)
    brd = model.brd()
    dl = tuple(_density(model, _independent_rows(brd + model.L_gt(i), p), M) for i in range(n + 1))
    dp = tuple(_density(model, _independent_rows(brd + model.Lp_le(j), p), M) for j in range(n + 1))
    table: dict[str, Fraction | None] = {}
    used = _used_keys(params)
    for key, i in used:
        name = f"{key}_{i}"
        val = (dl if key == "delta" else dp)[i]
        ref = _table_value(params, key, i)
        table[name] = ref
        if ref is not None and ref != val:
            raise DensityMismatch(f"{name}: explicit lattice gives {val}, table gives {ref}")
        if ref is None and val > 1 + Fraction(p) ** (n - m):
            raise DensityMismatch(f"{name} = {val} exceeds 1 + p^(n-m)")
    if dl[n] != dp[n]:
        raise DensityMismatch("L_{>n} and L'_{<=n} are the same lattice")
    return Deltas(dl, dp, table, tuple(f"{k}_{i}" for k, i in used))


# -- D_0, D, D_delta --------------------------------------------------------------------


def D0(params: CaseParams) -> int:
    """d_n + p^(n-1) c_1 + sum_i p^(n-i-1) (c_{i+1} - c_i)."""
    p, n, c, d = params.p, params.n, params.c, params.d
    return d[-1] + p ** (n - 1) * c[0] + sum(p ** (n - i - 1) * (c[i] - c[i - 1]) for i in range(1, n))


def d0_lemma(params: CaseParams) -> dict:
    """Thin: D_0 <= h_(a_k).  Thick: D_0 + (p-1)(c_n-c_1) + (p-1)d_n <= p^(n-a_k-1) h_(a_k)."""
    p, n, c, d = params.p, params.n, params.c, params.d
    val = D0(params)
    if params.thin:
        lhs, rhs = val, params.h_ak
    else:
        lhs = val + (p - 1) * (c[-1] - c[0]) + (p - 1) * d[-1]
        rhs = p ** (n - params.a_k - 1) * params.h_ak
    if lhs > rhs:
        raise RelationViolated(f"D_0 lemma fails: {lhs} > {rhs}")
    return {"D0": val, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs}


def D_quantities(params: CaseParams, dl: Deltas | None = None, M: int | None = None) -> dict[str, Fraction]:
    """D and D_delta for the borderline case of params (closed route)."""
    p, n, c, d, h = params.p, params.n, params.c, params.d, params.h_ak
    P = Fraction(p)
    if dl is None:
        dl = deltas(params, 1 if M is None else M)
    shift = {2: 2, 1: 1, 0: 0}[params.bd]
    D = Fraction(c[0])
    Dd = c[0] * dl.delta[0]
    for i in range(1, n):
        D += (c[i] - c[i - 1]) * P ** (-i)
        Dd += (c[i] - c[i - 1]) * P ** (-i) * dl.delta[i]
    if params.bd == 0:
        D += (d[-1] - c[-1]) * P ** (-n)
        Dd += (d[-1] - c[-1]) * P ** (-n) * dl.delta[n]
    for i in range(1, n):
        w = (d[i - 1] - d[i]) * P ** (shift + i - 2 * n)
        D += w
        Dd += w * dl.delta_prime[i]
    w = (h - d[0]) * P ** (shift - 2 * n)
    D += w
    Dd += w * dl.delta_prime[0]
    return {"D": D, "D_delta": Dd}


def _prefactor(params: CaseParams) -> Fraction:
    p, a, m = params.p, params.a, params.m
    return Fraction(p ** (a + 1) - 1, params.h_a) / (p * (1 + Fraction(p) ** (-(m + 1))))


def _tail_ratio(params: CaseParams) -> Fraction:
    """Per-period factor p^(a_k+1) / p^(2n+2-bd) of the chain for j >= 1."""
    return Fraction(params.p ** (params.a_k + 1), params.p ** (2 * params.n + 2 - params.bd))


def closed_form_border2(p: int, a: int, n: int, m: int) -> Fraction:
    """1 - (p^n - p^(a+1))(p^(a+m+1) + p^(a+n) + p^a + p^(m+n)) / (p^a (p^(m+1)+1)(p^(2n) - p^(a+1)))."""
    num = (p**n - p ** (a + 1)) * (p ** (a + m + 1) + p ** (a + n) + p**a + p ** (m + n))
    den = p**a * (p ** (m + 1) + 1) * (p ** (2 * n) - p ** (a + 1))
    return 1 - Fraction(num, den)


def _factored_border2(p: int, a: int, n: int, m: int) -> Fraction:
    """The same bound before simplification, as a product of factors."""
    P = Fraction(p)
    return (1 - P ** (-a - 1)) / (1 + P ** (-(m + 1))) * (1 + (1 + P ** (n - m - 1)) / (P ** (2 * n - a - 1) - 1))


def S2_bound(params: CaseParams, M: int) -> dict:
    """Exact S''_1, S''_{>1}, S'' for a tight case, with the certificate."""
    if not params.tight:
        raise HypothesisViolated("S''(M) is defined for the tight case a_k = a; use loose_bound")
    p, a, a_k, n, m, h = params.p, params.a, params.a_k, params.n, params.m, params.h_ak
    P = Fraction(p)
    dl = deltas(params, M)
    q = D_quantities(params, dl)
    D, Dd = q["D"], q["D_delta"]
    pref = _prefactor(params)
    ratio = _tail_ratio(params)
    S1 = pref * Dd
    Sgt1 = pref * dl.delta_prime[0] * D * ratio / (1 - ratio)
    S = S1 + Sgt1
    cap = P ** (-a_k) * h
    checks = {"D <= p^-a_k h": D <= cap, "D_delta <= p^-a_k h": Dd <= cap}
    cert: dict = {"D": str(D), "Ddelta": str(Dd), "cap": str(cap)}
    if params.bd == 2:
        final = closed_form_border2(p, a, n, m)
        factored = _factored_border2(p, a, n, m)
        checks["closed form identity"] = final == factored
        checks["S <= closed form"] = S <= final
        checks["closed form vs 1"] = (final == 1) if params.thin else (final < 1)
    else:
        checks["D < p^-a_k h"] = D < cap
        checks["D_delta < p^-a_k h"] = Dd < cap
        e = a + 2 if params.bd == 1 else a + 3
        final = (1 - P ** (-a - 1)) / (1 + P ** (-(m + 1))) * (1 + Fraction(2, p**e - 1))
        checks["S < bound"] = S < final
        checks["bound < 1"] = final < 1
    cert.update(final=str(final), checks=checks, passed=all(checks.values()))
    return {"S1": S1, "Sgt1": Sgt1, "S": S, "certificate": cert, "deltas": dl}


# -- the chain route --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainEntry:
    """r in (lo, hi]: L_brd + p^j X + p^(j+1) L with covolume p^cov_exp."""

    j: int
    lo: int
    hi: int
    label: str
    cov_exp: int
    density: Fraction
    mod_p_dim: int

    @property
    def length(self) -> int:
        return self.hi - self.lo

    def to_json(self) -> dict:
        return {"j": self.j, "lo": self.lo, "hi": self.hi, "label": self.label, "cov_exp": self.cov_exp,
                "density": str(self.density), "mod_p_dim": self.mod_p_dim}


@dataclass
class AuxChain:
    params: CaseParams
    M: int
    entries: list[ChainEntry]
    periods: int
    tail_ratio: Fraction

    def term(self, e: ChainEntry) -> Fraction:
        return e.length * e.density / Fraction(self.params.p) ** e.cov_exp

    def period_sum(self, j: int) -> Fraction:
        return sum((self.term(e) for e in self.entries if e.j == j), Fraction(0))

    def riemann_sum(self) -> Fraction:
        """sum_r delta / covolume over the listed periods plus the geometric tail."""
        body = sum((self.term(e) for e in self.entries), Fraction(0))
        if not self.params.tight or self.periods == 0:
            return body
        last = self.period_sum(self.periods)
        return body + last * self.tail_ratio / (1 - self.tail_ratio)

    def S(self) -> Fraction:
        return _prefactor(self.params) * self.riemann_sum()

    def at(self, r: int) -> ChainEntry:
        for e in self.entries:
            if e.lo < r <= e.hi:
                return e
        raise ValueError(f"r = {r} beyond the listed periods")

    def to_json(self) -> dict:
        return {"params": self.params.to_json(), "M": self.M, "periods": self.periods,
                "tail_ratio": str(self.tail_ratio), "entries": [e.to_json() for e in self.entries]}


def aux_chain(params: CaseParams, M: int, periods: int = 10) -> AuxChain:
    """Breakpoint table of the auxiliary chain (period 0 only in the loose case).

    Covolumes come from ranks of explicit sublattices; densities from the
    mod-p form of an explicit basis of each auxiliary lattice.
    """
    p, n, a_k, N = params.p, params.n, params.a_k, 2 * params.m + 2
    if M % p == 0:
        raise ValueError("M must be coprime to p")
    model = _Model(params)
    A = _independent_rows(model.brd(), p)
    marks: list[tuple[int, str, list[list[int]]]] = []
    for i in range(n):
        marks.append((params.c[i], f"L_>{i}", model.L_gt(i)))
    for i in range(n, 0, -1):
        marks.append((params.d[i - 1], f"L'_<={i}", model.Lp_le(i)))
    h_P = params.h_a
    marks.append((h_P, "L'_<=0", model.Lp_le(0)))
    last = periods if params.tight else 0
    entries = []
    for j in range(last + 1):
        base, scale = H_sequence(h_P, a_k, p, j), p ** ((a_k + 1) * j)
        prev = 0
        for mark, name, X in marks:
            lo, hi = base + scale * prev, base + scale * mark
            prev = mark
            if not params.tight:
                hi = min(hi, params.h_ak)
            if hi <= lo:
                continue
            B = _independent_rows(A + X, p)
            extra = _independent_rows(A + [v for v in B if v not in A], p)[len(A):]
            rest = _complement(B, N, p)
            rows = A + [[p**j * x for x in v] for v in extra] + [[p ** (j + 1) * x for x in v] for v in rest]
            cov = (N - len(B)) + j * (N - len(A))
            dens = local_density_unit(p, model.lattice.transform(rows), M)
            label = f"L_brd + p^{j} {name} + p^{j + 1} L"
            entries.append(ChainEntry(j, lo, hi, label, cov, dens, len(A) if j else len(B)))
    return AuxChain(params, M, entries, last, _tail_ratio(params))


# -- loose and Case-1 bounds ----------------------------------------------------------------------


def loose_bound(params: CaseParams, M: int) -> dict:
    """The coarse chain for a_k > a, as exact rationals."""
    if params.tight:
        raise HypothesisViolated("loose_bound needs a_k > a")
    p, a, a_k, m = params.p, params.a, params.a_k, params.m
    P = Fraction(p)
    unit = 1 + P ** (-(m + 1))
    dl = deltas(params, M)
    Dd = D_quantities(params, dl)["D_delta"]
    ratio_h = Fraction(params.h_ak, params.h_a)
    S1 = _prefactor(params) * Dd
    S1_bound = (P ** (a - a_k) - P ** (-a_k - 1)) / unit * ratio_h
    S1_cap = P ** (-1) / unit
    Sgt1_bound = 2 * ratio_h / (p * unit)
    Sgt1_cap = 2 * P ** (-1) / unit
    total = 3 * P ** (-1) / unit
    checks = {
        "D_delta <= p^-a_k h": Dd <= P ** (-a_k) * params.h_ak,
        "h_ak / h_a <= 1": ratio_h <= 1,
        "S1 <= S1 bound": S1 <= S1_bound,
        "S1 bound < cap": S1_bound < S1_cap,
        "S>1 bound <= cap": Sgt1_bound <= Sgt1_cap,
        "total < 1": total < 1,
    }
    return {"S1": S1, "S1_bound": S1_bound, "Sgt1_bound": Sgt1_bound, "total": total,
            "certificate": {"checks": checks, "passed": all(checks.values()), "h_ratio": str(ratio_h)}}


def case1_bound(p: int, a: int, n: int, b: int) -> dict:
    """Coarse comparison at a supersingular point with a + 1 < n.

    The exact ratio of the geometric majorant to h_a / (p^(a+1) - 1) is
    2 (p^(a+1)-1) / (p^n (1 - p^(-(b+2)/2))) * (1/p + 1/(1 - p^(-(a+1)))).
    The half-integer power is bounded by the floor exponent, giving a
    rational upper bound.
    """
    if a < 1:
        raise HypothesisViolated("a >= 1 off the ordinary locus")
    if a + 1 >= n:
        raise HypothesisViolated(f"need a + 1 < n, got a = {a}, n = {n}")
    if b + 2 < 2 * n:
        raise HypothesisViolated("rank b + 2 must be at least 2n")
    P = Fraction(p)
    inequality = 3 * p ** (a + 1) - 3 <= p**n - 1
    geo = 1 / (1 - P ** (-(a + 1)))
    ratio = 2 * (p ** (a + 1) - 1) / (p**n * (1 - P ** (-((b + 2) // 2)))) * (1 / P + geo)
    coarse = 3 * Fraction(p ** (a + 1) - 1, p**n - 1)
    checks = {
        "3p^(a+1)-3 <= p^n-1": inequality,
        "1/(1-p^-(a+1)) <= 9/8": geo <= Fraction(9, 8),
        "2(1/p + 9/8) <= 3": 2 * (1 / P + Fraction(9, 8)) <= 3,
        "ratio <= coarse": ratio <= coarse,
        "ratio < 1": ratio < 1,
    }
    return {"holds": all(checks.values()), "ratio": ratio, "coarse": coarse,
            "margin": (p**n - 1) - (3 * p ** (a + 1) - 3), "checks": checks}


# -- the m = 2 example ----------------------------------------------------------------------------


def toy_params(p: int, d: int, h: int | None = None) -> CaseParams:
    """m = n = 2, a = a_k = 1, all valuations d, anisotropic borderline plane."""
    h = (p + 1) * d if h is None else h
    return CaseParams(p, 1, 1, 2, 2, (d, d), (d, d), h, 2)


def toy_tables(p: int, d: int, h: int, periods: int) -> list[tuple[int, int, Fraction, int]]:
    """(lo, hi, density, covolume exponent) straight from the m = 2 display."""
    P = Fraction(p)
    out = [(0, d, 1 - P ** (-2), 0)]
    H = lambda j: h * sum(p ** (2 * i) for i in range(j))  # noqa: E731
    for j in range(periods + 1):
        if j:
            out.append((H(j), H(j) + p ** (2 * j) * d, 1 + P ** (-1), 4 * j))
        out.append((H(j) + p ** (2 * j) * d, H(j + 1), 1 + P ** (-1), 4 * j + 2))
    return out


def toy_S2(p: int, d: int, h: int) -> Fraction:
    """The displayed m = 2 sum with its geometric series in closed form."""
    P = Fraction(p)
    pref = Fraction(p**2 - 1, h) / (p * (1 + P ** (-3)))
    body = d * (1 - P ** (-2))
    body += (1 + P ** (-1)) * d * (P ** (-2) / (1 - P ** (-2)))
    body += (1 + P ** (-1)) * (h - d) * P ** (-2) / (1 - P ** (-2))
    return pref * body


# -- random parameters --------------------------------------------------------------------------


def random_case_params(rng: np.random.Generator, p: int, m: int, bd: int, thin: bool, tight: bool = True,
                       cmax: int = 4, slack: int = 3, attempts: int = 200) -> CaseParams:
    """Sample c ascending, derive d, set h = p^(a_k) c_1 + d_1 + slack.

    Thin takes the equalities for d; thick draws each gap of d uniformly in
    its allowed range.  Reproducible from the generator state.
    """
    for _ in range(attempts):
        if thin:
            n = int(rng.integers(max(2 if bd == 2 else 1, 2 if not tight else 1), m + 1))
            a_k = n - 1
        else:
            n = int(rng.integers(2, m + 1))
            if n - 2 < 1:
                continue
            a_k = int(rng.integers(1, n - 1))
        if a_k < 1:
            continue
        a = a_k if tight else int(rng.integers(1, a_k + 1))
        if not tight and a == a_k:
            continue
        if bd == 2 and n < 2:
            continue
        steps = [int(rng.integers(0, 3)) for _ in range(n - 1)]
        c = [int(rng.integers(1, cmax + 1))]
        for s in steps:
            c.append(c[-1] + s)
        if bd == 2:
            c[-1] = c[-2]
        d = [0] * n
        if bd in (1, 2):
            d[-1] = c[-1]
        else:
            d[-1] = c[-1] + int(rng.integers(0, 3))
        for i in range(n - 1, 0, -1):  # d_i from d_{i+1}, 1-based i
            gap_c = c[i] - c[i - 1]
            lo, hi = p ** (n - 1 - i) * gap_c, p ** (n - i) * gap_c
            d[i - 1] = d[i] + (lo if thin else int(rng.integers(lo, hi + 1)))
        h_ak = p**a_k * c[0] + d[0] + int(rng.integers(0, slack + 1))
        h_a = h_ak if tight else h_ak + int(rng.integers(0, slack + 1))
        gam = None
        if bd == 1:
            gam = (int(rng.integers(1, p)),)
        try:
            return CaseParams(p, a, a_k, n, m, tuple(c), tuple(d), h_ak, bd, h_a, gam)
        except RelationViolated:
            continue
    raise RelationViolated("no valid parameters found; widen the ranges")
