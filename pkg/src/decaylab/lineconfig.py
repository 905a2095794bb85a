"""Line configurations of series collections and their Q-isometry classes.

A collection is a list of pairs (x_i, y_i) of series over F_{p^k}.  The
series are treated as exact polynomials of degree below the truncation T,
so every F_p-linear recombination (the isometry moves) is exact; only the
products entering Q_r are truncated, and those are checked against T.

Frame vectors live in F_p^{2n}: coordinates 0..n-1 pair with x_1..x_n and
n..2n-1 with y_1..y_n; Q(a, b) = sum a_i b_i.  An isometry R acts by
(x', y') = (x, y) R, i.e. new series j is sum_i R[i, j] * old series i.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    MaximalityViolated,
    OutOfCase,
    PrecisionExhausted,
    RelationViolated,
    ResourceLimit,
    StratumViolation,
)
from .ffield import FieldDescriptor, hyper_independent, make_field
from .padic import TSeries, witt_ring
from .words import ValuationContext

__all__ = [
    "INF",
    "Line",
    "LineConfig",
    "Collection",
    "CriticalPoint",
    "RedundancyReport",
    "BorderlineSpace",
    "CaseLabel",
    "ChainDescription",
    "lies_above",
    "config_geq",
    "config_gt",
    "q_series",
    "q_degenerate",
    "q_degeneracy_profile",
    "critical_points",
    "critical_point_law",
    "envelope_vertices",
    "redundancy",
    "cor_maximal_checks",
    "is_isometry",
    "isometry_group",
    "orthogonal_group_order",
    "maximize",
    "is_maximal_exhaustive",
    "maximal_configs_exhaustive",
    "borderline_space",
    "classify",
    "chain_description",
    "random_isometry",
    "random_collection",
    "random_degenerate_collection",
    "random_stratum_collection",
]

INF = math.inf
Status = Literal["active", "quasi-redundant", "redundant"]


def _num(v) -> Fraction | float:
    if v is None or v == INF:
        return INF
    return Fraction(v)


def _js(v) -> str:
    return "inf" if v == INF else str(v)


# -- lines and the partial order -----------------------------------------------


@dataclass(frozen=True)
class Line:
    """y = a x + b with a, b >= 0 rational or infinite."""

    a: Fraction | float
    b: Fraction | float

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _num(self.a))
        object.__setattr__(self, "b", _num(self.b))
        if self.a < 0 or self.b < 0:
            raise ValueError("slope and intercept must be non-negative")

    @classmethod
    def from_valuations(cls, vx, vy) -> "Line":
        vx, vy = _num(vx), _num(vy)
        return cls(min(vx, vy), max(vx, vy))

    @property
    def degenerate(self) -> bool:
        return self.a == INF or self.b == INF

    @property
    def geometric(self) -> bool:
        return not self.degenerate

    @property
    def diagonal(self) -> bool:
        """Of the form y = d x + d."""
        return self.geometric and self.a == self.b

    def at(self, x: Fraction | int) -> Fraction | float:
        if self.degenerate:
            return INF
        return self.a * x + self.b

    def __str__(self) -> str:
        return f"y={_js(self.a)}x+{_js(self.b)}"

    def to_json(self) -> dict:
        return {"a": _js(self.a), "b": _js(self.b)}


def lies_above(l1: Line, l2: Line) -> bool:
    """The partial order on admissible lines."""
    if l1.geometric and l2.geometric:
        return l1.a >= l2.a and l1.a + l1.b >= l2.a + l2.b
    if l1.degenerate and l2.geometric:
        return True
    if l1.a == INF and l2.a == INF:
        return l1.b >= l2.b
    if l1.b == INF and l2.b == INF:
        return l1.a >= l2.a
    return False


def config_geq(c1: Sequence[Line], c2: Sequence[Line]) -> bool:
    if len(c1) != len(c2):
        raise ValueError("configurations of different sizes")
    return all(lies_above(a, b) for a, b in zip(c1, c2))


def config_gt(c1: Sequence[Line], c2: Sequence[Line]) -> bool:
    return config_geq(c1, c2) and tuple(c1) != tuple(c2)


# -- critical points and redundancy ------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    r: int
    x: int
    y: Fraction
    kind: Literal["vertex", "edge"]
    incident: tuple[int, ...]

    def to_json(self) -> dict:
        return {"r": self.r, "x": self.x, "y": str(self.y), "kind": self.kind,
                "incident": list(self.incident)}


@dataclass
class LineConfig:
    """Indexed lines Pi_1..Pi_n with the prime p; provenance is optional."""

    lines: tuple[Line, ...]
    p: int
    provenance: "Collection | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.lines = tuple(self.lines)

    def __len__(self) -> int:
        return len(self.lines)

    def geometric_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.lines) if l.geometric]

    def envelope(self, x: Fraction | int) -> Fraction | float:
        """Boundary height of the Q-polygon at x (INF when no line is geometric)."""
        vals = [l.at(x) for l in self.lines if l.geometric]
        return min(vals) if vals else INF

    def incident(self, x: Fraction | int) -> list[int]:
        f = self.envelope(x)
        if f == INF:
            return []
        return [i for i, l in enumerate(self.lines) if l.geometric and l.at(x) == f]

    def contact_interval(self, i: int) -> tuple[Fraction | float, Fraction | float] | None:
        """{x real : Pi_i(x) = boundary(x)} as a closed interval, or None."""
        li = self.lines[i]
        if li.degenerate:
            return None
        lo, hi = -INF, INF
        for j in self.geometric_indices():
            lj = self.lines[j]
            diff, rhs = li.a - lj.a, lj.b - li.b
            if diff > 0:
                hi = min(hi, rhs / diff)
            elif diff < 0:
                lo = max(lo, rhs / diff)
            elif rhs < 0:
                return None
        if lo > hi:
            return None
        return lo, hi

    def multiset(self) -> Counter:
        return Counter(self.lines)

    def to_json(self) -> dict:
        return {"p": self.p, "lines": [l.to_json() for l in self.lines]}


def critical_points(cfg: LineConfig, s: int, r_min: int = 0) -> list[CriticalPoint]:
    """Critical points at x = p^r for r_min <= r <= s."""
    if s < 0:
        raise ValueError("s must be >= 0")
    out = []
    for r in range(r_min, s + 1):
        x = cfg.p**r
        inc = cfg.incident(x)
        if not inc:
            continue
        slopes = {cfg.lines[i].a for i in inc}
        out.append(CriticalPoint(r, x, Fraction(cfg.envelope(x)), "vertex" if len(slopes) > 1 else "edge",
                                 tuple(inc)))
    return out


def critical_point_law(cfg: LineConfig, s: int) -> list[CriticalPoint]:
    """Critical points in [1, p^s] lying on one line only, that line not diagonal.

    A Q_s-degenerate collection has none.
    """
    bad = []
    for cp in critical_points(cfg, s):
        if len(cp.incident) >= 2:
            continue
        if any(cfg.lines[i].diagonal for i in cp.incident):
            continue
        bad.append(cp)
    return bad


def envelope_vertices(cfg: LineConfig, lo: Fraction | int, hi: Fraction | int) -> list[tuple[Fraction, Fraction]]:
    """Points of the boundary over [lo, hi] where the slope changes, with both ends."""
    lo, hi = Fraction(lo), Fraction(hi)
    geo = cfg.geometric_indices()
    if not geo:
        return []
    pts = [(lo, Fraction(cfg.envelope(lo)))]
    x = lo
    while True:
        f = cfg.envelope(x)
        cur = min((i for i in geo if cfg.lines[i].at(x) == f), key=lambda i: cfg.lines[i].a)
        lc = cfg.lines[cur]
        nxt = [Fraction(cfg.lines[j].b - lc.b) / (lc.a - cfg.lines[j].a) for j in geo if cfg.lines[j].a < lc.a]
        nxt = [t for t in nxt if t > x]
        if not nxt or min(nxt) >= hi:
            break
        x = min(nxt)
        pts.append((x, Fraction(cfg.envelope(x))))
    if pts[-1][0] != hi:
        pts.append((hi, Fraction(cfg.envelope(hi))))
    return pts


@dataclass
class RedundancyReport:
    status: list[Status]
    interval: tuple[Fraction, Fraction]

    @property
    def n(self) -> int:
        """Lines that are not quasi-redundant."""
        return sum(1 for s in self.status if s == "active")

    @property
    def n0(self) -> int:
        """Lines that are not redundant."""
        return sum(1 for s in self.status if s != "redundant")

    @property
    def r(self) -> int:
        return len(self.status) - self.n

    @property
    def r0(self) -> int:
        return len(self.status) - self.n0

    def to_json(self) -> dict:
        return {"interval": [str(self.interval[0]), str(self.interval[1])], "status": list(self.status),
                "n": self.n, "n0": self.n0, "r": self.r, "r0": self.r0}


def redundancy(cfg: LineConfig, interval: tuple[Fraction | int, Fraction | int] | None = None,
               s: int | None = None) -> RedundancyReport:
    """Classify each line over a closed interval (default [1, p^s])."""
    if interval is None:
        if s is None:
            raise ValueError("give an interval or s")
        interval = (1, cfg.p**s)
    lo, hi = Fraction(interval[0]), Fraction(interval[1])
    if lo < 1 or hi < lo:
        raise ValueError("interval must be a non-empty subset of [1, inf)")
    r_lo = 0
    while cfg.p ** r_lo < lo:
        r_lo += 1
    r_hi = r_lo - 1
    while cfg.p ** (r_hi + 1) <= hi:
        r_hi += 1
    cps = critical_points(cfg, r_hi, r_lo) if r_hi >= r_lo else []
    status: list[Status] = []
    for i, l in enumerate(cfg.lines):
        if l.degenerate or not any(i in cp.incident for cp in cps):
            status.append("redundant")
            continue
        c = cfg.contact_interval(i)
        assert c is not None
        # single contact point with the whole boundary; see the ledger on the domain
        status.append("quasi-redundant" if c[0] == c[1] else "active")
    return RedundancyReport(status, (lo, hi))


# -- collections -------------------------------------------------------------------


@dataclass
class Collection:
    """Series x_1..x_n, y_1..y_n over F_{p^k}, exact polynomials of degree < T."""

    field: FieldDescriptor
    x: list[TSeries]
    y: list[TSeries]

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValueError("need as many x-series as y-series")
        if not self.x:
            raise ValueError("empty collection")
        Ts = {s.T for s in self.x + self.y}
        if len(Ts) != 1:
            raise ValueError("all series must share one truncation")
        for s in self.x + self.y:
            if s.ring.N != 1 or s.ring.field != self.field:
                raise ValueError("collection series live over the residue field")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def T(self) -> int:
        return self.x[0].T

    @classmethod
    def from_terms(cls, fld: FieldDescriptor, T: int, x_terms: Sequence[dict], y_terms: Sequence[dict]) -> "Collection":
        R1 = witt_ring(fld, 1)
        return cls(fld, [TSeries.from_terms(R1, T, d) for d in x_terms],
                   [TSeries.from_terms(R1, T, d) for d in y_terms])

    @classmethod
    def from_array(cls, fld: FieldDescriptor, arr: np.ndarray) -> "Collection":
        R1 = witt_ring(fld, 1)
        n = arr.shape[0] // 2
        series = [TSeries(R1, np.ascontiguousarray(arr[i]).astype(R1.dtype)) for i in range(2 * n)]
        return cls(fld, series[:n], series[n:])

    def array(self) -> np.ndarray:
        return np.stack([np.asarray(s.data, dtype=np.int64) % self.p for s in self.x + self.y])

    def valuations(self) -> tuple[list[float], list[float]]:
        vals = _valuations(self.array())
        return vals[: self.n], vals[self.n:]

    def line_config(self) -> LineConfig:
        vx, vy = self.valuations()
        return LineConfig(tuple(Line.from_valuations(a, b) for a, b in zip(vx, vy)), self.p, self)

    def apply(self, R: np.ndarray) -> "Collection":
        arr = self.array()
        new = np.tensordot(np.asarray(R, dtype=np.int64).T, arr, axes=(1, 0)) % self.p
        return Collection.from_array(self.field, new)

    def realize(self, u: Sequence[int]) -> TSeries:
        """Series attached to a frame vector."""
        arr = self.array()
        out = np.tensordot(np.asarray(u, dtype=np.int64), arr, axes=(0, 0)) % self.p
        return TSeries(self.x[0].ring, out.astype(self.x[0].ring.dtype))

    def subcollection(self, idx: Sequence[int]) -> "Collection":
        return Collection(self.field, [self.x[i] for i in idx], [self.y[i] for i in idx])

    def q(self, r: int) -> TSeries:
        return q_series(self, r)

    def to_json(self) -> dict:
        def ser(s: TSeries) -> dict:
            return {str(j): [int(c) for c in s.data[j]] for j in s.nonzero_rows()}
        return {"field": self.field.to_json(), "T": self.T, "x": [ser(s) for s in self.x],
                "y": [ser(s) for s in self.y]}

    @classmethod
    def from_json(cls, d: dict) -> "Collection":
        f = d["field"]
        fld = make_field(int(f["p"]), int(f.get("k", 1)), f.get("modulus"))
        T = int(d["T"])

        def terms(s: dict) -> dict:
            return {int(j): (list(c) if isinstance(c, list) else int(c)) for j, c in s.items()}
        return cls.from_terms(fld, T, [terms(s) for s in d["x"]], [terms(s) for s in d["y"]])


def _valuations(arr: np.ndarray) -> list[float]:
    nz = np.any(arr != 0, axis=2)
    has = nz.any(axis=1)
    first = nz.argmax(axis=1)
    return [int(f) if h else INF for f, h in zip(first, has)]


def q_series(coll: Collection, r: int) -> TSeries:
    """Q_r = sum_i (x_i^{p^r} y_i + x_i y_i^{p^r}), truncated at T."""
    if r < 0:
        raise ValueError("r must be >= 0")
    total = TSeries.zeros(coll.x[0].ring, coll.T)
    for xi, yi in zip(coll.x, coll.y):
        total = total + xi.twist(r) * yi + xi * yi.twist(r)
    return total


def _min_term(coll: Collection, r: int) -> float:
    vx, vy = coll.valuations()
    q = coll.p**r
    best = INF
    for a, b in zip(vx, vy):
        if a != INF and b != INF:
            best = min(best, q * a + b, a + q * b)
    return best


def q_degeneracy_profile(coll: Collection, s: int) -> list[dict]:
    """Per r <= s: v_t(Q_r) (INF if zero to T), the minimal term valuation, and the verdict."""
    if s < 0:
        raise ValueError("s must be >= 0")
    out = []
    for r in range(s + 1):
        rhs = _min_term(coll, r)
        if rhs == INF:
            # every pair has a zero member, so Q_r vanishes exactly
            out.append({"r": r, "vQ": INF, "min": INF, "holds": True})
            continue
        if rhs >= coll.T:
            raise PrecisionExhausted(f"minimal term valuation {rhs} of Q_{r} lies beyond T={coll.T}")
        v = q_series(coll, r).valuation()
        v = INF if v is None else v
        out.append({"r": r, "vQ": v, "min": rhs, "holds": v > rhs})
    return out


def q_degenerate(coll: Collection, s: int) -> bool:
    return all(row["holds"] for row in q_degeneracy_profile(coll, s))


# -- F_p linear algebra --------------------------------------------------------------


def _rref(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    A = np.array(M, dtype=np.int64) % p
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if len(nz) == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] * pow(int(A[r, c]), p - 2, p) % p
        col = A[:, c].copy()
        col[r] = 0
        A = (A - np.outer(col, A[r])) % p
        pivots.append(c)
        r += 1
    return A, pivots


def _nullspace(M: np.ndarray, p: int) -> list[np.ndarray]:
    M = np.atleast_2d(np.array(M, dtype=np.int64))
    cols = M.shape[1]
    A, piv = _rref(M, p)
    basis = []
    for fcol in (c for c in range(cols) if c not in piv):
        v = np.zeros(cols, dtype=np.int64)
        v[fcol] = 1
        for r, pc in enumerate(piv):
            v[pc] = -A[r, fcol] % p
        basis.append(v)
    return basis


def _solve(M: np.ndarray, b: np.ndarray, p: int) -> np.ndarray | None:
    """One solution of M u = b over F_p, or None."""
    M = np.atleast_2d(np.array(M, dtype=np.int64))
    aug = np.concatenate([M, np.array(b, dtype=np.int64).reshape(-1, 1)], axis=1)
    A, piv = _rref(aug, p)
    cols = M.shape[1]
    if cols in piv:
        return None
    u = np.zeros(cols, dtype=np.int64)
    for r, pc in enumerate(piv):
        u[pc] = A[r, cols]
    return u % p


def _independent(vectors: Sequence[np.ndarray], p: int) -> list[np.ndarray]:
    if not vectors:
        return []
    A, piv = _rref(np.array(vectors), p)
    return [A[r] for r in range(len(piv))]


# -- the frame space ----------------------------------------------------------------


def _Q(u: np.ndarray, n: int, p: int) -> int:
    return int(np.dot(u[:n], u[n:])) % p


def _B(u: np.ndarray, v: np.ndarray, n: int, p: int) -> int:
    return int(np.dot(u[:n], v[n:]) + np.dot(u[n:], v[:n])) % p


def _J(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n), dtype=np.int64)
    J[:n, n:] = np.eye(n, dtype=np.int64)
    J[n:, :n] = np.eye(n, dtype=np.int64)
    return J


def is_isometry(R: np.ndarray, p: int) -> bool:
    R = np.asarray(R, dtype=np.int64)
    n = R.shape[0] // 2
    return bool(np.all((R.T @ _J(n) @ R - _J(n)) % p == 0))


def orthogonal_group_order(n: int, p: int) -> int:
    """|O(Q_0)(F_p)| for the split form of rank 2n."""
    out = 2 * p ** (n * (n - 1)) * (p**n - 1)
    for i in range(1, n):
        out *= p ** (2 * i) - 1
    return out


def _find_isotropic(basis: Sequence[np.ndarray], n: int, p: int) -> np.ndarray | None:
    """First nonzero isotropic vector of span(basis) in a fixed enumeration order."""
    dim = len(basis)
    B = np.array(basis, dtype=np.int64).reshape(dim, 2 * n)
    for coeffs in itertools.product(range(p), repeat=dim):
        if not any(coeffs):
            continue
        u = np.asarray(coeffs, dtype=np.int64) @ B % p
        if _Q(u, n, p) == 0:
            return u
    return None


def _hyperbolic_basis(space: Sequence[np.ndarray], n: int, p: int, first: np.ndarray | None = None
                      ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Hyperbolic pairs spanning a split nondegenerate subspace, starting at `first`."""
    space = _independent(list(space), p)
    pairs = []
    w = first
    while space:
        if w is None:
            w = _find_isotropic(space, n, p)
            if w is None:
                raise MaximalityViolated("subspace is not split")
        z = next((u for u in space if _B(w, u, n, p)), None)
        if z is None:
            raise MaximalityViolated("isotropic vector lies in the radical")
        z = z * pow(_B(w, z, n, p), p - 2, p) % p
        w2 = (z - _Q(z, n, p) * w) % p
        pairs.append((w % p, w2))
        proj = [(u - _B(u, w2, n, p) * w - _B(u, w, n, p) * w2) % p for u in space]
        space = _independent([u for u in proj if np.any(u)], p)
        w = None
    return pairs


# -- moves -------------------------------------------------------------------------


@dataclass(frozen=True)
class Move:
    name: str
    info: dict
    R: np.ndarray = field(repr=False, compare=False)

    def log(self) -> dict:
        return {"move": self.name, **self.info}


def _identity(n: int) -> np.ndarray:
    return np.eye(2 * n, dtype=np.int64)


def _eichler(n: int, p: int, kind: str, i: int, j: int, c: int) -> np.ndarray:
    R = _identity(n)
    if kind == "xy":  # x_i += c y_j, x_j -= c y_i
        R[n + j, i] += c
        R[n + i, j] -= c
    elif kind == "yx":  # y_i += c x_j, y_j -= c x_i
        R[j, n + i] += c
        R[i, n + j] -= c
    elif kind == "xx":  # x_i += c x_j, y_j -= c y_i
        R[j, i] += c
        R[n + i, n + j] -= c
    else:
        raise ValueError(kind)
    return R % p


def _elementary_moves(n: int, p: int) -> Iterable[Move]:
    for i, j in itertools.permutations(range(n), 2):
        for c in range(1, p):
            if i < j:
                yield Move("eichler-xy", {"i": i, "j": j, "c": c}, _eichler(n, p, "xy", i, j, c))
                yield Move("eichler-yx", {"i": i, "j": j, "c": c}, _eichler(n, p, "yx", i, j, c))
            yield Move("eichler-xx", {"i": i, "j": j, "c": c}, _eichler(n, p, "xx", i, j, c))


def _hypermax_moves(coll: Collection, arr: np.ndarray, vals: list[float]) -> Iterable[Move]:
    """Quantum re-indexing that cancels a dependency among leading coefficients."""
    n, p = coll.n, coll.p
    for side in (0, 1):
        own = range(side * n, side * n + n)
        other_off = (1 - side) * n
        classes: dict[float, list[int]] = {}
        for g in own:
            if vals[g] != INF:
                classes.setdefault(vals[g], []).append(g)
        for v, members in sorted(classes.items()):
            if len(members) < 2:
                continue
            M = np.array([arr[g, int(v)] for g in members], dtype=np.int64).T
            for c in _nullspace(M, p):
                support = [t for t in range(len(members)) if c[t]]
                idx = [members[t] - side * n for t in support]
                piv_t = max(support, key=lambda t: (vals[other_off + members[t] - side * n], -t))
                c = c * pow(int(c[piv_t]), p - 2, p) % p
                piv = members[piv_t] - side * n
                R = _identity(n)
                R[side * n + piv, side * n + piv] = 0
                for t in support:
                    R[side * n + members[t] - side * n, side * n + piv] = c[t]
                for t in support:
                    i = members[t] - side * n
                    if i != piv:
                        R[other_off + piv, other_off + i] = -c[t] % p
                yield Move("hypermax", {"side": "xy"[side], "valuation": int(v), "pivot": piv,
                                        "support": idx, "coeffs": [int(c[t]) for t in support]}, R % p)


def _vd_plus(coll: Collection, arr: np.ndarray, vals: list[float], d: int) -> tuple[list[int], list[np.ndarray]]:
    n, p = coll.n, coll.p
    C = [i for i in range(n) if vals[i] == d and vals[n + i] == d]
    if not C:
        return C, []
    cols = [arr[i, d] for i in C] + [arr[n + i, d] for i in C]
    M = np.array(cols, dtype=np.int64).T
    out = []
    for ker in _nullspace(M, p):
        u = np.zeros(2 * n, dtype=np.int64)
        for t, i in enumerate(C):
            u[i] = ker[t]
            u[n + i] = ker[len(C) + t]
        out.append(u)
    return C, out


def _vd_moves(coll: Collection, arr: np.ndarray, vals: list[float]) -> Iterable[Move]:
    n, p = coll.n, coll.p
    ds = sorted({int(vals[i]) for i in range(n) if vals[i] != INF and vals[i] == vals[n + i]})
    for d in ds:
        C, plus = _vd_plus(coll, arr, vals, d)
        if not plus:
            continue
        w = _find_isotropic(plus, n, p)
        if w is None:
            continue
        space = []
        for i in C:
            e = np.zeros(2 * n, dtype=np.int64)
            e[i] = 1
            space.append(e)
            f = np.zeros(2 * n, dtype=np.int64)
            f[n + i] = 1
            space.append(f)
        pairs = _hyperbolic_basis(space, n, p, first=w)
        R = _identity(n)
        for i, (X, Y) in zip(C, pairs):
            R[:, i] = X
            R[:, n + i] = Y
        yield Move("borderline-isotropic", {"d": d, "indices": C, "w": [int(t) for t in w]}, R % p)


def _affine_cancel_moves(coll: Collection, arr: np.ndarray, vals: list[float]) -> Iterable[Move]:
    """Cancel the leading term of x_t against the other valuation-d series."""
    n, p = coll.n, coll.p
    for side in (0, 1):
        U = lambda i: side * n + i  # noqa: E731
        V = lambda i: (1 - side) * n + i  # noqa: E731
        for t in range(n):
            d = vals[U(t)]
            if d == INF or not vals[V(t)] > d:
                continue
            d = int(d)
            S = [i for i in range(n) if i != t and vals[U(i)] == d]
            Tv = [i for i in range(n) if i != t and vals[V(i)] == d]
            if not S and not Tv:
                continue
            M = np.array([arr[U(i), d] for i in S] + [arr[V(i), d] for i in Tv], dtype=np.int64).T
            sol = _solve(M, -arr[U(t), d] % p, p)
            if sol is None:
                continue
            a = {i: int(sol[k]) for k, i in enumerate(S)}
            b = {i: int(sol[len(S) + k]) for k, i in enumerate(Tv)}
            R = _identity(n)
            # U'_t = U_t - (sum a_i b_i) V_t + sum (a_i U_i + b_i V_i)
            R[V(t), U(t)] -= sum(a.get(i, 0) * b.get(i, 0) for i in range(n))
            for i, ai in a.items():
                R[U(i), U(t)] += ai
                R[V(t), V(i)] -= ai  # V'_i = V_i - a_i V_t
            for i, bi in b.items():
                R[V(i), U(t)] += bi
                R[V(t), U(i)] -= bi  # U'_i = U_i - b_i V_t
            R %= p
            if not is_isometry(R, p):
                raise AssertionError("affine cancellation move is not an isometry")
            yield Move("affine-cancel", {"side": "xy"[side], "target": t, "d": d, "a": a, "b": b}, R)


def _eichler_cancel_moves(coll: Collection, arr: np.ndarray, vals: list[float], cap: int = 48) -> Iterable[Move]:
    """Eichler transformations E_{e_h, w} that raise the valuation of the series paired with e_h.

    For a target slot g with partner h and w supported on the other pairs,
    u -> u + B(u, e_h) w - B(u, w) e_h - Q(w) B(u, e_h) e_h sends the target
    series to itself + real(w) - Q(w) * partner.  Candidates w solve the
    affine system killing every coefficient of degree <= v(target).
    """
    n, p = coll.n, coll.p
    T, k = arr.shape[1], arr.shape[2]
    for g in range(2 * n):
        d = vals[g]
        if d == INF:
            continue
        d = int(d)
        t = g % n
        h = (g + n) % (2 * n)
        others = [j for j in range(2 * n) if j % n != t]
        if not others:
            continue
        M = np.array([arr[j, : d + 1].reshape(-1) for j in others], dtype=np.int64).T
        ker = _nullspace(M, p)
        # the partner enters through -Q(w) h, so fix q = Q(w) and solve the affine part
        partner_low = vals[h] <= d
        for q in (range(p) if partner_low else (None,)):
            rhs = arr[g, : d + 1].reshape(-1) if q is None else arr[g, : d + 1].reshape(-1) - q * arr[h, : d + 1].reshape(-1)
            w0 = _solve(M, -rhs % p, p)
            if w0 is None:
                continue
            for lam in itertools.islice(itertools.product(range(p), repeat=len(ker)), cap):
                wl = w0.copy()
                for c, kv in zip(lam, ker):
                    wl = (wl + c * kv) % p
                w = np.zeros(2 * n, dtype=np.int64)
                w[others] = wl
                qw = _Q(w, n, p)
                if q is not None and qw != q:
                    continue
                R = _identity(n)
                R[:, g] = (R[:, g] + w) % p
                R[h, g] = (R[h, g] - qw) % p
                for j in others:
                    R[h, j] = (R[h, j] - _B(_identity(n)[j], w, n, p)) % p
                yield Move("eichler-cancel", {"target": ("x" if g < n else "y") + str(t),
                                              "w": [int(x) for x in w]}, R)


def _candidate_moves(coll: Collection, elementary: bool = True) -> Iterable[Move]:
    arr = coll.array()
    vals = _valuations(arr)
    yield from _hypermax_moves(coll, arr, vals)
    yield from _vd_moves(coll, arr, vals)
    yield from _affine_cancel_moves(coll, arr, vals)
    yield from _eichler_cancel_moves(coll, arr, vals)
    if elementary:
        yield from _elementary_moves(coll.n, coll.p)


def maximize(coll: Collection, max_steps: int = 10_000, check: bool = True) -> tuple[Collection, list[dict]]:
    """Hill-climb in the Q-isometry class until no move strictly raises the configuration."""
    cur = coll
    cfg = cur.line_config().lines
    log: list[dict] = []
    for _ in range(max_steps):
        for mv in _candidate_moves(cur):
            new = cur.apply(mv.R)
            ncfg = new.line_config().lines
            if config_gt(ncfg, cfg):
                cur, cfg = new, ncfg
                log.append(mv.log())
                break
        else:
            break
    else:
        raise ResourceLimit(f"maximize did not settle within {max_steps} moves")
    if check:
        _assert_fixed_point(cur)
    return cur, log


def _assert_fixed_point(coll: Collection) -> None:
    if not hyper_independent(coll.x, allow_zero=True) or not hyper_independent(coll.y, allow_zero=True):
        raise MaximalityViolated("maximize output is not hyper-independent")
    arr = coll.array()
    vals = _valuations(arr)
    n, p = coll.n, coll.p
    for d in {int(vals[i]) for i in range(n) if vals[i] != INF and vals[i] == vals[n + i]}:
        _, plus = _vd_plus(coll, arr, vals, d)
        if plus and _find_isotropic(plus, n, p) is not None:
            raise MaximalityViolated(f"V_{d}^+ is isotropic after maximize")


def random_isometry(rng: np.random.Generator, n: int, p: int, steps: int | None = None) -> np.ndarray:
    """Product of random Eichler moves, swaps, scalings and transpositions."""
    R = _identity(n)
    steps = 3 * n + 2 if steps is None else steps
    for _ in range(steps):
        kind = int(rng.integers(0, 4))
        G = _identity(n)
        if kind == 0 and n >= 2:
            i, j = rng.choice(n, size=2, replace=False)
            G = _eichler(n, p, ("xy", "yx", "xx")[int(rng.integers(0, 3))], int(i), int(j), int(rng.integers(1, p)))
        elif kind == 1:
            i = int(rng.integers(0, n))
            G[[i, n + i]] = G[[n + i, i]]
        elif kind == 2:
            i, c = int(rng.integers(0, n)), int(rng.integers(1, p))
            G[i, i] = c
            G[n + i, n + i] = pow(c, p - 2, p)
        elif n >= 2:
            i, j = (int(t) for t in rng.choice(n, size=2, replace=False))
            G[:, [i, j]] = G[:, [j, i]]
            G[:, [n + i, n + j]] = G[:, [n + j, n + i]]
        R = R @ G % p
    return R


# -- exhaustive oracle ---------------------------------------------------------------


@lru_cache(maxsize=8)
def isometry_group(n: int, p: int) -> np.ndarray:
    """All of O(Q_0)(F_p) by breadth-first closure; shape (order, 2n, 2n)."""
    if orthogonal_group_order(n, p) > 200_000:
        raise ResourceLimit(f"O(Q_0)(F_{p}) of rank {2 * n} is too large to enumerate")
    gens = []
    g = next(c for c in range(2, p) if all(pow(c, (p - 1) // q, p) != 1 for q in _prime_factors(p - 1))) \
        if p > 2 else 1
    for i in range(n):
        G = _identity(n)
        G[[i, n + i]] = G[[n + i, i]]
        gens.append(G)
        G = _identity(n)
        G[i, i] = g
        G[n + i, n + i] = pow(g, p - 2, p)
        gens.append(G)
    for i, j in itertools.permutations(range(n), 2):
        for kind in ("xy", "yx", "xx"):
            gens.append(_eichler(n, p, kind, i, j, 1))
    gens_arr = np.array(gens, dtype=np.int64)
    seen = {_identity(n).tobytes()}
    elems = [_identity(n)]
    frontier = np.array([_identity(n)], dtype=np.int64)
    while len(frontier):
        prods = np.einsum("fij,gjk->fgik", frontier, gens_arr) % p
        prods = prods.reshape(-1, 2 * n, 2 * n)
        new = []
        for M in prods:
            key = M.tobytes()
            if key not in seen:
                seen.add(key)
                new.append(M)
        elems.extend(new)
        frontier = np.array(new, dtype=np.int64) if new else np.zeros((0, 2 * n, 2 * n), dtype=np.int64)
    return np.array(elems, dtype=np.int64)


def _prime_factors(m: int) -> list[int]:
    out, q = [], 2
    while q * q <= m:
        if m % q == 0:
            out.append(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        out.append(m)
    return out


def _class_lines(coll: Collection) -> tuple[np.ndarray, np.ndarray]:
    """Slopes and intercepts of every configuration in the Q-isometry class."""
    G = isometry_group(coll.n, coll.p)
    arr = coll.array()
    n2, T, k = arr.shape
    flat = arr.reshape(n2, T * k)
    new = np.einsum("gij,it->gjt", G, flat) % coll.p
    nz = np.any(new.reshape(len(G), n2, T, k) != 0, axis=3)
    has = nz.any(axis=2)
    first = np.where(has, nz.argmax(axis=2), np.inf).astype(float)
    n = coll.n
    vx, vy = first[:, :n], first[:, n:]
    return np.minimum(vx, vy), np.maximum(vx, vy)


def _strictly_above(a1, b1, a2, b2) -> np.ndarray:
    geo1, geo2 = np.isfinite(b1), np.isfinite(b2)
    ge = ((geo1 & geo2 & (a1 >= a2) & (a1 + b1 >= a2 + b2))
          | (~geo1 & geo2)
          | (np.isinf(a1) & np.isinf(a2) & (b1 >= b2))
          | (np.isinf(b1) & np.isinf(b2) & (a1 >= a2)))
    eq = (a1 == a2) & (b1 == b2)
    return ge.all(axis=-1) & ~eq.all(axis=-1)


def is_maximal_exhaustive(coll: Collection) -> bool:
    """No element of the Q-isometry class has a strictly higher configuration."""
    A, B = _class_lines(coll)
    cfg = coll.line_config().lines
    a2 = np.array([float(l.a) for l in cfg])
    b2 = np.array([float(l.b) for l in cfg])
    return not bool(_strictly_above(A, B, a2, b2).any())


def maximal_configs_exhaustive(coll: Collection) -> set[tuple[Line, ...]]:
    """The maximal configurations of the class, found by enumerating the group."""
    A, B = _class_lines(coll)
    keys = {}
    for a, b in zip(A, B):
        keys.setdefault((tuple(a), tuple(b)), (a, b))
    cand = list(keys.values())
    aa = np.array([c[0] for c in cand])
    bb = np.array([c[1] for c in cand])
    out = set()
    for a, b in cand:
        if not _strictly_above(aa, bb, a, b).any():
            out.add(tuple(Line(_num(x) if np.isfinite(x) else INF, _num(y) if np.isfinite(y) else INF)
                          for x, y in zip(a, b)))
    return out


# -- borderline subspaces --------------------------------------------------------------


@dataclass
class BorderlineSpace:
    d: int
    indices: list[int]
    basis: list[list[int]]
    dim: int
    type: Literal["zero", "nondegenerate", "inert"]
    gram: list[list[int]]

    def to_json(self) -> dict:
        return {"d": self.d, "indices": self.indices, "basis": self.basis, "dim": self.dim,
                "type": self.type, "gram": self.gram}


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def borderline_space(coll: Collection, d: int) -> BorderlineSpace:
    """V_d^+ with its type; anything but anisotropic signals a non-maximal input."""
    arr = coll.array()
    vals = _valuations(arr)
    n, p = coll.n, coll.p
    C, plus = _vd_plus(coll, arr, vals, d)
    dim = len(plus)
    gram = [[_B(u, v, n, p) for v in plus] for u in plus]
    basis = [[int(t) for t in u] for u in plus]
    if dim == 0:
        return BorderlineSpace(d, C, basis, 0, "zero", gram)
    if dim > 2:
        raise MaximalityViolated(f"V_{d}^+ has dimension {dim} > 2")
    det = int(round(np.linalg.det(np.array(gram, dtype=float)))) % p if dim == 2 else gram[0][0] % p
    if det == 0:
        raise MaximalityViolated(f"V_{d}^+ is degenerate")
    if dim == 2:
        if _legendre(-det, p) == 1:
            raise MaximalityViolated(f"V_{d}^+ is a hyperbolic plane")
        return BorderlineSpace(d, C, basis, 2, "inert", gram)
    return BorderlineSpace(d, C, basis, 1, "nondegenerate", gram)


def cor_maximal_checks(cfg: LineConfig, s: int) -> dict:
    """Counting statements for a maximal Q_s-degenerate configuration.

    Returns |R| (lines not quasi-redundant over [1, p^s]) and the failures of
    the edge-count bound and, when |R| = s + 2, of the tight structure.
    """
    rep = redundancy(cfg, s=s)
    cps = critical_points(cfg, s)
    R = [i for i, st in enumerate(rep.status) if st == "active"]
    failures = []
    mult = cfg.multiset()
    for line, nj in mult.items():
        if line.degenerate:
            continue
        edges = sum(1 for cp in cps if cp.kind == "edge" and line.at(cp.x) == cp.y)
        if edges > min(s + 1, nj - 1):
            failures.append(f"{line} carries {edges} edge-like points, bound {min(s + 1, nj - 1)}")
    if len(R) == s + 2:
        sub = Counter(cfg.lines[i] for i in R)
        lines = list(sub)
        for l1, l2 in itertools.combinations(lines, 2):
            if l1.a == l2.a:
                failures.append(f"{l1} and {l2} are parallel")
                continue
            x = (l2.b - l1.b) / (l1.a - l2.a)
            hit = [cp for cp in cps if cp.x == x and cp.kind == "vertex" and cp.y == l1.at(x)]
            if not hit:
                failures.append(f"{l1} and {l2} do not meet at a vertex-like critical point")
        for line, mj in sub.items():
            edges = sum(1 for cp in cps if cp.kind == "edge" and line.at(cp.x) == cp.y)
            if edges != mj - 1:
                failures.append(f"{line} carries {edges} edge-like points, expected {mj - 1}")
    return {"R": len(R), "R_indices": R, "failures": failures}


# -- case taxonomy -----------------------------------------------------------------------


@dataclass
class CaseLabel:
    p: int
    m: int
    a: int
    a_k: int
    a_seq: tuple[int, ...]
    h: dict[int, float]
    n: int
    n0: int
    r: int
    r0: int
    thin: bool
    tight: bool
    borderline: int | None
    border: int | None
    borderline_dim: int
    borderline_type: str
    c: list[int]
    d: list[int]
    c_all: list[float]
    d_all: list[float]
    status: list[str]
    order: list[int]
    collection: Collection | None = field(default=None, repr=False, compare=False)

    @property
    def h_ak(self) -> float:
        return self.h[self.a_k]

    @property
    def brd_dim(self) -> int:
        return self.borderline_dim + 2 * (self.m - self.n)

    def to_json(self) -> dict:
        return {
            "p": self.p, "m": self.m, "a": self.a, "a_k": self.a_k, "a_seq": list(self.a_seq),
            "h": {str(k): _js(v) for k, v in sorted(self.h.items())},
            "n": self.n, "n0": self.n0, "r": self.r, "r0": self.r0,
            "thin": self.thin, "tight": self.tight, "borderline": self.borderline,
            "border": self.border, "borderline_dim": self.borderline_dim,
            "borderline_type": self.borderline_type, "c": self.c, "d": self.d,
            "status": self.status, "order": self.order,
        }


def _stratum_h(coll: Collection, a: int) -> dict[int, float]:
    m = coll.n
    h: dict[int, float] = {}
    for r in range(m):
        v = q_series(coll, r).valuation()
        if r < a and v is not None:
            raise StratumViolation(f"Q_{r} has valuation {v} although a = {a}")
        h[r] = INF if v is None else v
    if a >= m or h[a] == INF:
        raise StratumViolation(f"Q_{a} vanishes to the truncation")
    return h


def classify(coll: Collection, a: int, h: dict[int, float] | None = None) -> CaseLabel:
    """Normalize a maximal collection and read off its case label.

    Raises RelationViolated when one of the structural relations fails.
    """
    if a < 1:
        raise ValueError("a >= 1 on a curve (Q_0 vanishes identically)")
    m, p = coll.n, coll.p
    if h is None:
        h = _stratum_h(coll, a)
    ctx = ValuationContext(p, m, dict(h))
    if ctx.a != a:
        raise StratumViolation(f"h gives a = {ctx.a}, expected {a}")
    a_k = ctx.a_k
    cfg = coll.line_config()
    rep = redundancy(cfg, s=a_k)
    vx, vy = coll.valuations()
    active = sorted((i for i in range(m) if rep.status[i] == "active"),
                    key=lambda i: (min(vx[i], vy[i]), -max(vx[i], vy[i]), i))
    quasi = [i for i in range(m) if rep.status[i] == "quasi-redundant"]
    red = [i for i in range(m) if rep.status[i] == "redundant"]
    order = active + quasi + red
    R = np.zeros((2 * m, 2 * m), dtype=np.int64)
    for new, old in enumerate(order):
        if vx[old] <= vy[old]:
            R[old, new] = R[m + old, m + new] = 1
        else:
            R[m + old, new] = R[old, m + new] = 1
    norm = coll.apply(R)
    nx, ny = norm.valuations()
    status = [rep.status[i] for i in order]
    n, n0 = rep.n, rep.n0
    c = [int(v) for v in nx[:n]]
    d = [int(v) for v in ny[:n]]

    def fail(msg: str) -> None:
        raise RelationViolated(msg)

    chain = c + d[::-1]
    if any(u > w for u, w in zip(chain, chain[1:])):
        fail(f"valuations not ordered as c_1 <= .. <= c_n <= d_n <= .. <= d_1: c={c}, d={d}")
    if n:
        for i in range(m):
            if nx[n - 1] > ny[i]:
                fail(f"v(x_n) = {nx[n - 1]} exceeds v(y_{i + 1}) = {ny[i]}")
            if i >= n and not nx[n - 1] < ny[i]:
                fail(f"v(x_n) = {nx[n - 1]} not below v(y_{i + 1}) = {ny[i]} for a quasi-redundant line")
    thin = n <= a_k + 1
    if thin and n != a_k + 1:
        fail(f"thin collection with n = {n} != a_k + 1 = {a_k + 1}")
    for j in range(n - 1):  # 0-based j pairs (j, j+1): d_j - d_{j+1} vs p^{n-2-j}(c_{j+1} - c_j)
        gap_d, gap_c, e = d[j] - d[j + 1], c[j + 1] - c[j], n - 2 - j
        if thin and gap_d != p**e * gap_c:
            fail(f"thin relation fails: d_{j + 1}-d_{j + 2} = {gap_d} != p^{e}({gap_c})")
        if not thin and not (p**e * gap_c <= gap_d <= p ** (e + 1) * gap_c):
            fail(f"thick relation fails at i={e}: {p**e * gap_c} <= {gap_d} <= {p ** (e + 1) * gap_c}")
    if n and h[a_k] < p**a_k * c[0] + d[0]:
        fail(f"h_{a_k} = {h[a_k]} < p^{a_k} c_1 + d_1 = {p**a_k * c[0] + d[0]}")
    borders = [i for i in range(n) if nx[i] == ny[i]]
    if len({nx[i] for i in borders}) > 1:
        fail(f"more than one borderline: lines {[i + 1 for i in borders]}")
    border = int(nx[borders[0]]) if borders else None
    if border is not None:
        bs = borderline_space(norm, border)
        bdim, btype = bs.dim, bs.type
    else:
        bdim, btype = 0, "zero"
    return CaseLabel(p=p, m=m, a=a, a_k=a_k, a_seq=ctx.a_seq, h=dict(ctx.h), n=n, n0=n0,
                     r=m - n, r0=m - n0, thin=thin, tight=(a_k == a),
                     borderline=(borders[0] if borders else None), border=border,
                     borderline_dim=bdim, borderline_type=btype, c=c, d=d,
                     c_all=list(nx), d_all=list(ny), status=status, order=order, collection=norm)


@dataclass
class ChainDescription:
    """The mod-p picture of the decaying lattice at level r."""

    r: int
    regime: Literal["r<=d", "d<r<=h", "r>h"]
    fixed: list[str]
    extra_max: int
    dim_min: int
    dim_max: int

    @property
    def exact(self) -> bool:
        return self.dim_min == self.dim_max

    def to_json(self) -> dict:
        return {"r": self.r, "regime": self.regime, "fixed": self.fixed, "extra_max": self.extra_max,
                "dim_min": self.dim_min, "dim_max": self.dim_max}


def chain_description(label: CaseLabel, r: int) -> ChainDescription:
    if r < 1:
        raise ValueError("r must be >= 1")
    m, n = label.m, label.n
    dn = label.c[-1] if n else 0
    brd = label.brd_dim
    if r <= dn:
        fixed = ["e'", "f'"] + [f"f{i + 1}" for i in range(m)]
        fixed += [f"e{i + 1}" for i in range(m) if label.c_all[i] >= r]
        return ChainDescription(r, "r<=d", fixed, 0, len(fixed), len(fixed))
    if r <= label.h_ak:
        fixed = ["e'", "f'"] + [f"f{i + 1}" for i in range(n) if label.d[i] >= r]
        return ChainDescription(r, "d<r<=h", fixed, brd, len(fixed), len(fixed) + brd)
    if not label.tight:
        raise OutOfCase(f"r = {r} > h_(a_k) with a_k = {label.a_k} > a = {label.a}")
    return ChainDescription(r, "r>h", [], brd, 0, brd)


# -- generators ----------------------------------------------------------------------------


def _mult_matrix(fld: FieldDescriptor, alpha: Sequence[int], r: int, frob_first: bool) -> np.ndarray:
    """F_p-matrix of beta -> alpha^{p^r} beta, or of beta -> alpha beta^{p^r}."""
    k, p = fld.k, fld.p
    cols = []
    for j in range(k):
        e = [0] * k
        e[j] = 1
        if frob_first:
            cols.append(fld.mul_vec(alpha, fld.frob_vec(e, r)))
        else:
            cols.append(fld.mul_vec(fld.frob_vec(alpha, r), e))
    return np.array(cols, dtype=np.int64).T % p


def _rand_elem(rng: np.random.Generator, fld: FieldDescriptor, nonzero: bool = True) -> list[int]:
    while True:
        v = [int(t) for t in rng.integers(0, fld.p, size=fld.k)]
        if any(v) or not nonzero:
            return v


def random_collection(rng: np.random.Generator, fld: FieldDescriptor, n: int, vmax: int = 4, tail: int = 3,
                      diag_prob: float = 0.3, T: int | None = None) -> Collection:
    """Nonzero polynomial pairs with random valuations in [1, vmax]."""
    xs, ys = [], []
    for _ in range(n):
        vx = int(rng.integers(1, vmax + 1))
        vy = vx if rng.random() < diag_prob else int(rng.integers(1, vmax + 1))
        for v, out in ((vx, xs), (vy, ys)):
            terms = {v: _rand_elem(rng, fld)}
            for j in range(v + 1, v + 1 + tail):
                if rng.random() < 0.5:
                    terms[j] = _rand_elem(rng, fld, nonzero=False)
            out.append(terms)
    T = vmax + tail + 2 if T is None else T
    return Collection.from_terms(fld, T, xs, ys)


def random_degenerate_collection(rng: np.random.Generator, fld: FieldDescriptor, n: int, s: int,
                                 vmax: int = 4, tail: int = 2, isometry: bool = True,
                                 attempts: int = 2000) -> Collection:
    """A Q_s-degenerate collection of nonzero series.

    Valuations are drawn at random and kept when the line picture allows
    degeneracy; the leading coefficients of y then solve the F_p-linear
    cancellation conditions at each minimal term.
    """
    p, k = fld.p, fld.k
    maxdeg = vmax + tail
    T = (p**s + 1) * maxdeg + 2
    for _ in range(attempts):
        vx = [int(t) for t in rng.integers(1, vmax + 1, size=n)]
        vy = [int(t) for t in rng.integers(1, vmax + 1, size=n)]
        cfg = LineConfig(tuple(Line.from_valuations(a, b) for a, b in zip(vx, vy)), p)
        if critical_point_law(cfg, s):
            continue
        alpha = [_rand_elem(rng, fld) for _ in range(n)]
        rows = []
        for r in range(s + 1):
            q = p**r
            mu = min(min(q * a + b, a + q * b) for a, b in zip(vx, vy))
            block = np.zeros((k, k * n), dtype=np.int64)
            for i in range(n):
                if q * vx[i] + vy[i] == mu:
                    block[:, i * k:(i + 1) * k] += _mult_matrix(fld, alpha[i], r, frob_first=False)
                if vx[i] + q * vy[i] == mu:
                    block[:, i * k:(i + 1) * k] += _mult_matrix(fld, alpha[i], r, frob_first=True)
            rows.append(block % p)
        ker = _nullspace(np.concatenate(rows), p)
        if not ker:
            continue
        beta = None
        for _ in range(20):
            coeffs = rng.integers(0, p, size=len(ker))
            cand = np.array(ker).T @ coeffs % p
            if all(np.any(cand[i * k:(i + 1) * k]) for i in range(n)):
                beta = cand
                break
        if beta is None:
            continue
        xs, ys = [], []
        for i in range(n):
            xt = {vx[i]: alpha[i]}
            yt = {vy[i]: [int(t) for t in beta[i * k:(i + 1) * k]]}
            for terms, v in ((xt, vx[i]), (yt, vy[i])):
                for j in range(v + 1, v + 1 + tail):
                    if rng.random() < 0.5:
                        terms[j] = _rand_elem(rng, fld, nonzero=False)
            xs.append(xt)
            ys.append(yt)
        coll = Collection.from_terms(fld, T, xs, ys)
        if isometry:
            moved = coll.apply(random_isometry(rng, n, p))
            vxm, vym = moved.valuations()
            if all(v != INF for v in vxm + vym) and q_degenerate(moved, s):
                coll = moved
        if q_degenerate(coll, s):
            return coll
    raise ResourceLimit(f"no Q_{s}-degenerate collection found in {attempts} attempts")


def random_stratum_collection(rng: np.random.Generator, fld: FieldDescriptor, m: int, a: int,
                              xdeg: int = 4, ydeg: int = 8, attempts: int = 200) -> tuple[Collection, dict]:
    """A germ with Q_0 = .. = Q_{a-1} = 0 exactly and Q_a != 0 (a = m: all of Q_0..Q_{m-1} vanish).

    x is drawn at random; y runs over the F_p-space cut out by the vanishing
    of Q_0..Q_{a-1} (each Q_r is additive in y), solved on coefficients.
    Returns the collection and its h values.
    """
    if not 0 <= a <= m:
        raise ValueError("need 0 <= a <= m")
    p, k = fld.p, fld.k
    T = (p**max(m - 1, a) + 1) * (max(xdeg, ydeg) + 1) + 1
    R1 = witt_ring(fld, 1)
    for _ in range(attempts):
        xs = []
        for _i in range(m):
            v = int(rng.integers(1, xdeg + 1))
            terms = {v: _rand_elem(rng, fld)}
            for j in range(v + 1, xdeg + 1):
                if rng.random() < 0.4:
                    terms[j] = _rand_elem(rng, fld, nonzero=False)
            xs.append(TSeries.from_terms(R1, T, terms))
        # unknowns: y_i coefficient at degree j (1 <= j <= ydeg), component c
        cols = []
        for i in range(m):
            for j in range(1, ydeg + 1):
                for c in range(k):
                    e = [0] * k
                    e[c] = 1
                    yb = TSeries.from_terms(R1, T, {j: e})
                    img = [(xs[i].twist(r) * yb + xs[i] * yb.twist(r)).data.reshape(-1) % p for r in range(a)]
                    cols.append(np.concatenate(img))
        M = np.array(cols, dtype=np.int64).T
        ker = _nullspace(M, p) if a > 0 else [np.eye(len(cols), dtype=np.int64)[t] for t in range(len(cols))]
        if not ker:
            continue
        for _try in range(10):
            u = np.array(ker).T @ rng.integers(0, p, size=len(ker)) % p
            ys = []
            for i in range(m):
                terms = {}
                for j in range(1, ydeg + 1):
                    off = (i * ydeg + (j - 1)) * k
                    if np.any(u[off:off + k]):
                        terms[j] = [int(t) for t in u[off:off + k]]
                ys.append(TSeries.from_terms(R1, T, terms))
            if any(s.is_zero() for s in ys):
                continue
            coll = Collection(fld, xs, ys)
            if a >= m:
                # the Newton case: every Q_r with r < m vanishes
                return coll, {r: INF for r in range(m)}
            try:
                h = _stratum_h(coll, a)
            except StratumViolation:
                continue
            return coll, h
    raise ResourceLimit(f"no germ with a = {a} found in {attempts} attempts")
