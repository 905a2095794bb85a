"""The F-crystal at a superspecial point, pulled back along a curve germ.

Two kinds of germs are kept apart:

* ``CurveGerm``: series x_k(t), y_k(t) over F_{p^k}.  Everything mod p
  (the Q_j, their valuations h_j, the reductions of U_n and D_n) lives here,
  and there sigma^i of a pulled-back function is its p^i-th power, which is
  the coefficient-and-exponent twist of the series.
* ``WGerm``: series over W_N.  Pulling back sigma^i(f) for f in R means
  substituting x_k(t)^{p^i}; over W that differs from the series twist, so
  the twisted generators are stored explicitly as powers.

The matrix F has entries with a single 1/p in its top two rows.  Writing
F = eps*A + B with A the top block times p, the product prod(I + F^(i)) is
computed as a polynomial in eps; its eps^n coefficient is the block matrix
F_n of the closed form, so the comparison is exact over W_N[[t]].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import AllInfinite, CounterexampleFound, PrecisionExhausted, StratumViolation
from .ffield import FieldDescriptor, FqElem
from .padic import TSeries, WittElem, WittRing, lambda_element, witt_ring

__all__ = [
    "SuperspecialModel",
    "CurveGerm",
    "WGerm",
    "GermView",
    "SpecialVector",
    "DecayProfile",
    "q_series",
    "a_sequence",
    "F_matrix",
    "F_infty_product",
    "F_infty_closed",
    "U_closed",
    "U_recursive",
    "Ubar_sequence",
    "D_n",
    "dbar_n",
    "decay_rate",
    "decay_profile",
    "decay_rate_definitional",
    "newton_vanishing_check",
    "teichmuller_digits",
    "delta_chain",
    "random_germ",
    "random_paired_germ",
]

Matrix = list  # list of rows of TSeries


def _val_min(vals: Iterable[int | None]) -> int | None:
    finite = [v for v in vals if v is not None]
    return min(finite) if finite else None


@dataclass(frozen=True)
class SuperspecialModel:
    """Split-case local model: p, half-rank m, base field and W precision."""

    field: FieldDescriptor
    m: int
    N: int = 8

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        lambda_element(self.field, self.N)  # raises FieldTooSmall for odd k

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def rank(self) -> int:
        return 2 * self.m + 2

    @cached_property
    def ring(self) -> WittRing:
        return witt_ring(self.field, self.N)

    @cached_property
    def lam(self) -> WittElem:
        return lambda_element(self.field, self.N)

    def basis_labels(self) -> list[str]:
        return ["e'", "f'"] + [f"e{i}" for i in range(1, self.m + 1)] + [f"f{i}" for i in range(1, self.m + 1)]

    def change_of_basis_roundtrip(self) -> bool:
        """w' = (lam e' + f')/(2 lam p), v' = (lam e' - f')/(2 lam); invert and compare."""
        R, lam, p = self.ring, self.lam, self.p
        two = R.elem(2)
        inv = (two * lam).inverse()
        # coordinates in (e', f') with p-exponents
        w = (lam * inv * R.elem(1, -1), inv * R.elem(1, -1))
        v = (lam * inv, -inv)
        # e' = v' + p w' and f' = lam (p w' - v')
        e_back = (v[0] + w[0] * p, v[1] + w[1] * p)
        f_back = (lam * (w[0] * p - v[0]), lam * (w[1] * p - v[1]))
        return e_back[0] == 1 and e_back[1] == 0 and f_back[0] == 0 and f_back[1] == 1


# -- germs ---------------------------------------------------------------------


@dataclass
class CurveGerm:
    """t -> (x_1..x_m, y_1..y_m) over F_{p^k}[[t]] (series over W_1)."""

    model: SuperspecialModel
    x: list[TSeries]
    y: list[TSeries]
    a: int | None = None

    def __post_init__(self) -> None:
        m = self.model.m
        if len(self.x) != m or len(self.y) != m:
            raise ValueError(f"germ needs {m} x-series and {m} y-series")
        Ts = {s.T for s in self.x + self.y}
        if len(Ts) != 1:
            raise ValueError("all germ series must share one truncation")
        for s in self.x + self.y:
            if s.ring.N != 1:
                raise ValueError("CurveGerm series live over F_{p^k}; lift with curve_lift for W")
            if np.any(s.data[0] % s.p):
                raise ValueError("germ series must vanish at t = 0")
        if all(s.is_zero() for s in self.x + self.y):
            raise ValueError("germ is identically zero")
        if self.a is not None:
            for j in range(self.a):
                if q_series(self.model, self, j)[1] is not None:
                    raise StratumViolation(f"Q_{j} does not vanish although a = {self.a}")
            if q_series(self.model, self, self.a)[1] is None:
                raise StratumViolation(f"Q_{self.a} vanishes to the truncation; a = {self.a} is wrong")

    @property
    def T(self) -> int:
        return self.x[0].T

    @property
    def p(self) -> int:
        return self.model.p

    @classmethod
    def from_terms(cls, model: SuperspecialModel, T: int, x_terms: Sequence[dict], y_terms: Sequence[dict],
                   a: int | None = None) -> "CurveGerm":
        R1 = witt_ring(model.field, 1)
        x = [TSeries.from_terms(R1, T, d) for d in x_terms]
        y = [TSeries.from_terms(R1, T, d) for d in y_terms]
        return cls(model, x, y, a)

    def lift(self, N: int | None = None) -> "WGerm":
        N = self.model.N if N is None else N
        return WGerm(self.model, [s.lift(N) for s in self.x], [s.lift(N) for s in self.y])

    def scaled_by(self, s: TSeries) -> "CurveGerm":
        return CurveGerm(self.model, [v * s for v in self.x], [v * s for v in self.y])

    def h_values(self, upto: int) -> list[int | None]:
        return [q_series(self.model, self, j)[1] for j in range(upto + 1)]


def q_series(model: SuperspecialModel, germ: CurveGerm, j: int) -> tuple[TSeries, int | None]:
    """Q_j(t) = -sum_k (x_k y_k^{p^j} + x_k^{p^j} y_k) over F, and h_j = v_t(Q_j)."""
    if j < 0:
        raise ValueError("j must be >= 0")
    T = germ.T
    total = TSeries.zeros(germ.x[0].ring, T)
    for xk, yk in zip(germ.x, germ.y):
        total = total + xk * yk.twist(j) + xk.twist(j) * yk
    q = -total
    return q, q.valuation()


def a_sequence(h: Sequence[int | None], m: int) -> list[int]:
    """a_1 = first finite index, a_{i+1} = next index with h no larger; indices < m."""
    idx = [j for j in range(min(m, len(h))) if h[j] is not None]
    if not idx:
        raise AllInfinite("Q_0..Q_{m-1} all vanish to the truncation")
    seq = [idx[0]]
    for j in range(idx[0] + 1, min(m, len(h))):
        if h[j] is not None and h[j] <= h[seq[-1]]:
            seq.append(j)
    return seq


@dataclass
class WGerm:
    """Germ over W_N[[t]] with the stratum condition Q = 0 imposed exactly."""

    model: SuperspecialModel
    x: list[TSeries]
    y: list[TSeries]
    check: bool = True

    def __post_init__(self) -> None:
        if self.check:
            for i in range(self.twist_limit + 1):
                if not self.q_twist(i).is_zero():
                    raise StratumViolation(f"sigma^{i}(Q) does not vanish along the germ over W")

    @property
    def T(self) -> int:
        return self.x[0].T

    @property
    def ring(self) -> WittRing:
        return self.x[0].ring

    @property
    def p(self) -> int:
        return self.model.p

    @cached_property
    def min_valuation(self) -> int:
        v = _val_min(s.valuation() for s in self.x + self.y)
        return self.T if v is None else v

    @cached_property
    def twist_limit(self) -> int:
        """Largest i with p^i * minval < T; beyond it every twisted generator is 0."""
        i = 0
        while self.p ** (i + 1) * self.min_valuation < self.T:
            i += 1
        return i

    def gens(self, i: int) -> tuple[list[TSeries], list[TSeries]]:
        """(x^{p^i}, y^{p^i}): the pullback of sigma^i of the coordinates."""
        return self._gens_cache(i)

    @cached_property
    def _gens_list(self) -> list[tuple[list[TSeries], list[TSeries]]]:
        out = [(list(self.x), list(self.y))]
        for _ in range(self.twist_limit):
            xs, ys = out[-1]
            out.append(([_pow(s, self.p) for s in xs], [_pow(s, self.p) for s in ys]))
        return out

    def _gens_cache(self, i: int):
        if i <= self.twist_limit:
            return self._gens_list[i]
        z = TSeries.zeros(self.ring, self.T)
        return [z] * self.model.m, [z] * self.model.m

    def q_twist(self, i: int) -> TSeries:
        xs, ys = self.gens(i)
        total = TSeries.zeros(self.ring, self.T)
        for a, b in zip(xs, ys):
            total = total + a * b
        return -total

    def reduce(self) -> CurveGerm:
        return CurveGerm(self.model, [s.reduce() for s in self.x], [s.reduce() for s in self.y])


def _pow(s: TSeries, e: int) -> TSeries:
    out = None
    base = s
    while e:
        if e & 1:
            out = base if out is None else out * base
        e >>= 1
        if e:
            base = base * base
    return out


class GermView:
    """sigma^shift applied to a germ: generators offset, lambda sign flipped.

    Works for WGerm and, through ``from_curve``, for F-germs where twisting
    is the Frobenius power of each series.
    """

    def __init__(self, model: SuperspecialModel, gens_fn, ring: WittRing, T: int, nmax_index: int,
                 shift: int = 0):
        self.model = model
        self._gens_fn = gens_fn
        self.ring = ring
        self.T = T
        self.nmax_index = nmax_index  # generators vanish for i > nmax_index
        self.shift = shift
        self._q: dict[tuple[int, int], TSeries] = {}

    @classmethod
    def from_wgerm(cls, g: WGerm) -> "GermView":
        return cls(g.model, g.gens, g.ring, g.T, g.twist_limit)

    @classmethod
    def from_curve(cls, g: CurveGerm) -> "GermView":
        minval = _val_min(s.valuation() for s in g.x + g.y)
        minval = g.T if minval is None else minval
        lim = 0
        while g.p ** (lim + 1) * minval < g.T:
            lim += 1
        cache: dict[int, tuple[list[TSeries], list[TSeries]]] = {}

        def gens(i: int):
            if i not in cache:
                if i > lim:
                    z = TSeries.zeros(g.x[0].ring, g.T)
                    cache[i] = ([z] * g.model.m, [z] * g.model.m)
                else:
                    cache[i] = ([s.twist(i) for s in g.x], [s.twist(i) for s in g.y])
            return cache[i]

        return cls(g.model, gens, g.x[0].ring, g.T, lim)

    def shifted(self, s: int) -> "GermView":
        v = GermView(self.model, self._gens_fn, self.ring, self.T, self.nmax_index, self.shift + s)
        return v

    @property
    def last_index(self) -> int:
        """Largest local index whose generators can be nonzero."""
        return self.nmax_index - self.shift

    def gens(self, i: int):
        return self._gens_fn(i + self.shift)

    @cached_property
    def lam(self) -> WittElem:
        lam = lambda_element(self.model.field, self.ring.N)
        return -lam if self.shift % 2 else lam

    def lam_tw(self, i: int) -> WittElem:
        return -self.lam if i % 2 else self.lam

    def Q(self, j: int, i: int) -> TSeries:
        """Q_j^{(i)} = -sum_k (x^{[i]} y^{[i+j]} + x^{[i+j]} y^{[i]})."""
        key = (j, i)
        if key not in self._q:
            xi, yi = self.gens(i)
            xj, yj = self.gens(i + j)
            total = TSeries.zeros(self.ring, self.T)
            for a, b, c, d in zip(xi, yi, xj, yj):
                total = total + a * d + c * b
            self._q[key] = -total
        return self._q[key]


def delta_chain(chain: Sequence[int]) -> int:
    """prod over consecutive pairs (l_{2k-1}, l_{2k}) of [gap odd]."""
    for a, b in zip(chain[0::2], chain[1::2]):
        if (b - a) % 2 == 0:
            return 0
    return 1


def _q_chain(view: GermView, chain: Sequence[int]) -> TSeries | None:
    """Q_{l_1<...<l_2n}; None when the product is identically zero."""
    out = None
    for a, b in zip(chain[0::2], chain[1::2]):
        q = view.Q(b - a, a)
        if q.is_zero():
            return None
        out = q if out is None else out * q
    if out is None:
        return TSeries.from_terms(view.ring, view.T, {0: 1})
    return out


# -- the matrix F and the product oracle ---------------------------------------


def _half(ring: WittRing) -> WittElem:
    return ring.elem(2).inverse()


def F_blocks(view: GermView, i: int) -> tuple[Matrix, Matrix]:
    """(A, B) of F^{(i)} = A/p + B on the Q = 0 stratum, as dense matrices."""
    m = view.model.m
    n = 2 * m + 2
    R, T = view.ring, view.T
    z = TSeries.zeros(R, T)
    A = [[z for _ in range(n)] for _ in range(n)]
    B = [[z for _ in range(n)] for _ in range(n)]
    xs, ys = view.gens(i)
    half = _half(R)
    lam = view.lam_tw(i)
    lam_inv = lam.inverse()
    row = xs + ys
    for c, s in enumerate(row):
        A[0][2 + c] = s.scale(half)
        A[1][2 + c] = s.scale(half * lam_inv)
    col = [-s for s in ys] + [-s for s in xs]
    for r, s in enumerate(col):
        B[2 + r][0] = s
        B[2 + r][1] = s.scale(-lam)
    return A, B


def F_matrix(model: SuperspecialModel, germ: WGerm, i: int = 0) -> list[list[TSeries]]:
    """F^{(i)} with its 1/p made explicit (p-exponent -1 on the top rows)."""
    view = GermView.from_wgerm(germ)
    A, B = F_blocks(view, i)
    n = len(A)
    out = []
    for r in range(n):
        row = []
        for c in range(n):
            if r < 2:
                a = A[r][c]
                row.append(TSeries(a.ring, a.data.copy(), a.pexp - 1))
            else:
                row.append(B[r][c])
        out.append(row)
    return out


def _matmul(X: Matrix, Y: Matrix) -> Matrix:
    n, k, m = len(X), len(Y), len(Y[0])
    ring, T = X[0][0].ring, X[0][0].T
    out = []
    for r in range(n):
        row = []
        nzx = [j for j in range(k) if not X[r][j].is_zero()]
        for c in range(m):
            acc = TSeries.zeros(ring, T)
            for j in nzx:
                if not Y[j][c].is_zero():
                    acc = acc + X[r][j] * Y[j][c]
            row.append(acc)
        out.append(row)
    return out


def _matadd(X: Matrix, Y: Matrix) -> Matrix:
    return [[a + b for a, b in zip(rx, ry)] for rx, ry in zip(X, Y)]


def _identity(ring: WittRing, T: int, n: int) -> Matrix:
    one = TSeries.from_terms(ring, T, {0: 1})
    z = TSeries.zeros(ring, T)
    return [[one if r == c else z for c in range(n)] for r in range(n)]


def F_infty_product(model: SuperspecialModel, germ: WGerm, n_max: int, i_max: int | None = None) -> list[Matrix]:
    """eps-graded coefficients G_0..G_{n_max} of prod_{i=0}^{i_max} (I + eps A_i + B_i).

    With eps = 1/p this is prod (I + F^(i)).  Factors beyond the germ's twist
    limit are the identity mod t^T; passing a smaller i_max raises when a
    dropped factor is not the identity.
    """
    view = GermView.from_wgerm(germ)
    limit = germ.twist_limit
    if i_max is None:
        i_max = limit
    elif i_max < limit:
        A, B = F_blocks(view, i_max + 1)
        if any(not s.is_zero() for row in A + B for s in row):
            raise PrecisionExhausted(f"factor {i_max + 1} is not the identity at this truncation")
    n = model.rank
    R, T = germ.ring, germ.T
    z = [[TSeries.zeros(R, T) for _ in range(n)] for _ in range(n)]
    G = [_identity(R, T, n)] + [z for _ in range(n_max)]
    for i in range(i_max + 1):
        A, B = F_blocks(view, i)
        IB = _matadd(_identity(R, T, n), B)
        new = []
        for k in range(n_max + 1):
            term = _matmul(G[k], IB)
            if k:
                term = _matadd(term, _matmul(G[k - 1], A))
            new.append(term)
        G = new
    return G


def F_infty_apply(model: SuperspecialModel, germ: WGerm, c: Sequence[WittElem], n_max: int) -> list[list[TSeries]]:
    """eps-graded coefficients of F_infty c, applying factors right to left."""
    view = GermView.from_wgerm(germ)
    R, T = germ.ring, germ.T
    vec0 = [TSeries.from_terms(R, T, {0: ci}) for ci in c]
    z = [TSeries.zeros(R, T) for _ in c]
    V = [vec0] + [list(z) for _ in range(n_max)]
    for i in range(germ.twist_limit, -1, -1):
        A, B = F_blocks(view, i)
        new = []
        for k in range(n_max + 1):
            out = [s for s in V[k]]
            out = [o + _dot(B[r], V[k]) for r, o in enumerate(out)]
            if k:
                out = [o + _dot(A[r], V[k - 1]) for r, o in enumerate(out)]
            new.append(out)
        V = new
    return V


def _dot(row: Sequence[TSeries], vec: Sequence[TSeries]) -> TSeries:
    acc = TSeries.zeros(vec[0].ring, vec[0].T)
    for a, b in zip(row, vec):
        if not a.is_zero() and not b.is_zero():
            acc = acc + a * b
    return acc


# -- closed form -------------------------------------------------------------------


def _chains(last: int, length: int, first_min: int = 0) -> Iterable[tuple[int, ...]]:
    if length == 0:
        yield ()
        return
    yield from itertools.combinations(range(first_min, last + 1), length)


def F_infty_closed(model: SuperspecialModel, germ: WGerm | GermView, n_max: int) -> list[dict[str, Matrix]]:
    """Blocks X_n, Y_n, Z_n, W_n for n = 1..n_max by the chain sums."""
    view = germ if isinstance(germ, GermView) else GermView.from_wgerm(germ)
    m = model.m
    R, T = view.ring, view.T
    half = _half(R)
    last = view.last_index
    out = []
    for n in range(1, n_max + 1):
        X = [[TSeries.zeros(R, T) for _ in range(2)] for _ in range(2)]
        Y = [[TSeries.zeros(R, T) for _ in range(2 * m)] for _ in range(2)]
        Z = [[TSeries.zeros(R, T) for _ in range(2)] for _ in range(2 * m)]
        W = [[TSeries.zeros(R, T) for _ in range(2 * m)] for _ in range(2 * m)]
        # X_n
        for ch in _chains(last, 2 * n):
            if not delta_chain(ch[1:-1]):
                continue
            q = _q_chain(view, ch)
            if q is None:
                continue
            q = q.scale(half)
            left = [R.elem(1), view.lam_tw(ch[0]).inverse()]
            right = [R.elem(1), -view.lam_tw(ch[-1])]
            for r in range(2):
                for c in range(2):
                    X[r][c] = X[r][c] + q.scale(left[r] * right[c])
        # Y_n
        for ch in _chains(last, 2 * n - 1):
            if not delta_chain(ch[1:]):
                continue
            q = _q_chain(view, ch[:-1])
            if q is None:
                continue
            q = q.scale(half)
            left = [R.elem(1), view.lam_tw(ch[0]).inverse()]
            xs, ys = view.gens(ch[-1])
            row = xs + ys
            for r in range(2):
                ql = q.scale(left[r])
                for c in range(2 * m):
                    if not row[c].is_zero():
                        Y[r][c] = Y[r][c] + ql * row[c]
        # Z_n
        for ch in _chains(last, 2 * n + 1):
            if not delta_chain(ch[:-1]):
                continue
            q = _q_chain(view, ch[1:])
            if q is None:
                continue
            xs, ys = view.gens(ch[0])
            col = [-s for s in ys] + [-s for s in xs]
            right = [R.elem(1), -view.lam_tw(ch[-1])]
            for r in range(2 * m):
                if col[r].is_zero():
                    continue
                base = q * col[r]
                for c in range(2):
                    Z[r][c] = Z[r][c] + base.scale(right[c])
        # W_n
        for ch in _chains(last, 2 * n):
            if not delta_chain(ch):
                continue
            q = _q_chain(view, ch[1:-1])
            if q is None:
                continue
            xs0, ys0 = view.gens(ch[0])
            col = [-s for s in ys0] + [-s for s in xs0]
            xs1, ys1 = view.gens(ch[-1])
            row = xs1 + ys1
            for r in range(2 * m):
                if col[r].is_zero():
                    continue
                base = q * col[r]
                for c in range(2 * m):
                    if not row[c].is_zero():
                        W[r][c] = W[r][c] + base * row[c]
        out.append({"X": X, "Y": Y, "Z": Z, "W": W})
    return out


def assemble_blocks(blocks: dict[str, Matrix]) -> Matrix:
    X, Y, Z, W = blocks["X"], blocks["Y"], blocks["Z"], blocks["W"]
    return [X[r] + Y[r] for r in range(2)] + [Z[r] + W[r] for r in range(len(Z))]


# -- U_n and D_n ---------------------------------------------------------------------


def U_closed(model: SuperspecialModel, view: GermView, n: int) -> list[TSeries]:
    """First row of [X_n^+ Y_n^+] (chains with i_1 even) by the chain sums."""
    m = model.m
    R, T = view.ring, view.T
    half = _half(R)
    last = view.last_index
    U = [TSeries.zeros(R, T) for _ in range(2 * m + 2)]
    for ch in _chains(last, 2 * n):
        if ch[0] % 2 or not delta_chain(ch[1:-1]):
            continue
        q = _q_chain(view, ch)
        if q is None:
            continue
        q = q.scale(half)
        U[0] = U[0] + q
        U[1] = U[1] + q.scale(-view.lam_tw(ch[-1]))
    for ch in _chains(last, 2 * n - 1):
        if ch[0] % 2 or not delta_chain(ch[1:]):
            continue
        q = _q_chain(view, ch[:-1])
        if q is None:
            continue
        q = q.scale(half)
        xs, ys = view.gens(ch[-1])
        for c, s in enumerate(xs + ys):
            if not s.is_zero():
                U[2 + c] = U[2 + c] + q * s
    return U


def U_recursive(model: SuperspecialModel, view: GermView, n: int, _memo: dict | None = None) -> list[TSeries]:
    """U_n from U_1 by U_{k+1} = sum_{i1 even < i2} Q_{i2-i1}^{(i1)} U_k^{(1+i2)}."""
    memo = {} if _memo is None else _memo
    key = (n, view.shift)
    if key in memo:
        return memo[key]
    if n == 1:
        out = U_closed(model, view, 1)
    else:
        R, T = view.ring, view.T
        out = [TSeries.zeros(R, T) for _ in range(2 * model.m + 2)]
        last = view.last_index
        for i1 in range(0, last + 1, 2):
            for i2 in range(i1 + 1, last + 1):
                q = view.Q(i2 - i1, i1)
                if q.is_zero():
                    continue
                if 1 + i2 > last + 1:
                    continue
                sub = U_recursive(model, view.shifted(1 + i2), n - 1, memo)
                for c in range(len(out)):
                    if not sub[c].is_zero():
                        out[c] = out[c] + q * sub[c]
    memo[key] = out
    return out


def Ubar_sequence(model: SuperspecialModel, germ: CurveGerm, n_max: int) -> list[list[TSeries]]:
    """Reductions Ubar_1..Ubar_{n_max} over F via the recursion with Frobenius twists."""
    view = GermView.from_curve(germ)
    last = view.last_index
    U = [U_closed(model, view, 1)]
    for _ in range(1, n_max):
        prev = U[-1]
        R, T = view.ring, view.T
        nxt = [TSeries.zeros(R, T) for _ in prev]
        for i1 in range(0, last + 1, 2):
            for i2 in range(i1 + 1, last + 1):
                q = view.Q(i2 - i1, i1)
                if q.is_zero():
                    continue
                for c, s in enumerate(prev):
                    if not s.is_zero():
                        tw = s.twist(1 + i2)
                        if not tw.is_zero():
                            nxt[c] = nxt[c] + q * tw
        U.append(nxt)
    return U


def teichmuller_digits(value: int, p: int, K: int) -> list[int]:
    """Residues a_0..a_{K-1} with value = sum tau(a_k) p^k mod p^K."""
    ring = witt_ring(_prime_field(p), K)
    digits = []
    rest = value % p**K
    for k in range(K):
        a = rest % p
        digits.append(a)
        t = ring.teich_coords(ring.field(a))[0] if a else 0
        rest = (rest - t) % p**K
        if rest % p:
            raise ArithmeticError("digit extraction failed")
        rest //= p
    return digits


def _prime_field(p: int) -> FieldDescriptor:
    from .ffield import make_field
    return make_field(p, 1)


@dataclass(frozen=True)
class SpecialVector:
    """Integer coordinates of v in the basis (e', f', e_1..e_m, f_1..f_m)."""

    coords: tuple[int, ...]

    def digits(self, p: int, K: int) -> list[list[int]]:
        """c_k as lists of residues, k = 0..K-1."""
        per = [teichmuller_digits(c, p, K) for c in self.coords]
        return [[per[j][k] for j in range(len(self.coords))] for k in range(K)]

    def is_primitive(self, p: int) -> bool:
        return any(c % p for c in self.coords)

    def scaled(self, s: int) -> "SpecialVector":
        return SpecialVector(tuple(s * c for c in self.coords))


def _combine(U_list: Sequence[list[TSeries]], digits: Sequence[Sequence[WittElem | int]], n: int) -> TSeries | None:
    """2 sum_k U_{n+k} c_k; None when a needed U is unavailable."""
    first = U_list[0][0]
    acc = TSeries.zeros(first.ring, first.T)
    for k, ck in enumerate(digits):
        idx = n + k - 1
        if not any((c if isinstance(c, int) else c.valuation() is not None) for c in ck):
            continue
        if idx >= len(U_list):
            return None
        for j, c in enumerate(ck):
            s = U_list[idx][j]
            if s.is_zero():
                continue
            if isinstance(c, int):
                if c:
                    acc = acc + s.scale(c)
            else:
                acc = acc + s.scale(c)
    return acc.scale(2)


def dbar_n(model: SuperspecialModel, germ: CurveGerm, v: SpecialVector, n: int, n_extra: int = 6,
           U_list: Sequence[list[TSeries]] | None = None) -> TSeries:
    """Dbar_n(v) = 2 sum_k Ubar_{n+k} cbar_k over F."""
    p = model.p
    K = n_extra + 1
    digits = v.digits(p, K)
    tau_digits = []
    R1 = germ.x[0].ring
    for ck in digits:
        tau_digits.append([R1.elem(c) for c in ck])
    if U_list is None:
        U_list = Ubar_sequence(model, germ, n + K)
    out = _combine(U_list, tau_digits, n)
    if out is None:
        raise PrecisionExhausted("not enough U terms for the digit expansion")
    # the truncated digits must only hit U's that vanish mod t^T
    for k in range(K, K + 2):
        if n + k - 1 < len(U_list) and any(not s.is_zero() for s in U_list[n + k - 1]):
            raise PrecisionExhausted("Teichmuller digit expansion truncated too early")
    return out


def D_n(model: SuperspecialModel, germ: WGerm, v: SpecialVector, n: int, method: str = "recursive") -> TSeries:
    """D_n(v) = 2 sum_k U_{n+k} c_k over W_N[[t]]."""
    view = GermView.from_wgerm(germ)
    p, N = model.p, germ.ring.N
    digits = v.digits(p, N)
    ring = germ.ring
    tau = [[WittElem(ring, ring.teich_coords(ring.field(c)), 0) if c else ring.zero() for c in ck] for ck in digits]
    # U_{n+k} vanishes once the chain needs more indices than exist
    max_n = (view.last_index + 2) // 2 + 1
    memo: dict = {}
    U_list = []
    for j in range(1, max(n + N, 2)):
        if j > max_n:
            U_list.append([TSeries.zeros(ring, germ.T) for _ in range(model.rank)])
        elif method == "closed":
            U_list.append(U_closed(model, view, j))
        else:
            U_list.append(U_recursive(model, view, j, memo))
    out = _combine(U_list, tau, n)
    if out is None:
        raise PrecisionExhausted("not enough U terms")
    return out


def decay_rate(model: SuperspecialModel, germ: CurveGerm, v: SpecialVector, n: int,
               U_list: Sequence[list[TSeries]] | None = None) -> int | None:
    """d_n(v) = v_t(Dbar_n(v)); None means >= T."""
    return dbar_n(model, germ, v, n, U_list=U_list).valuation()


@dataclass
class DecayProfile:
    vector: SpecialVector
    d: dict[int, int | None]
    x_v_val: int | None

    def is_nondecreasing(self) -> bool:
        vals = [self.d[k] for k in sorted(self.d)]
        for a, b in zip(vals, vals[1:]):
            if a is None and b is not None:
                return False
            if a is not None and b is not None and b < a:
                return False
        return True

    def to_json(self) -> dict:
        return {"v": list(self.vector.coords),
                "d": {str(k): (v if v is not None else "ge_T") for k, v in sorted(self.d.items())},
                "x_v_val": self.x_v_val if self.x_v_val is not None else "ge_T"}


def decay_profile(model: SuperspecialModel, germ: CurveGerm, v: SpecialVector, n_max: int) -> DecayProfile:
    U_list = Ubar_sequence(model, germ, n_max + 8)
    d = {n: decay_rate(model, germ, v, n, U_list) for n in range(1, n_max + 1)}
    return DecayProfile(v, d, d.get(1))


def decay_rate_definitional(model: SuperspecialModel, germ: WGerm, v: SpecialVector, n: int,
                            J: int | None = None) -> int | None:
    """Smallest t-degree where p^{n-1} F_infty v fails to be p-integral.

    Uses the eps-graded product: p^{n-1} F_infty c = sum_j p^{n-1-j} G_j c.
    Requires N > J; J defaults to the largest grade the truncation allows.
    """
    ring = germ.ring
    view = GermView.from_wgerm(germ)
    if J is None:
        J = (view.last_index + 2) // 2 + 1
    if ring.N <= J:
        raise PrecisionExhausted(f"need p-adic precision N > {J}")
    c = [ring.elem(x) for x in v.coords]
    V = F_infty_apply(model, germ, c, J)
    p = model.p
    target = p ** (J - n + 1)
    T = germ.T
    S = [TSeries.zeros(ring, T) for _ in c]
    for j, vec in enumerate(V):
        f = p ** (J - j)
        S = [a + b.scale(f) for a, b in zip(S, vec)]
    for d in range(T):
        for s in S:
            if any(int(x) % target for x in s.data[d]):
                return d
    return None


def newton_vanishing_check(model: SuperspecialModel, germ: CurveGerm, h_max: int = 10) -> dict:
    """Assert Q_h = 0 for m <= h <= h_max when Q_0..Q_{m-1} vanish."""
    m = model.m
    for j in range(m):
        q, hv = q_series(model, germ, j)
        if hv is not None:
            raise StratumViolation(f"precondition fails: Q_{j} has valuation {hv}")
    checked = []
    for h in range(m, h_max + 1):
        q, hv = q_series(model, germ, h)
        if hv is not None:
            raise CounterexampleFound(f"Q_{h} has valuation {hv} < T={germ.T}")
        checked.append(h)
    return {"checked": checked, "T": germ.T, "pass": True}


def random_germ(rng: np.random.Generator, model: SuperspecialModel, T: int, a: int = 1, xdeg: int = 3,
                ydeg: int = 5) -> CurveGerm:
    """Polynomial germ with Q_0 = .. = Q_{a-1} = 0 exactly; a = m gives a Newton-stratum germ.

    The vanishing is solved on coefficients (see lineconfig), so it holds
    to every order, not only to the truncation T.
    """
    from .lineconfig import random_stratum_collection

    coll, _ = random_stratum_collection(rng, model.field, model.m, a, xdeg=xdeg, ydeg=ydeg)
    R1 = witt_ring(model.field, 1)

    def retrunc(s: TSeries) -> TSeries:
        return TSeries.from_terms(R1, T, {int(j): [int(c) for c in s.data[j]] for j in s.nonzero_rows()})

    return CurveGerm(model, [retrunc(s) for s in coll.x], [retrunc(s) for s in coll.y])


def random_paired_germ(rng: np.random.Generator, model: SuperspecialModel, T: int, deg: int = 3,
                       shift_max: int = 2) -> CurveGerm:
    """Germ whose products x_k y_k cancel in pairs with monomial ratios.

    x_{2j} = c t^s x_{2j-1} and y_{2j} = -c^{-1} t^{-s} y_{2j-1}, so every
    sigma^i(Q) vanishes exactly after the coefficientwise Teichmuller lift.
    Needs m even.
    """
    m, fld = model.m, model.field
    if m % 2:
        raise ValueError("paired germs need an even m")
    R1 = witt_ring(fld, 1)
    els = list(fld.elements())
    nonzero = [e for e in els if not e.is_zero()]

    def pick(pool):
        return pool[int(rng.integers(len(pool)))]

    xs, ys = [], []
    for _ in range(m // 2):
        s = int(rng.integers(1, shift_max + 1))
        c = pick(nonzero)
        vx = int(rng.integers(1, deg + 1))
        vy = s + int(rng.integers(1, deg + 1))
        x1 = {vx: pick(nonzero)} | {j: pick(els) for j in range(vx + 1, vx + deg)}
        y1 = {vy: pick(nonzero)} | {j: pick(els) for j in range(vy + 1, vy + deg)}
        X1, Y1 = TSeries.from_terms(R1, T, x1), TSeries.from_terms(R1, T, y1)
        X2 = X1 * TSeries.from_terms(R1, T, {s: c})
        Y2 = TSeries.from_terms(R1, T, {j - s: -(b * c.inverse()) for j, b in y1.items()})
        xs += [X1, X2]
        ys += [Y1, Y2]
    return CurveGerm(model, xs, ys)
