"""Quadratic lattices, mod-p forms and local densities."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegenerateForm, ResourceLimit

__all__ = [
    "QuadLattice",
    "ModPForm",
    "DEFAULT_BUDGET",
    "local_density_bruteforce",
    "representation_counts",
    "chi_classify",
    "local_density_selfdual",
    "local_density_unit",
    "build_L0",
    "dual_index",
    "padic_smith_valuations",
    "vp",
    "legendre",
    "stable_exponent",
    "all_forms",
    "form_from_upper",
]

DEFAULT_BUDGET = 10**8


def vp(n: int | Fraction, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    n = Fraction(n)
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    num, den = n.numerator, n.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _rank_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    m = [[x % p for x in r] for r in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], p - 2, p)
        m[rank] = [x * inv % p for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][c]:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank


def _det_int(g: Sequence[Sequence[int]]) -> int:
    n = len(g)
    if n == 0:
        return 1
    m = [[Fraction(x) for x in r] for r in g]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            if f:
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return int(det)


@dataclass(frozen=True)
class QuadLattice:
    """Integral lattice given by its Gram matrix of the pairing.

    With convention "half" the quadratic form is Q(v) = <v,v>/2 and the
    lattice must be even; with "full" it is Q(v) = <v,v>.
    """

    gram: tuple[tuple[int, ...], ...]
    convention: str = "half"

    def __post_init__(self) -> None:
        g = tuple(tuple(int(x) for x in r) for r in self.gram)
        object.__setattr__(self, "gram", g)
        n = len(g)
        if any(len(r) != n for r in g):
            raise ValueError("Gram matrix must be square")
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise ValueError("Gram matrix must be symmetric")
        if self.convention not in ("half", "full"):
            raise ValueError("convention must be 'half' or 'full'")
        if self.convention == "half" and any(g[i][i] % 2 for i in range(n)):
            raise ValueError("half convention needs an even lattice")

    @classmethod
    def from_json(cls, obj: dict) -> "QuadLattice":
        return cls(tuple(map(tuple, obj["gram"])), obj.get("convention", "half"))

    def to_json(self) -> dict:
        return {"gram": [list(r) for r in self.gram], "convention": self.convention}

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def is_even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    def det(self) -> int:
        return _det_int(self.gram)

    def Q(self, v: Sequence[int]) -> int:
        s = sum(v[i] * self.gram[i][j] * v[j] for i in range(self.rank) for j in range(self.rank))
        return s // 2 if self.convention == "half" else s

    def quadratic_coefficients(self) -> dict[tuple[int, int], int]:
        """Coefficients of Q as a polynomial: {(i,j): c} for i <= j."""
        g, n = self.gram, self.rank
        half = self.convention == "half"
        out = {}
        for i in range(n):
            out[(i, i)] = g[i][i] // 2 if half else g[i][i]
            for j in range(i + 1, n):
                out[(i, j)] = g[i][j] if half else 2 * g[i][j]
        return out

    def direct_sum(self, other: "QuadLattice") -> "QuadLattice":
        if other.convention != self.convention:
            raise ValueError("conventions differ")
        n, m = self.rank, other.rank
        g = [[0] * (n + m) for _ in range(n + m)]
        for i in range(n):
            for j in range(n):
                g[i][j] = self.gram[i][j]
        for i in range(m):
            for j in range(m):
                g[n + i][n + j] = other.gram[i][j]
        return QuadLattice(tuple(map(tuple, g)), self.convention)

    def transform(self, B: Sequence[Sequence[int]]) -> "QuadLattice":
        """Gram of the basis given by the rows of B."""
        b = np.array(B, dtype=object)
        g = b.dot(np.array(self.gram, dtype=object)).dot(b.T)
        return QuadLattice(tuple(tuple(int(x) for x in r) for r in g), self.convention)

    def mod_p(self, p: int) -> "ModPForm":
        """The quadratic form Q mod p written as x^T A x (p odd)."""
        if p == 2:
            raise ValueError("mod-p forms are only used for odd p")
        n = self.rank
        inv2 = pow(2, p - 2, p)
        if self.convention == "half":
            a = [[self.gram[i][j] * inv2 % p for j in range(n)] for i in range(n)]
        else:
            a = [[self.gram[i][j] % p for j in range(n)] for i in range(n)]
        return ModPForm(p, tuple(map(tuple, a)))


def representation_counts(L: QuadLattice, modulus: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """counts[c] = #{v in L/modulus : Q(v) = c mod modulus}."""
    n = L.rank
    if modulus**n > budget:
        raise ResourceLimit(f"enumeration of {modulus}^{n} vectors exceeds budget {budget}")
    coeffs = L.quadratic_coefficients()
    if n == 0:
        out = np.zeros(modulus, dtype=np.int64)
        out[0] = 1
        return out
    # enumerate the first n-1 coordinates in blocks, the last one vectorized
    r = np.arange(modulus, dtype=np.int64)
    counts = np.zeros(modulus, dtype=np.int64)
    # Q(v) = A(v') + v_n * B(v') + c_nn v_n^2
    last = n - 1
    head = [r] * (n - 1)
    grids = np.meshgrid(*head, indexing="ij") if n > 1 else []
    flat = [g.ravel() for g in grids]
    size = flat[0].size if flat else 1
    A = np.zeros(size, dtype=np.int64)
    B = np.zeros(size, dtype=np.int64)
    for (i, j), c in coeffs.items():
        c %= modulus
        if not c:
            continue
        if j == last and i == last:
            continue
        if j == last:
            B = (B + c * flat[i]) % modulus
        else:
            A = (A + c * (flat[i] * flat[j] % modulus)) % modulus
    cnn = coeffs[(last, last)] % modulus
    chunk = max(1, 2_000_000 // modulus)
    sq = r * r % modulus
    for s in range(0, size, chunk):
        a = A[s:s + chunk, None]
        b = B[s:s + chunk, None]
        vals = (a + b * r[None, :] + cnn * sq[None, :]) % modulus
        counts += np.bincount(vals.ravel(), minlength=modulus)
    return counts


def local_density_bruteforce(l: int, L: QuadLattice, m: int, a: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    """l^{a(1-rk)} #{v in L/l^a : Q(v) = m mod l^a}."""
    if a < 1:
        raise ValueError("exponent a must be >= 1")
    mod = l**a
    counts = representation_counts(L, mod, budget)
    return Fraction(int(counts[m % mod]), 1) * Fraction(l) ** (a * (1 - L.rank))


def stable_exponent(l: int, m: int) -> int:
    """Smallest a with a >= 1 + 2 v_l(2m)."""
    return 1 + 2 * vp(2 * m, l)


@dataclass(frozen=True)
class ModPForm:
    """Quadratic form x^T A x over F_p, p odd."""

    p: int
    gram: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        g = tuple(tuple(int(x) % self.p for x in r) for r in self.gram)
        object.__setattr__(self, "gram", g)
        n = len(g)
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise ValueError("form matrix must be symmetric")

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def radical_dim(self) -> int:
        if self.rank == 0:
            return 0
        return self.rank - _rank_mod_p(self.gram, self.p)

    def is_nondegenerate(self) -> bool:
        return self.radical_dim == 0

    def det(self) -> int:
        return _det_int(self.gram) % self.p

    def scaled(self, alpha: int) -> "ModPForm":
        return ModPForm(self.p, tuple(tuple(alpha * x for x in r) for r in self.gram))

    def direct_sum(self, other: "ModPForm") -> "ModPForm":
        n, m = self.rank, other.rank
        g = [[0] * (n + m) for _ in range(n + m)]
        for i in range(n):
            for j in range(n):
                g[i][j] = self.gram[i][j]
        for i in range(m):
            for j in range(m):
                g[n + i][n + j] = other.gram[i][j]
        return ModPForm(self.p, tuple(map(tuple, g)))

    def nondegenerate_quotient(self) -> "ModPForm":
        """A diagonal form isometric to the one induced on V / radical."""
        return _quotient_by_elimination(self)

    def count(self, M: int) -> int:
        L = QuadLattice(self.gram, "full")
        return int(representation_counts(L, self.p)[M % self.p])


def _quotient_by_elimination(f: ModPForm) -> ModPForm:
    """Diagonalize f by symmetric elimination and keep the nonzero entries."""
    p, n = f.p, f.rank
    a = [list(r) for r in f.gram]
    diag: list[int] = []
    active = list(range(n))
    while active:
        piv = next((i for i in active if a[i][i] % p), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if i < j and a[i][j] % p), None)
            if pair is None:
                break
            i, j = pair
            # replace e_i by e_i + e_j, which has Q = 2 a_ij != 0
            for k in range(n):
                a[i][k] = (a[i][k] + a[j][k]) % p
            for k in range(n):
                a[k][i] = (a[k][i] + a[k][j]) % p
            piv = i
        d = a[piv][piv] % p
        inv = pow(d, p - 2, p)
        for i in active:
            if i != piv and a[i][piv] % p:
                c = a[i][piv] * inv % p
                for k in range(n):
                    a[i][k] = (a[i][k] - c * a[piv][k]) % p
                for k in range(n):
                    a[k][i] = (a[k][i] - c * a[k][piv]) % p
        diag.append(d)
        active.remove(piv)
    return ModPForm(p, tuple(tuple(d if i == j else 0 for j in range(len(diag))) for i, d in enumerate(diag)))


def chi_classify(f: ModPForm) -> int:
    """0 for odd rank, +1 split, -1 nonsplit."""
    if not f.is_nondegenerate():
        raise DegenerateForm(f"form has radical of dimension {f.radical_dim}")
    n = f.rank
    if n % 2:
        return 0
    if n == 0:
        return 1
    disc = (-1) ** (n // 2) * f.det()
    return legendre(disc, f.p)


def local_density_selfdual(f: ModPForm, M: int) -> Fraction:
    """Closed-form density of a self-dual lattice with reduction f at a unit M."""
    p = f.p
    if M % p == 0:
        raise ValueError("M must be coprime to p")
    chi1 = chi_classify(f)
    chi2 = chi_classify(ModPForm(p, ((M,),)).direct_sum(f.scaled(-1)))
    n = f.rank
    return _times_sqrt_pow(Fraction(1), -chi1, p, -n) * _times_sqrt_pow(Fraction(1), chi2, p, 1 - n)


def _times_sqrt_pow(one: Fraction, sign: int, p: int, e: int) -> Fraction:
    """1 + sign * p^{e/2}; e is even whenever sign is nonzero."""
    if sign == 0:
        return one
    if e % 2:
        raise ValueError("odd half-exponent with nonzero character")
    return one + sign * Fraction(p) ** (e // 2)


def local_density_unit(p: int, L: QuadLattice, M: int) -> Fraction:
    """Density at a unit M for any Z_p-lattice with p odd.

    The unimodular Jordan component splits off; the rest represents only
    multiples of p and contributes nothing at a unit, so the density is the
    closed form on the nondegenerate quotient of the reduction.
    """
    f = L.mod_p(p).nondegenerate_quotient()
    if f.rank == 0:
        return Fraction(0)
    return local_density_selfdual(f, M)


def build_L0(p: int, lam2: int) -> QuadLattice:
    """Rank-2 lattice with Gram diag(2p, -2 lam^2 p)."""
    if p % 2 == 0:
        raise ValueError("p must be odd")
    return QuadLattice(((2 * p, 0), (0, -2 * lam2 * p)), "half")


def padic_smith_valuations(mat: Sequence[Sequence[int | Fraction]], p: int) -> list[int]:
    """Valuations of the elementary divisors of a nonsingular rational matrix over Z_p."""
    m = [[Fraction(x) for x in r] for r in mat]
    n = len(m)
    if n == 0:
        return []
    cols = len(m[0])
    out: list[int] = []
    rows_left = list(range(n))
    cols_left = list(range(cols))
    while rows_left and cols_left:
        best = None
        for i in rows_left:
            for j in cols_left:
                if m[i][j] != 0:
                    v = vp(m[i][j], p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
        if best is None:
            raise DegenerateForm("matrix is singular")
        v, pi, pj = best
        out.append(v)
        piv = m[pi][pj]
        for i in rows_left:
            if i != pi and m[i][pj] != 0:
                f = m[i][pj] / piv
                m[i] = [x - f * y for x, y in zip(m[i], m[pi])]
        for j in cols_left:
            if j != pj and m[pi][j] != 0:
                f = m[pi][j] / piv
                for i in rows_left:
                    m[i][j] -= f * m[i][pj]
        rows_left.remove(pi)
        cols_left.remove(pj)
    if rows_left:
        raise DegenerateForm("matrix is not square or singular")
    return sorted(out)


def dual_index(L: QuadLattice, p: int) -> int:
    """[L^dual : L] at p, i.e. the p-part of |det gram|."""
    vals = padic_smith_valuations(L.gram, p)
    e = sum(vals)
    if any(v < 0 for v in vals):
        raise ValueError("pairing is not integral")
    return p**e


def all_forms(p: int, n: int) -> itertools.product:
    """Every symmetric n x n matrix over F_p as upper-triangular entry tuples."""
    return itertools.product(range(p), repeat=n * (n + 1) // 2)


def form_from_upper(p: int, n: int, upper: Sequence[int]) -> ModPForm:
    g = [[0] * n for _ in range(n)]
    it = iter(upper)
    for i in range(n):
        for j in range(i, n):
            g[i][j] = g[j][i] = next(it)
    return ModPForm(p, tuple(map(tuple, g)))


def _form_entry_positions(n: int) -> dict[tuple[int, int], int]:
    pos, k = {}, 0
    for i in range(n):
        for j in range(i, n):
            pos[(i, j)] = k
            k += 1
    return pos


def enumerate_form_counts(p: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Representation counts of every symmetric n x n form x^T A x over F_p.

    Returns (uppers, dets, counts): uppers[f] is the upper-triangular entry
    tuple of form f in the order of ``form_from_upper``, dets[f] its
    determinant mod p and counts[f, c] = #{x in F_p^n : x^T A x = c}.

    Every vector is enumerated; the last coordinate is summed through a
    precomputed table of point counts of a x^2 + l x + q = c, which keeps
    the rank-4 sweep over F_5 at a few seconds.
    """
    if n < 1:
        raise ValueError("rank must be >= 1")
    pos = _form_entry_positions(n)
    x = np.arange(p)
    # roots[a, q, l, c] = #{x : a x^2 + l x + q = c}
    vals = (x[None, None, None, :] ** 2 * x[:, None, None, None] + x[None, None, :, None] * x[None, None, None, :]
            + x[None, :, None, None]) % p
    roots = np.zeros((p, p, p, p), dtype=np.int64)
    for c in range(p):
        roots[..., c] = (vals == c).sum(axis=-1)
    if n == 1:
        uppers = x[:, None].copy()
        counts = roots[x, 0, 0, :]
        return uppers, x % p, counts
    m = n - 1
    prev_pos = _form_entry_positions(m)
    prev_uppers = np.array(list(itertools.product(range(p), repeat=len(prev_pos))), dtype=np.int64)
    vecs = np.array(list(itertools.product(range(p), repeat=m)), dtype=np.int64)
    mon = np.zeros((len(vecs), len(prev_pos)), dtype=np.int64)
    for (i, j), k in prev_pos.items():
        mon[:, k] = vecs[:, i] * vecs[:, j] * (1 if i == j else 2)
    qv = (prev_uppers @ mon.T) % p  # (K', P')
    bs = vecs  # linear parts b, same enumeration
    lv = (2 * bs @ vecs.T) % p  # (B, P')
    one_l = np.zeros((len(bs), len(vecs), p), dtype=np.float64)
    np.put_along_axis(one_l, lv[..., None], 1.0, axis=2)
    one_l = one_l.transpose(1, 0, 2).reshape(len(vecs), len(bs) * p)  # (P', B*l)
    Kp, B = len(prev_uppers), len(bs)
    counts = np.zeros((Kp, B, p, p), dtype=np.int64)
    chunk = max(1, 400_000 // (len(vecs)))
    roots_flat = roots.transpose(1, 2, 0, 3).reshape(p * p, p * p)  # (q*l, a*c)
    for s in range(0, Kp, chunk):
        q = qv[s:s + chunk]
        one_q = np.zeros((len(q), len(vecs), p), dtype=np.float64)
        np.put_along_axis(one_q, q[..., None], 1.0, axis=2)
        one_q = one_q.transpose(0, 2, 1).reshape(len(q) * p, len(vecs))
        H = np.rint(one_q @ one_l).astype(np.int64).reshape(len(q), p, B, p)  # f', q, b, l
        H = H.transpose(0, 2, 1, 3).reshape(len(q) * B, p * p)
        counts[s:s + chunk] = (H @ roots_flat).reshape(len(q), B, p, p)
    # assemble uppers in canonical order
    K = Kp * B * p
    uppers = np.zeros((K, len(pos)), dtype=np.int64)
    fi, bi, ai = np.meshgrid(np.arange(Kp), np.arange(B), np.arange(p), indexing="ij")
    fi, bi, ai = fi.ravel(), bi.ravel(), ai.ravel()
    for (i, j), k in prev_pos.items():
        uppers[:, pos[(i, j)]] = prev_uppers[fi, k]
    for i in range(m):
        uppers[:, pos[(i, m)]] = bs[bi, i]
    uppers[:, pos[(m, m)]] = ai
    full = np.zeros((K, n, n), dtype=np.float64)
    for (i, j), k in pos.items():
        full[:, i, j] = uppers[:, k]
        full[:, j, i] = uppers[:, k]
    dets = np.rint(np.linalg.det(full)).astype(np.int64) % p
    return uppers, dets, counts.reshape(K, p)


# -- exact counting by Hensel recursion ---------------------------------------


def _poly_coeffs(L: QuadLattice) -> tuple[tuple[int, ...], ...]:
    """Upper-triangular coefficient matrix q with Q(v) = sum_{i<=j} q_ij v_i v_j."""
    c = L.quadratic_coefficients()
    n = L.rank
    return tuple(tuple(c[(i, j)] if j >= i else 0 for j in range(n)) for i in range(n))


def _bilinear(q: Sequence[Sequence[int]]) -> list[list[int]]:
    n = len(q)
    return [[2 * q[i][i] if i == j else (q[i][j] if i < j else q[j][i]) for j in range(n)] for i in range(n)]


def _kernel_mod(mat: Sequence[Sequence[int]], l: int) -> tuple[list[list[int]], list[int]]:
    """Right kernel of mat mod l (l prime): basis vectors and their free columns.

    Basis vector k has entry 1 in free column k and 0 in the other free columns.
    """
    n = len(mat)
    m = [[x % l for x in r] for r in mat]
    pivots: list[int] = []
    rank = 0
    for c in range(n):
        piv = next((i for i in range(rank, n) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], l - 2, l)
        m[rank] = [x * inv % l for x in m[rank]]
        for i in range(n):
            if i != rank and m[i][c]:
                f = m[i][c]
                m[i] = [(x - f * y) % l for x, y in zip(m[i], m[rank])]
        pivots.append(c)
        rank += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for r, pc in enumerate(pivots):
            v[pc] = (-m[r][fc]) % l
        basis.append(v)
    return basis, free


def _restrict(q: Sequence[Sequence[int]], basis: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Coefficient matrix of Q restricted to the span of ``basis``."""
    B = _bilinear(q)
    n = len(q)

    def Qv(v):
        return sum(q[i][j] * v[i] * v[j] for i in range(n) for j in range(i, n))

    def Bv(v, w):
        return sum(v[i] * B[i][j] * w[j] for i in range(n) for j in range(n))

    k = len(basis)
    return tuple(tuple(Qv(basis[i]) if i == j else (Bv(basis[i], basis[j]) if i < j else 0) for j in range(k))
                 for i in range(k))


def _count_good(q: Sequence[Sequence[int]], l: int, m: int) -> tuple[int, int]:
    """(#{v mod l : grad(v) != 0, Q(v) = m mod l}, l-rank of the gradient map)."""
    n = len(q)
    B = _bilinear(q)
    good = 0
    for v in itertools.product(range(l), repeat=n):
        g = any(sum(B[i][j] * v[j] for j in range(n)) % l for i in range(n))
        if g and sum(q[i][j] * v[i] * v[j] for i in range(n) for j in range(i, n)) % l == m % l:
            good += 1
    return good, _rank_mod_p(B, l)


def count_solutions(L: QuadLattice, l: int, m: int, a: int) -> int:
    """#{v in L/l^a L : Q(v) = m mod l^a} by Hensel recursion.

    Classes mod l with nonzero gradient lift uniformly; the rest lie in a
    sublattice on which the recursion continues.  For l = 2 the lift needs
    a nonzero gradient mod 2, which fails for odd forms with a vanishing
    bilinear reduction; those fall back to enumeration.
    """
    return _count(_poly_coeffs(L), l, m, a)


def _count(q: tuple[tuple[int, ...], ...], l: int, m: int, a: int) -> int:
    n = len(q)
    if a <= 0:
        return 1
    if n == 0:
        return 1 if m % l**a == 0 else 0
    B = _bilinear(q)
    if all(x % l == 0 for r in B for x in r):
        if all(x % l == 0 for r in q for x in r):
            # Q = l * Q1
            if m % l:
                return 0
            q1 = tuple(tuple(x // l for x in r) for r in q)
            return l**n * _count(q1, l, m // l, a - 1)
        if l**(a * n) > 10**7:
            raise ResourceLimit("odd 2-adic form with vanishing bilinear reduction; enumeration too large")
        full = QuadLattice(tuple(tuple(q[min(i, j)][max(i, j)] * (2 if i == j else 1) for j in range(n))
                                 for i in range(n)), "half")
        return int(representation_counts(full, l**a)[m % l**a])
    good, rbar = _count_good(q, l, m)
    total = good * l ** ((a - 1) * (n - 1))
    ker, free = _kernel_mod(B, l)
    # basis of L' = {v : B v = 0 mod l}: lifted kernel vectors plus l*e_i
    basis = [list(v) for v in ker]
    for i in range(n):
        if i not in free:
            e = [0] * n
            e[i] = l
            basis.append(e)
    q2 = _restrict(q, basis)
    # L'/l^a L counted through L'/l^a L' divided by [l^a L : l^a L'] = l^rbar
    sub = _count(q2, l, m, a)
    return total + sub // l**rbar


def local_density(l: int, L: QuadLattice, m: int, a: int | None = None) -> Fraction:
    """Stable local density via the Hensel recursion (exact)."""
    if a is None:
        a = stable_exponent(l, m)
    return Fraction(count_solutions(L, l, m, a)) * Fraction(l) ** (a * (1 - L.rank))
