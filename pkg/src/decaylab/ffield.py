"""Exact arithmetic in F_p and F_{p^k} for odd p.

Elements of F_{p^k} are coefficient vectors in the power basis of a fixed
irreducible modulus.  Frobenius is applied through a precomputed F_p-linear
matrix, so iterates cost one matrix-vector product each.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from sympy import isprime

from .errors import DecayLabError, PrecisionExhausted

__all__ = [
    "FieldDescriptor",
    "FqElem",
    "make_field",
    "least_irreducible",
    "is_irreducible",
    "frobenius",
    "moore_matrix",
    "moore_det",
    "fp_rank",
    "hyper_independent",
]


# -- polynomial helpers over Z/n, coefficient lists low -> high --------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def poly_mul(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _trim([c % n for c in out])


def poly_divmod(a: Sequence[int], b: Sequence[int], p: int) -> tuple[list[int], list[int]]:
    """Division with remainder over F_p (b nonzero)."""
    a = _trim([c % p for c in a])
    b = _trim([c % p for c in b])
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv = pow(b[-1], -1, p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        c = a[-1] * inv % p
        s = len(a) - len(b)
        q[s] = c
        for i, bi in enumerate(b):
            a[s + i] = (a[s + i] - c * bi) % p
        _trim(a)
    return _trim(q), a


def poly_gcd(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a = _trim([c % p for c in a])
    b = _trim([c % p for c in b])
    while b:
        a, b = b, poly_divmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def poly_powmod(base: Sequence[int], e: int, mod: Sequence[int], p: int) -> list[int]:
    result = [1]
    b = poly_divmod(base, mod, p)[1]
    while e:
        if e & 1:
            result = poly_divmod(poly_mul(result, b, p), mod, p)[1]
        b = poly_divmod(poly_mul(b, b, p), mod, p)[1]
        e >>= 1
    return result


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Rabin's test: f of degree k is irreducible iff it has no factor of
    degree <= k/2, i.e. gcd(x^{p^i} - x, f) = 1 for 1 <= i <= k/2."""
    f = _trim([c % p for c in f])
    k = len(f) - 1
    if k < 1:
        return False
    if k == 1:
        return True
    x = [0, 1]
    xp = x
    for _ in range(1, k // 2 + 1):
        xp = poly_powmod(xp, p, f, p)
        diff = _trim([(a - b) % p for a, b in itertools.zip_longest(xp, x, fillvalue=0)])
        if len(poly_gcd(f, diff, p)) > 1:
            return False
    return True


def least_irreducible(p: int, k: int) -> list[int]:
    """Monic irreducible of degree k whose lower coefficients, read as the
    base-p integer c_0 + c_1 p + ..., are smallest."""
    for code in range(p**k):
        coeffs = [(code // p**i) % p for i in range(k)] + [1]
        if is_irreducible(coeffs, p):
            return coeffs
    raise DecayLabError(f"no irreducible polynomial of degree {k} over F_{p}")


# -- the field -----------------------------------------------------------------


@dataclass(frozen=True)
class FieldDescriptor:
    """F_{p^k} = F_p[u]/(modulus).  ``modulus`` is monic, low -> high, length k+1."""

    p: int
    k: int
    modulus: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.p < 3 or not isprime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.k < 1:
            raise ValueError("extension degree must be >= 1")
        if len(self.modulus) != self.k + 1 or self.modulus[-1] % self.p != 1:
            raise ValueError("modulus must be monic of degree k")
        if not is_irreducible(list(self.modulus), self.p):
            raise ValueError(f"modulus {list(self.modulus)} is reducible over F_{self.p}")

    @property
    def q(self) -> int:
        return self.p**self.k

    def __repr__(self) -> str:
        return f"F_{self.p}^{self.k}[{list(self.modulus)}]"

    def to_json(self) -> dict:
        return {"p": self.p, "k": self.k, "modulus": list(self.modulus)}

    # element constructors
    def __call__(self, value: int | Sequence[int] | "FqElem") -> "FqElem":
        if isinstance(value, FqElem):
            return value
        if isinstance(value, int):
            return FqElem(self, (value % self.p,) + (0,) * (self.k - 1))
        vals = [int(v) % self.p for v in value]
        if len(vals) > self.k:
            vals = self.reduce(vals)
        return FqElem(self, tuple(vals) + (0,) * (self.k - len(vals)))

    def zero(self) -> "FqElem":
        return self(0)

    def one(self) -> "FqElem":
        return self(1)

    def gen(self) -> "FqElem":
        """The class of u."""
        if self.k == 1:
            return self(-self.modulus[0])
        return self([0, 1])

    def from_index(self, idx: int) -> "FqElem":
        return self([(idx // self.p**i) % self.p for i in range(self.k)])

    def elements(self) -> Iterable["FqElem"]:
        for idx in range(self.q):
            yield self.from_index(idx)

    def prime_field(self) -> list["FqElem"]:
        return [self(a) for a in range(self.p)]

    def reduce(self, coeffs: Sequence[int]) -> list[int]:
        r = poly_divmod(coeffs, self.modulus, self.p)[1]
        return r + [0] * (self.k - len(r))

    # linear structure of Frobenius
    @cached_property
    def frob_matrix(self) -> tuple[tuple[int, ...], ...]:
        """Column j holds the coordinates of (u^j)^p."""
        cols = []
        for j in range(self.k):
            basis = [0] * j + [1]
            cols.append(self.reduce(poly_powmod(basis, self.p, self.modulus, self.p)))
        return tuple(tuple(cols[j][i] for j in range(self.k)) for i in range(self.k))

    def frob_vec(self, v: Sequence[int], i: int = 1) -> tuple[int, ...]:
        i %= self.k
        m = self.frob_matrix
        out = tuple(v)
        for _ in range(i):
            out = tuple(sum(m[r][c] * out[c] for c in range(self.k)) % self.p for r in range(self.k))
        return out

    def mul_vec(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.reduce(poly_mul(a, b, self.p)))


def make_field(p: int, k: int = 1, modulus: Sequence[int] | None = None) -> FieldDescriptor:
    """Build F_{p^k}; with no modulus the least irreducible one is chosen."""
    if modulus is None:
        modulus = least_irreducible(p, k)
    return FieldDescriptor(p, k, tuple(int(c) % p for c in modulus))


@dataclass(frozen=True)
class FqElem:
    field: FieldDescriptor = field(repr=False)
    coeffs: tuple[int, ...]

    def _coerce(self, other) -> "FqElem":
        if isinstance(other, FqElem):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        return self.field(other)

    def __add__(self, other) -> "FqElem":
        o = self._coerce(other)
        return FqElem(self.field, tuple((a + b) % self.field.p for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self) -> "FqElem":
        return FqElem(self.field, tuple(-a % self.field.p for a in self.coeffs))

    def __sub__(self, other) -> "FqElem":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FqElem":
        return self._coerce(other) - self

    def __mul__(self, other) -> "FqElem":
        o = self._coerce(other)
        return FqElem(self.field, self.field.mul_vec(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "FqElem":
        if e < 0:
            return self.inverse() ** (-e)
        result = self.field.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "FqElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a finite field")
        return self ** (self.field.q - 2)

    def __truediv__(self, other) -> "FqElem":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "FqElem":
        return self._coerce(other) * self.inverse()

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.field(other)
        if not isinstance(other, FqElem):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.field, self.coeffs))

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def in_prime_field(self) -> bool:
        return not any(self.coeffs[1:])

    def index(self) -> int:
        return sum(c * self.field.p**i for i, c in enumerate(self.coeffs))

    def frobenius(self, i: int = 1) -> "FqElem":
        return FqElem(self.field, self.field.frob_vec(self.coeffs, i))

    def __repr__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                mono = "" if i == 0 else ("u" if i == 1 else f"u^{i}")
                terms.append(f"{c}{'*' + mono if mono else ''}" if c != 1 or not mono else mono)
        return "+".join(terms) or "0"


def frobenius(x: FqElem, i: int) -> FqElem:
    """x^(p^i)."""
    if i < 0:
        raise ValueError("Frobenius iterate must be non-negative")
    return x.frobenius(i)


# -- linear algebra ------------------------------------------------------------


def _det_fq(rows: list[list[FqElem]], F: FieldDescriptor) -> FqElem:
    n = len(rows)
    a = [list(r) for r in rows]
    det = F.one()
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            return F.zero()
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det = det * a[col][col]
        inv = a[col][col].inverse()
        for r in range(col + 1, n):
            if not a[r][col].is_zero():
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


def moore_matrix(v: Sequence[FqElem]) -> list[list[FqElem]]:
    """Row j is the j-th Frobenius twist of v (rows indexed from 0)."""
    return [[x.frobenius(j) for x in v] for j in range(len(v))]


def moore_det(v: Sequence[FqElem]) -> FqElem:
    if not v:
        raise ValueError("moore_det needs at least one entry")
    return _det_fq(moore_matrix(v), v[0].field)


def fp_rank_vectors(vectors: Sequence[Sequence[int]], p: int) -> int:
    """Rank over F_p of integer vectors."""
    rows = [[c % p for c in v] for v in vectors]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [c * inv % p for c in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(x - f * y) % p for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def fp_rank(v: Sequence[FqElem]) -> int:
    """Dimension of the F_p-span of the given elements."""
    if not v:
        return 0
    return fp_rank_vectors([x.coeffs for x in v], v[0].field.p)


def hyper_independent(series: Sequence, allow_zero: bool = False) -> bool:
    """F_p-hyper-independence of truncated series over F_{p^k}.

    Within each valuation class the leading coefficients must be
    F_p-independent.  A series with no nonzero coefficient below its
    truncation has undetermined valuation; that raises PrecisionExhausted
    unless ``allow_zero`` declares such series to be exactly zero.
    """
    if not series:
        return True
    T = {s.T for s in series}
    if len(T) != 1:
        raise ValueError("all series must share one truncation order")
    classes: dict[int, list[tuple[int, ...]]] = {}
    p = series[0].ring.p
    for s in series:
        v = s.valuation_mod_p()
        if v is None:
            if allow_zero:
                continue
            raise PrecisionExhausted("series vanishes below truncation; valuation undecidable")
        classes.setdefault(v, []).append(s.leading_mod_p())
    return all(fp_rank_vectors(lead, p) == len(lead) for lead in classes.values())
