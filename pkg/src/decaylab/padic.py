"""Truncated unramified p-adic rings W_N(F_{p^k}) and power series over them.

The ring is presented as Z/p^N[X]/(F) where F is the Hensel lift of the
field modulus that divides X^{p^k} - X.  With that choice X is itself a
Teichmuller element and the Witt vector Frobenius is X -> X^p, so sigma is
a fixed k x k integer matrix.

Univariate series in t are dense numpy arrays of shape (T, k).  Multivariate
series in x_1..x_m, y_1..y_m are sparse dicts truncated in total degree.
Both carry a single p-exponent e: the stored data d represents p^e * d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FieldTooSmall, PrecisionExhausted
from .ffield import FieldDescriptor, FqElem

__all__ = [
    "WittRing",
    "WittElem",
    "TSeries",
    "MSeries",
    "witt_ring",
    "teichmuller",
    "lambda_element",
    "series_sigma_twist",
    "curve_lift",
    "DEFAULT_N",
    "DEFAULT_T",
    "DEFAULT_D",
    "DEFAULT_N_DEN",
]

DEFAULT_N = 8
DEFAULT_T = 64
DEFAULT_D = 12
DEFAULT_N_DEN = 8

_INT64_BUDGET = 2**62


def _polymulmod(a: Sequence[int], b: Sequence[int], mod: Sequence[int], n: int) -> list[int]:
    """a*b reduced by the monic polynomial ``mod`` and by n."""
    k = len(mod) - 1
    prod = [0] * (2 * k - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] += ai * bj
    for d in range(2 * k - 2, k - 1, -1):
        c = prod[d] % n
        if c:
            for i in range(k):
                prod[d - k + i] -= c * mod[i]
        prod[d] = 0
    return [c % n for c in prod[:k]]


def _polypowmod(a: Sequence[int], e: int, mod: Sequence[int], n: int) -> list[int]:
    k = len(mod) - 1
    result = [1] + [0] * (k - 1)
    base = list(a)
    while e:
        if e & 1:
            result = _polymulmod(result, base, mod, n)
        base = _polymulmod(base, base, mod, n)
        e >>= 1
    return result


class WittRing:
    """W_N(F_{p^k}) as Z/p^N[X]/(F)."""

    def __init__(self, field: FieldDescriptor, N: int):
        if N < 1:
            raise ValueError("p-adic precision N must be >= 1")
        self.field = field
        self.p = field.p
        self.k = field.k
        self.N = N
        self.pN = self.p**N
        self.modulus = self._hensel_modulus()
        self.dtype = object if (self.pN - 1) ** 2 * self.k * 8192 >= _INT64_BUDGET else np.int64

    def __repr__(self) -> str:
        return f"W_{self.N}({self.field!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, WittRing) and (self.field, self.N) == (other.field, other.N)

    def __hash__(self) -> int:
        return hash((self.field, self.N))

    def _hensel_modulus(self) -> tuple[int, ...]:
        p, k, N, n = self.p, self.k, self.N, self.pN
        g = [c % n for c in self.field.modulus]
        q = p**k
        # Teichmuller root of g inside Z/p^N[X]/(g): iterate y -> y^q.
        xi = [0, 1] + [0] * (k - 2) if k > 1 else [(-g[0]) % n]
        for _ in range(N):
            xi = _polypowmod(xi, q, g, n)
        conj = [xi]
        for _ in range(k - 1):
            conj.append(_polypowmod(conj[-1], p, g, n))
        # prod_j (Y - xi_j) with coefficients in Z/p^N[X]/(g)
        poly: list[list[int]] = [[1] + [0] * (k - 1)]
        for c in conj:
            new = [[0] * k for _ in range(len(poly) + 1)]
            for i, coef in enumerate(poly):
                for t in range(k):
                    new[i + 1][t] = (new[i + 1][t] + coef[t]) % n
                prod = _polymulmod(coef, c, g, n)
                for t in range(k):
                    new[i][t] = (new[i][t] - prod[t]) % n
            poly = new
        out = []
        for coef in poly:
            if any(coef[1:]):
                raise ArithmeticError("Hensel modulus has non-scalar coefficients")
            out.append(coef[0])
        return tuple(out)

    # element-level arithmetic on coordinate tuples
    def mul(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return tuple(_polymulmod(a, b, self.modulus, self.pN))

    def pow(self, a: Sequence[int], e: int) -> tuple[int, ...]:
        return tuple(_polypowmod(a, e, self.modulus, self.pN))

    def inv(self, a: Sequence[int]) -> tuple[int, ...]:
        """Inverse of a unit: a^{-1} = a^{(q^N - 1) q^{N-1} - 1} ... computed by
        Newton iteration from the residue inverse."""
        F = self.field
        abar = F(list(a))
        if abar.is_zero():
            raise ZeroDivisionError("element is not a unit")
        y = tuple(abar.inverse().coeffs)
        two = (2,) + (0,) * (self.k - 1)
        for _ in range(self.N.bit_length() + 1):
            ay = self.mul(a, y)
            y = self.mul(y, tuple((t - s) % self.pN for t, s in zip(two, ay)))
        return y

    @cached_property
    def sigma_matrix(self) -> np.ndarray:
        """Column j: coordinates of sigma(X^j) = X^{pj}."""
        cols = [self.pow((0, 1) + (0,) * (self.k - 2) if self.k > 1 else (self._x_scalar(),), self.p * j)
                for j in range(self.k)]
        return np.array(cols, dtype=object).T

    def _x_scalar(self) -> int:
        return (-self.modulus[0]) % self.pN

    @lru_cache(maxsize=None)
    def sigma_power(self, i: int) -> np.ndarray:
        i %= self.k
        m = np.identity(self.k, dtype=object)
        for _ in range(i):
            m = (self.sigma_matrix.dot(m)) % self.pN
        return m

    def sigma_vec(self, a: Sequence[int], i: int = 1) -> tuple[int, ...]:
        m = self.sigma_power(i)
        return tuple(int(c) % self.pN for c in m.dot(np.array(a, dtype=object)))

    @cached_property
    def reduction_table(self) -> np.ndarray:
        """Row d-k: coordinates of X^d mod F for k <= d <= 2k-2."""
        rows = []
        x = (0, 1) + (0,) * (self.k - 2) if self.k > 1 else (self._x_scalar(),)
        for d in range(self.k, 2 * self.k - 1):
            rows.append(self.pow(x, d))
        return np.array(rows, dtype=object).reshape(max(self.k - 1, 0), self.k)

    def residue_ring(self) -> "WittRing":
        return self if self.N == 1 else witt_ring(self.field, 1)

    def with_precision(self, N: int) -> "WittRing":
        return witt_ring(self.field, N)

    # constructors
    def elem(self, coords: Sequence[int] | int, e: int = 0) -> "WittElem":
        if isinstance(coords, int):
            coords = (coords,) + (0,) * (self.k - 1)
        return WittElem(self, tuple(int(c) % self.pN for c in coords), e)

    def zero(self) -> "WittElem":
        return self.elem(0)

    def one(self) -> "WittElem":
        return self.elem(1)

    def naive_lift(self, x: FqElem) -> tuple[int, ...]:
        return tuple(x.coeffs)

    def teich_coords(self, x: FqElem) -> tuple[int, ...]:
        y = self.naive_lift(x)
        if not any(y):
            return y
        q = self.p**self.k
        for _ in range(self.N):
            y = self.pow(y, q)
        return y

    def reduce_coords(self, coords: Sequence[int]) -> FqElem:
        return self.field([int(c) % self.p for c in coords])


@lru_cache(maxsize=None)
def witt_ring(field: FieldDescriptor, N: int) -> WittRing:
    return WittRing(field, N)


def _vp_int(n: int, p: int) -> int:
    if n == 0:
        return 10**9
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class WittElem:
    """p^e * value with value in Z/p^N[X]/(F)."""

    ring: WittRing = field(repr=False)
    value: tuple[int, ...]
    e: int = 0

    def _align(self, other: "WittElem | int") -> tuple["WittElem", "WittElem"]:
        if isinstance(other, int):
            other = self.ring.elem(other)
        if other.ring != self.ring:
            raise ValueError("elements of different Witt rings")
        e = min(self.e, other.e)
        return self._shift_to(e), other._shift_to(e)

    def _shift_to(self, e: int) -> "WittElem":
        s = self.e - e
        f = self.ring.p**s
        return WittElem(self.ring, tuple(c * f % self.ring.pN for c in self.value), e)

    def __add__(self, other) -> "WittElem":
        a, b = self._align(other)
        return WittElem(self.ring, tuple((x + y) % self.ring.pN for x, y in zip(a.value, b.value)), a.e)

    __radd__ = __add__

    def __neg__(self) -> "WittElem":
        return WittElem(self.ring, tuple(-c % self.ring.pN for c in self.value), self.e)

    def __sub__(self, other) -> "WittElem":
        a, b = self._align(other)
        return a + (-b)

    def __rsub__(self, other) -> "WittElem":
        return (-self) + other

    def __mul__(self, other) -> "WittElem":
        if isinstance(other, int):
            other = self.ring.elem(other)
        return WittElem(self.ring, self.ring.mul(self.value, other.value), self.e + other.e)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "WittElem":
        if n < 0:
            return self.inverse() ** (-n)
        return WittElem(self.ring, self.ring.pow(self.value, n), self.e * n)

    def inverse(self) -> "WittElem":
        u = self.normalized()
        return WittElem(self.ring, self.ring.inv(u.value), -u.e)

    def valuation(self) -> int | None:
        """p-adic valuation, or None when the stored value is 0 mod p^N."""
        v = min(_vp_int(c, self.ring.p) for c in self.value)
        if v >= self.ring.N:
            return None
        return self.e + v

    def normalized(self) -> "WittElem":
        v = min(_vp_int(c, self.ring.p) for c in self.value)
        if v == 0 or v >= self.ring.N:
            return self
        f = self.ring.p**v
        return WittElem(self.ring, tuple(c // f for c in self.value), self.e + v)

    def is_integral(self) -> bool:
        v = self.valuation()
        return v is None or v >= 0

    def sigma(self, i: int = 1) -> "WittElem":
        return WittElem(self.ring, self.ring.sigma_vec(self.value, i), self.e)

    def reduce(self) -> FqElem:
        """Residue class; requires an integral element."""
        n = self.normalized()
        if n.valuation() is None or n.e > 0:
            return self.ring.field.zero()
        if n.e < 0:
            raise PrecisionExhausted("element has a p-denominator; no residue")
        return self.ring.reduce_coords(n.value)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.ring.elem(other)
        if not isinstance(other, WittElem):
            return NotImplemented
        d = self - other
        return d.valuation() is None

    def __hash__(self) -> int:
        return hash(self.normalized().value)


def teichmuller(x: FqElem, N: int) -> WittElem:
    ring = witt_ring(x.field, N)
    return WittElem(ring, ring.teich_coords(x), 0)


def lambda_residue(field: FieldDescriptor) -> FqElem:
    """A nonzero u with u^p = -u, found deterministically.

    u = w^{(q-1)/(2(p-1))} for the first non-square w in index order; such u
    satisfies u^{p-1} = w^{(q-1)/2} = -1.
    """
    p, k = field.p, field.k
    if k % 2:
        raise FieldTooSmall(f"F_{p}^{k} does not contain F_{p}^2; need even k")
    q = field.q
    for idx in range(1, q):
        w = field.from_index(idx)
        if w ** ((q - 1) // 2) == field(-1):
            u = w ** ((q - 1) // (2 * (p - 1)))
            return u
    raise FieldTooSmall("no non-square found")  # unreachable for odd q


def lambda_element(field: FieldDescriptor, N: int) -> WittElem:
    """lambda = tau(u) with u^p = -u; sigma(lambda) = -lambda."""
    return teichmuller(lambda_residue(field), N)


# -- univariate dense series ---------------------------------------------------


class TSeries:
    """Truncated series sum_{j<T} c_j t^j over W_N, times p^pexp."""

    __slots__ = ("ring", "data", "pexp")

    def __init__(self, ring: WittRing, data: np.ndarray, pexp: int = 0):
        self.ring = ring
        if data.ndim != 2 or data.shape[1] != ring.k:
            raise ValueError("series data must have shape (T, k)")
        self.data = data
        self.pexp = pexp

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.ring.p

    # constructors
    @classmethod
    def zeros(cls, ring: WittRing, T: int) -> "TSeries":
        return cls(ring, np.zeros((T, ring.k), dtype=ring.dtype))

    @classmethod
    def from_terms(cls, ring: WittRing, T: int, terms: Mapping[int, Sequence[int] | int | WittElem | FqElem],
                   pexp: int = 0) -> "TSeries":
        """Build from {exponent: coefficient}; FqElem coefficients are lifted naively."""
        data = np.zeros((T, ring.k), dtype=ring.dtype)
        for j, c in terms.items():
            if j >= T:
                continue
            if isinstance(c, WittElem):
                c = c._shift_to(pexp).value if c.e >= pexp else _raise_pexp()
            elif isinstance(c, FqElem):
                c = c.coeffs
            elif isinstance(c, int):
                c = (c,) + (0,) * (ring.k - 1)
            c = list(c)
            if len(c) > ring.k:
                raise ValueError(f"coefficient at t^{j} has {len(c)} components, field degree is {ring.k}")
            data[j] = [int(v) % ring.pN for v in c] + [0] * (ring.k - len(c))
        return cls(ring, data, pexp)

    @classmethod
    def monomial(cls, ring: WittRing, T: int, j: int, coeff=1) -> "TSeries":
        return cls.from_terms(ring, T, {j: coeff})

    def copy(self) -> "TSeries":
        return TSeries(self.ring, self.data.copy(), self.pexp)

    # precision-checked access
    def coefficient(self, j: int) -> WittElem:
        if j >= self.T:
            raise PrecisionExhausted(f"coefficient of t^{j} lies beyond truncation T={self.T}")
        return WittElem(self.ring, tuple(int(c) for c in self.data[j]), self.pexp)

    def nonzero_rows(self) -> np.ndarray:
        return np.nonzero(np.any(self.data % self.ring.pN != 0, axis=1))[0]

    def valuation(self) -> int | None:
        """t-adic valuation over W (first coefficient nonzero mod p^N); None if >= T."""
        rows = self.nonzero_rows()
        return int(rows[0]) if len(rows) else None

    def valuation_mod_p(self) -> int | None:
        """t-adic valuation of the reduction mod p (pexp must be 0)."""
        if self.pexp < 0:
            raise PrecisionExhausted("series has a p-denominator; reduction undefined")
        if self.pexp > 0:
            return None
        rows = np.nonzero(np.any(self.data % self.p != 0, axis=1))[0]
        return int(rows[0]) if len(rows) else None

    def leading_mod_p(self) -> tuple[int, ...]:
        v = self.valuation_mod_p()
        if v is None:
            raise PrecisionExhausted("no nonzero coefficient below truncation")
        return tuple(int(c) % self.p for c in self.data[v])

    def leading_fq(self) -> FqElem:
        return self.ring.field(list(self.leading_mod_p()))

    def reduce(self) -> "TSeries":
        """Reduction to F_{p^k}[[t]] (a series over W_1)."""
        if self.pexp < 0:
            raise PrecisionExhausted("series has a p-denominator; reduction undefined")
        r1 = self.ring.residue_ring()
        if self.pexp > 0:
            return TSeries.zeros(r1, self.T)
        return TSeries(r1, (self.data % self.p).astype(r1.dtype))

    def is_zero(self) -> bool:
        return self.valuation() is None

    def is_integral(self) -> bool:
        if self.pexp >= 0:
            return True
        return not np.any(self.data % (self.p ** min(-self.pexp, self.ring.N)) != 0)

    # arithmetic
    def _align(self, other: "TSeries") -> tuple[np.ndarray, np.ndarray, int]:
        if other.ring != self.ring:
            raise ValueError("series over different rings")
        if other.T != self.T:
            raise ValueError(f"truncation mismatch {self.T} vs {other.T}")
        e = min(self.pexp, other.pexp)
        a = self.data if self.pexp == e else self.data * self.p ** (self.pexp - e) % self.ring.pN
        b = other.data if other.pexp == e else other.data * self.p ** (other.pexp - e) % self.ring.pN
        return a, b, e

    def __add__(self, other: "TSeries") -> "TSeries":
        if isinstance(other, int) and other == 0:
            return self
        a, b, e = self._align(other)
        return TSeries(self.ring, (a + b) % self.ring.pN, e)

    __radd__ = __add__

    def __sub__(self, other: "TSeries") -> "TSeries":
        a, b, e = self._align(other)
        return TSeries(self.ring, (a - b) % self.ring.pN, e)

    def __neg__(self) -> "TSeries":
        return TSeries(self.ring, (-self.data) % self.ring.pN, self.pexp)

    def scale(self, c: WittElem | int) -> "TSeries":
        if isinstance(c, int):
            return TSeries(self.ring, self.data * c % self.ring.pN, self.pexp)
        k = self.ring.k
        prod = np.zeros((self.T, 2 * k - 1), dtype=self.data.dtype)
        for j, cj in enumerate(c.value):
            if cj:
                prod[:, j:j + k] += self.data * cj % self.ring.pN
        return TSeries(self.ring, self._reduce_poly(prod), self.pexp + c.e)

    def _reduce_poly(self, prod: np.ndarray) -> np.ndarray:
        ring, k = self.ring, self.ring.k
        prod %= ring.pN
        out = prod[:, :k].copy()
        table = ring.reduction_table
        for d in range(k, 2 * k - 1):
            col = prod[:, d]
            if np.any(col):
                row = np.array([int(x) for x in table[d - k]], dtype=prod.dtype)
                out += np.outer(col, row) % ring.pN
        return out % ring.pN

    def __mul__(self, other: "TSeries | WittElem | int") -> "TSeries":
        if not isinstance(other, TSeries):
            return self.scale(other)
        if other.ring != self.ring or other.T != self.T:
            raise ValueError("series mismatch in multiplication")
        T, k = self.T, self.ring.k
        a, b = self.data, other.data
        ra, rb = self.nonzero_rows(), other.nonzero_rows()
        prod = np.zeros((T, 2 * k - 1), dtype=a.dtype)
        if len(ra) == 0 or len(rb) == 0:
            return TSeries(self.ring, np.zeros((T, k), dtype=a.dtype), self.pexp + other.pexp)
        if min(len(ra), len(rb)) * 8 < T:
            # sparse operand: shift-and-add
            if len(ra) < len(rb):
                rsparse, sparse, dense = ra, a, b
            else:
                rsparse, sparse, dense = rb, b, a
            for j in rsparse:
                j = int(j)
                seg = dense[: T - j]
                for i2 in range(k):
                    c = int(sparse[j, i2])
                    if c:
                        prod[j:, i2:i2 + k] += seg * c % self.ring.pN
                prod[j:] %= self.ring.pN
        else:
            lo = int(min(ra[0], T))
            lob = int(min(rb[0], T))
            for i1 in range(k):
                for i2 in range(k):
                    conv = np.convolve(a[lo:, i1], b[lob:, i2])[: max(T - lo - lob, 0)]
                    prod[lo + lob: lo + lob + len(conv), i1 + i2] += conv % self.ring.pN
        return TSeries(self.ring, self._reduce_poly(prod), self.pexp + other.pexp)

    __rmul__ = __mul__

    def twist(self, i: int) -> "TSeries":
        """sigma^i: Frobenius on coefficients and t -> t^{p^i}."""
        if i == 0:
            return self
        step = self.p**i
        n = (self.T + step - 1) // step
        src = self.data[:n]
        m = self.ring.sigma_power(i)
        tw = src.dot(m.T.astype(src.dtype) if src.dtype != object else m.T) % self.ring.pN
        out = np.zeros_like(self.data)
        out[::step][:n] = tw
        return TSeries(self.ring, out, self.pexp)

    def frob_power(self, i: int) -> "TSeries":
        """f^{p^i}; coincides with the twist for series over a field."""
        if self.ring.N != 1:
            raise ValueError("p-power map is the twist only over the residue field")
        return self.twist(i)

    def shift(self, s: int) -> "TSeries":
        """Multiply by t^s (s may be negative when the low terms vanish)."""
        out = np.zeros_like(self.data)
        if s >= 0:
            out[s:] = self.data[: self.T - s]
        else:
            if np.any(self.data[:-s] % self.ring.pN):
                raise ValueError("cannot divide by t^s: low terms nonzero")
            # the top -s coefficients are unknown; truncate to keep honesty
            return TSeries(self.ring, self.data[-s:].copy(), self.pexp)
        return TSeries(self.ring, out, self.pexp)

    def truncate(self, T: int) -> "TSeries":
        if T > self.T:
            raise PrecisionExhausted("cannot extend truncation")
        return TSeries(self.ring, self.data[:T].copy(), self.pexp)

    def lift(self, N: int) -> "TSeries":
        """Coefficientwise Teichmuller lift of a series over the residue field."""
        if self.ring.N != 1:
            raise ValueError("lift expects a series over F_{p^k}")
        ring = witt_ring(self.ring.field, N)
        out = np.zeros((self.T, ring.k), dtype=ring.dtype)
        cache: dict[tuple[int, ...], tuple[int, ...]] = {}
        for j in self.nonzero_rows():
            key = tuple(int(c) for c in self.data[j])
            if key not in cache:
                cache[key] = ring.teich_coords(ring.field(list(key)))
            out[j] = cache[key]
        return TSeries(ring, out, 0)

    def to_sparse(self) -> dict[int, list]:
        out = {}
        for j in self.nonzero_rows():
            out[int(j)] = [[int(c) for c in self.data[j]], self.pexp]
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TSeries):
            return NotImplemented
        try:
            return (self - other).is_zero()
        except ValueError:
            return False

    def __repr__(self) -> str:
        terms = []
        for j in self.nonzero_rows()[:6]:
            terms.append(f"{[int(c) for c in self.data[j]]}t^{int(j)}")
        more = " + ..." if len(self.nonzero_rows()) > 6 else ""
        scale = f"p^{self.pexp}*" if self.pexp else ""
        return f"{scale}({' + '.join(terms) or '0'}{more}) + O(t^{self.T})"


def _raise_pexp():
    raise ValueError("coefficient has a larger p-denominator than the series")


# -- multivariate sparse series ------------------------------------------------


@dataclass
class MSeries:
    """Sparse series in nvars variables truncated at total degree D.

    Coefficients are coordinate tuples over ``ring``; the whole series is
    scaled by p^pexp.
    """

    ring: WittRing
    nvars: int
    D: int
    terms: dict[tuple[int, ...], tuple[int, ...]] = field(default_factory=dict)
    pexp: int = 0

    @classmethod
    def variable(cls, ring: WittRing, nvars: int, D: int, idx: int) -> "MSeries":
        mono = tuple(1 if i == idx else 0 for i in range(nvars))
        return cls(ring, nvars, D, {mono: (1,) + (0,) * (ring.k - 1)} if D > 1 else {})

    @classmethod
    def constant(cls, ring: WittRing, nvars: int, D: int, c: WittElem | int) -> "MSeries":
        if isinstance(c, int):
            c = ring.elem(c)
        return cls(ring, nvars, D, {(0,) * nvars: c.value} if any(c.value) else {}, c.e)

    def _clean(self) -> "MSeries":
        self.terms = {m: v for m, v in self.terms.items() if any(v) and sum(m) < self.D}
        return self

    def _aligned(self, other: "MSeries") -> tuple[dict, dict, int]:
        e = min(self.pexp, other.pexp)
        n = self.ring.pN

        def sc(s: "MSeries"):
            f = self.ring.p ** (s.pexp - e)
            return {m: tuple(c * f % n for c in v) for m, v in s.terms.items()}

        return sc(self), sc(other), e

    def __add__(self, other: "MSeries") -> "MSeries":
        a, b, e = self._aligned(other)
        out = dict(a)
        n = self.ring.pN
        for m, v in b.items():
            if m in out:
                out[m] = tuple((x + y) % n for x, y in zip(out[m], v))
            else:
                out[m] = v
        return MSeries(self.ring, self.nvars, self.D, out, e)._clean()

    def __neg__(self) -> "MSeries":
        n = self.ring.pN
        return MSeries(self.ring, self.nvars, self.D, {m: tuple(-c % n for c in v) for m, v in self.terms.items()},
                       self.pexp)

    def __sub__(self, other: "MSeries") -> "MSeries":
        return self + (-other)

    def __mul__(self, other: "MSeries | WittElem | int") -> "MSeries":
        if isinstance(other, (int, WittElem)):
            other = MSeries.constant(self.ring, self.nvars, self.D, other)
        out: dict[tuple[int, ...], tuple[int, ...]] = {}
        n = self.ring.pN
        for m1, v1 in self.terms.items():
            for m2, v2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                if sum(m) >= self.D:
                    continue
                prod = self.ring.mul(v1, v2)
                if m in out:
                    out[m] = tuple((x + y) % n for x, y in zip(out[m], prod))
                else:
                    out[m] = prod
        return MSeries(self.ring, self.nvars, self.D, out, self.pexp + other.pexp)._clean()

    __rmul__ = __mul__

    def twist(self, i: int) -> "MSeries":
        """sigma^i on coefficients, each variable v -> v^{p^i}."""
        f = self.ring.p**i
        out = {}
        for m, v in self.terms.items():
            mm = tuple(a * f for a in m)
            if sum(mm) < self.D:
                out[mm] = self.ring.sigma_vec(v, i)
        return MSeries(self.ring, self.nvars, self.D, out, self.pexp)

    def is_zero(self) -> bool:
        return not self.terms

    def substitute(self, values: Sequence[TSeries]) -> TSeries:
        """Pull back along t -> (values); each value must have zero constant term."""
        if len(values) != self.nvars:
            raise ValueError("wrong number of substituted series")
        T = values[0].T
        out = TSeries.zeros(self.ring, T)
        powers: dict[tuple[int, int], TSeries] = {}

        def pw(i: int, e: int) -> TSeries:
            if (i, e) not in powers:
                powers[(i, e)] = (pw(i, e - 1) * values[i]) if e > 1 else values[i]
            return powers[(i, e)]

        for m, v in self.terms.items():
            term = TSeries.from_terms(self.ring, T, {0: v})
            for i, e in enumerate(m):
                if e:
                    term = term * pw(i, e)
            out = out + term
        return TSeries(self.ring, out.data, out.pexp + self.pexp)

    def to_sparse(self) -> dict[str, list]:
        return {",".join(map(str, m)): [list(v), self.pexp] for m, v in sorted(self.terms.items())}


def series_sigma_twist(f: TSeries | MSeries, i: int) -> TSeries | MSeries:
    if i < 0:
        raise ValueError("twist iterate must be non-negative")
    return f.twist(i)


def curve_lift(germ_x: Iterable[TSeries], germ_y: Iterable[TSeries], N: int) -> tuple[list[TSeries], list[TSeries]]:
    """Coefficientwise Teichmuller lift of a germ over F_{p^k}[[t]]."""
    return [s.lift(N) for s in germ_x], [s.lift(N) for s in germ_y]
