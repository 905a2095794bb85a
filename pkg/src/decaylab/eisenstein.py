"""Fourier coefficients q_L(m) of the weight 1 + b/2 Eisenstein series.

Rational pieces (densities, divisor sums, character values) are exact.
Only pi, Gamma at half-integers and the L-values are carried as certified
intervals using mpmath's interval context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import sympy
from mpmath import iv

from .errors import BadDiscriminant, NonSquareIndex, ToleranceUnreachable
from .qlattice import QuadLattice, dual_index, local_density, vp

__all__ = [
    "CharDescriptor",
    "EisensteinParams",
    "Interval",
    "kronecker",
    "sigma_s_chi",
    "dirichlet_L",
    "euler_product_estimate",
    "q_L",
    "q_L_prime_term",
    "split_m0_f",
]

iv.prec = 96
_TERM_BUDGET = 2_000_000


@dataclass(frozen=True)
class Interval:
    """Closed real interval with exact endpoints as mpmath interval."""

    value: object  # iv.mpf

    @classmethod
    def exact(cls, x: Fraction | int) -> "Interval":
        x = Fraction(x)
        return cls(iv.mpf(x.numerator) / x.denominator)

    @property
    def lo(self) -> mpmath.mpf:
        return mpmath.mpf(self.value.a)

    @property
    def hi(self) -> mpmath.mpf:
        return mpmath.mpf(self.value.b)

    @property
    def width(self) -> mpmath.mpf:
        return self.hi - self.lo

    def __mul__(self, other: "Interval | Fraction | int") -> "Interval":
        if not isinstance(other, Interval):
            other = Interval.exact(other)
        return Interval(self.value * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other: "Interval | Fraction | int") -> "Interval":
        if not isinstance(other, Interval):
            other = Interval.exact(other)
        return Interval(self.value / other.value)

    def __neg__(self) -> "Interval":
        return Interval(-self.value)

    def contains(self, x) -> bool:
        if isinstance(x, (Fraction, int)):
            e = Interval.exact(x)
            return self.lo <= e.lo and e.hi <= self.hi
        return self.lo <= x <= self.hi

    def as_text(self, digits: int = 17) -> str:
        return f"[{mpmath.nstr(self.lo, digits)},{mpmath.nstr(self.hi, digits)}]"


@dataclass(frozen=True)
class CharDescriptor:
    """Kronecker character chi_D for a discriminant D = 0, 1 mod 4."""

    D: int

    def __post_init__(self) -> None:
        if self.D == 0 or self.D % 4 not in (0, 1):
            raise BadDiscriminant(f"D={self.D} is not 0 or 1 mod 4")

    def __call__(self, a: int) -> int:
        return kronecker(self.D, a)

    @property
    def modulus(self) -> int:
        return abs(self.D)

    def is_principal(self) -> bool:
        return sympy.sqrt(self.D).is_integer if self.D > 0 else False


def kronecker(D: int, a: int) -> int:
    """Kronecker symbol (D/a) for a discriminant D."""
    if D == 0 or D % 4 not in (0, 1):
        raise BadDiscriminant(f"D={D} is not 0 or 1 mod 4")
    if a == 0:
        return 1 if abs(D) == 1 else 0
    result = 1
    if a < 0:
        a = -a
        if D < 0:
            result = -result
    k = 0
    while a % 2 == 0:
        a //= 2
        k += 1
    if k:
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            result *= (-1) ** k
    if a == 1:
        return result
    return result * int(sympy.jacobi_symbol(D % a, a))


def sigma_s_chi(m: int, chi: CharDescriptor | None, s: int) -> Fraction:
    """sum_{d | m} chi(d) d^s."""
    if m < 1:
        raise ValueError("m must be positive")
    total = Fraction(0)
    for d in sympy.divisors(m):
        c = 1 if chi is None else chi(d)
        if c:
            total += c * Fraction(d) ** s
    return total


def _s_iv(s: Fraction) -> object:
    return iv.mpf(s.numerator) / s.denominator


def _tail_bounds(q: int, a: int, N: int, s: object) -> object:
    """Enclosure of sum_{k >= N} (k q + a)^{-s} via Euler-Maclaurin.

    f(x) = (qx + a)^{-s}: sum = int_N^inf f + f(N)/2 - f'(N)/12 + R with
    |R| <= |f'(N)|/12 since f'' keeps one sign.
    """
    x = iv.mpf(N * q + a)
    f = x ** (-s)
    integral = x ** (1 - s) / ((s - 1) * q)
    fprime = -s * q * x ** (-s - 1)
    core = integral + f / 2 - fprime / 12
    err = abs(fprime) / 12
    return core + iv.mpf([-err.b, err.b])


def dirichlet_L(s: Fraction | int, chi: CharDescriptor | None, tol: float = 1e-12) -> Interval:
    """Certified enclosure of L(s, chi) for real s > 1 and real chi.

    chi None means the Riemann zeta function.  The sum is split by residue
    class mod q; each class tail is bounded by Euler-Maclaurin.
    """
    s = Fraction(s)
    if s <= 1:
        raise ValueError("need s > 1")
    q = 1 if chi is None else chi.modulus
    sv = _s_iv(s)
    values = {r: (1 if chi is None else chi(r)) for r in range(1, q + 1)}
    N = max(8, int(math.ceil((1.0 / tol) ** (1.0 / float(s + 1)))) // q + 1)
    while True:
        if N * q > _TERM_BUDGET:
            raise ToleranceUnreachable(f"L({s}) to tol {tol} needs more than {_TERM_BUDGET} terms")
        head = iv.mpf(0)
        for n in range(1, N * q + 1):
            c = values[(n - 1) % q + 1]
            if c:
                head += c * iv.mpf(n) ** (-sv)
        tail = iv.mpf(0)
        for r in range(1, q + 1):
            c = values[r]
            if c:
                # class r tail runs over n = k q + r with k >= N, i.e. n > N q
                tail += c * _tail_bounds(q, r, N, sv)
        out = Interval(head + tail)
        if out.width <= tol:
            return out
        N *= 2


def euler_product_estimate(s: float, chi: CharDescriptor | None, primes_up_to: int = 20000) -> float:
    """Truncated Euler product, an independent floating-point cross-check."""
    prod = 1.0
    for p in sympy.primerange(2, primes_up_to):
        c = 1 if chi is None else chi(int(p))
        prod *= 1.0 / (1.0 - c * float(p) ** (-s))
    return prod


@dataclass(frozen=True)
class EisensteinParams:
    """Lattice of signature (b, 2) with kappa = 1 + b/2."""

    L: QuadLattice
    b: int

    def __post_init__(self) -> None:
        if self.L.rank != self.b + 2:
            raise ValueError("rank must equal b + 2")
        if self.L.convention != "half":
            raise ValueError("Eisenstein coefficients use Q(v) = <v,v>/2")

    @property
    def kappa(self) -> Fraction:
        return 1 + Fraction(self.b, 2)

    @property
    def det(self) -> int:
        return self.L.det()

    def bad_primes(self) -> list[int]:
        return sorted(int(p) for p in sympy.primefactors(2 * abs(self.det)))

    def discriminant_order(self) -> int:
        out = 1
        for p in sympy.primefactors(abs(self.det)):
            out *= dual_index(self.L, int(p))
        return out


def _pi_pow(k: Fraction) -> object:
    """pi^k as an interval for a half-integer k."""
    return iv.pi ** _s_iv(k)


def _gamma(k: Fraction) -> object:
    """Gamma(k) for a positive integer or half-integer k."""
    if k.denominator == 1:
        return iv.mpf(math.factorial(int(k) - 1))
    # Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!)
    n = int(k - Fraction(1, 2))
    return iv.mpf(math.factorial(2 * n)) / (iv.mpf(4) ** n * math.factorial(n)) * iv.sqrt(iv.pi)


def split_m0_f(m: int, bad: list[int]) -> tuple[int, int]:
    """m = m0 f^2 with gcd(f, bad) = 1 and m0 squarefree away from bad primes."""
    m0, f = 1, 1
    for p, e in sympy.factorint(m).items():
        if p in bad:
            m0 *= p**e
        else:
            f *= p ** (e // 2)
            m0 *= p ** (e % 2)
    return m0, f


@lru_cache(maxsize=256)
def _cached_L(s: Fraction, D: int | None, tol: float) -> Interval:
    return dirichlet_L(s, None if D is None else CharDescriptor(D), tol)


def q_L(params: EisensteinParams, m: int, tol: float = 1e-12) -> tuple[Interval, dict]:
    """Certified enclosure of q_L(m) and the exact rational factors used."""
    if m < 1:
        raise ValueError("m must be positive")
    b, kappa, det = params.b, params.kappa, params.det
    L = params.L
    bad = params.bad_primes()
    densities = {l: local_density(l, L, m) for l in bad}
    root_index = iv.sqrt(iv.mpf(params.discriminant_order()))
    info: dict = {"densities": {l: str(d) for l, d in densities.items()}}
    prod_delta = Fraction(1)
    for d in densities.values():
        prod_delta *= d
    two_pi_k = iv.mpf(2) ** _s_iv(kappa) * _pi_pow(kappa)
    m_pow = iv.mpf(m) ** _s_iv(Fraction(b, 2))
    if b % 2 == 0:
        k = int(kappa)
        D = (-1) ** k * 4 * det
        chi = CharDescriptor(D)
        sig = sigma_s_chi(m, chi, 1 - k)
        Lval = _cached_L(Fraction(k), D, tol)
        info.update(D=D, sigma=str(sig))
        if prod_delta == 0 or sig == 0:
            return Interval.exact(0), info
        val = -two_pi_k * m_pow * Interval.exact(sig).value * Interval.exact(prod_delta).value
        val = val / (root_index * _gamma(kappa) * Lval.value)
        return Interval(val), info
    # odd b
    m0, f = split_m0_f(m, bad)
    sign = (-1) ** int(kappa - Fraction(1, 2))
    Dcal = sign * 2 * m0 * det
    if Dcal % 4 not in (0, 1):
        raise BadDiscriminant(f"D = {Dcal} is not 0 or 1 mod 4; normalization unspecified")
    chi = CharDescriptor(Dcal)
    s_half = kappa + Fraction(1, 2)
    fsum = Fraction(0)
    for d in sympy.divisors(f):
        mu = int(sympy.mobius(d))
        if mu:
            fsum += mu * chi(d) * Fraction(d) ** (-int(s_half)) * sigma_s_chi(f // d, None, int(1 - 2 * kappa))
    local = Fraction(1)
    for l, d in densities.items():
        local *= d / (1 - Fraction(l) ** (-int(2 * kappa)))
    info.update(D=Dcal, m0=m0, f=f, fsum=str(fsum))
    if local == 0 or fsum == 0:
        return Interval.exact(0), info
    Lval = _cached_L(s_half, Dcal, tol)
    zeta = _cached_L(2 * kappa, None, tol)
    val = -two_pi_k * m_pow * Lval.value * Interval.exact(fsum * local).value
    val = val / (_gamma(kappa) * root_index * zeta.value)
    return Interval(val), info


def q_L_prime_term(p: int, a: int, b: int, h_P: int, M: int, density: Fraction, index: int,
                   det_char: int) -> Fraction:
    """(p^{a+1}-1)/h_P (1 - chi p^{-1-b/2})^{-1} density / sqrt(index)."""
    if M % p == 0:
        raise ValueError("M must be coprime to p")
    if b % 2:
        raise ValueError("the term is rational only for even b")
    if density == 0:
        return Fraction(0)
    e = vp(index, p)
    if p**e != index:
        raise ValueError("index must be a power of p")
    if e % 2:
        raise NonSquareIndex(f"index p^{e} has odd exponent")
    char_factor = 1 - det_char * Fraction(p) ** (-1 - b // 2)
    return Fraction(p ** (a + 1) - 1, h_P) / char_factor * Fraction(density) / p ** (e // 2)
