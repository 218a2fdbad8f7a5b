"""Exact arithmetic in Z/p^c, unit groups with discrete logs, truncated p-adics.

Everything downstream (characters, Whittaker sums) reduces to integer
arithmetic modulo prime powers, so this module keeps all of it exact and
leaves floating point to the callers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

# moduli of lookup tables; desk scale is p <= 101, c <= 6
MODULUS_LIMIT = 2**31


class PrecisionError(ArithmeticError):
    """Raised when a truncated p-adic computation would lose digits."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def valuation(x: int | Fraction, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class PrimePower:
    p: int
    c: int
    q: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.c < 0:
            raise ValueError("exponent must be >= 0")
        q = self.p**self.c
        if q >= 2**62:
            raise OverflowError(f"{self.p}^{self.c} exceeds 2^62")
        object.__setattr__(self, "q", q)

    @property
    def phi(self) -> int:
        return self.q - self.q // self.p if self.c else 1

    def __str__(self):
        return f"{self.p}^{self.c}"


@dataclass(frozen=True, eq=False)
class UnitGroupTable:
    """Cyclic group (Z/p^c)^x with a fixed generator and its log table.

    ``dlog[u]`` is the discrete log of ``u`` base ``generator`` for units and
    ``-1`` for non-units.
    """

    modulus: PrimePower
    generator: int
    dlog: np.ndarray

    @property
    def order(self) -> int:
        return self.modulus.phi

    def log(self, u: int) -> int:
        k = int(self.dlog[u % self.modulus.q])
        if k < 0:
            raise ValueError(f"{u} is not a unit mod {self.modulus.q}")
        return k

    def exp(self, k: int) -> int:
        return pow(self.generator, k % self.order, self.modulus.q)


def _order_mod(g: int, q: int, phi: int) -> int:
    order = phi
    for r in factorize(phi):
        while order % r == 0 and pow(g, order // r, q) == 1:
            order //= r
    return order


def primitive_root(p: int, c: int) -> int:
    """Smallest positive generator of (Z/p^c)^x (p odd)."""
    q = p**c
    phi = q - q // p
    for g in range(2, q):
        if g % p and _order_mod(g, q, phi) == phi:
            return g
    raise ArithmeticError(f"no primitive root mod {q}")  # unreachable for odd p


@lru_cache(maxsize=None)
def unit_group(p: int, c: int) -> UnitGroupTable:
    if p == 2:
        raise ValueError("p = 2 is not supported")
    if c < 1:
        raise ValueError("need c >= 1")
    mod = PrimePower(p, c)
    if mod.q > MODULUS_LIMIT:
        raise OverflowError(f"modulus {mod.q} over table limit {MODULUS_LIMIT}")
    g = primitive_root(p, c)
    dlog = np.full(mod.q, -1, dtype=np.int64)
    u = 1
    for k in range(mod.phi):
        dlog[u] = k
        u = u * g % mod.q
    if u != 1:
        raise ArithmeticError("generator check failed")
    dlog.setflags(write=False)
    return UnitGroupTable(mod, g, dlog)


def split_rational(x: Fraction, p: int, K: int) -> tuple[int, int]:
    """Write x = p^v * u with u a unit; return (v, u mod p^K)."""
    x = Fraction(x)
    v = valuation(x, p)
    r = x / Fraction(p) ** v
    pk = p**K
    u = r.numerator % pk * pow(r.denominator, -1, pk) % pk
    return v, u


@dataclass(frozen=True)
class TruncatedPAdic:
    """x = p^valuation * unit, with ``unit`` known modulo p^precision.

    ``unit is None`` marks zero (which has no valuation).
    """

    p: int
    valuation: int | None
    unit: int | None
    precision: int

    def __post_init__(self):
        if self.precision < 1:
            raise PrecisionError("precision must be >= 1")
        if self.unit is not None:
            pk = self.p**self.precision
            u = self.unit % pk
            if u % self.p == 0:
                raise ValueError("unit part divisible by p")
            object.__setattr__(self, "unit", u)

    @classmethod
    def zero(cls, p: int, precision: int) -> TruncatedPAdic:
        return cls(p, None, None, precision)

    @classmethod
    def from_rational(cls, x, p: int, precision: int) -> TruncatedPAdic:
        x = Fraction(x)
        if x == 0:
            return cls.zero(p, precision)
        v, u = split_rational(x, p, precision)
        return cls(p, v, u, precision)

    @property
    def is_zero(self) -> bool:
        return self.unit is None

    @property
    def abs(self) -> float:
        return 0.0 if self.is_zero else float(self.p) ** (-self.valuation)

    def to_fraction(self) -> Fraction:
        """Canonical rational representative p^v * u with 0 < u < p^K."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.valuation

    def _absolute_precision(self) -> float:
        return float("inf") if self.is_zero else self.valuation + self.precision

    def __add__(self, other: TruncatedPAdic) -> TruncatedPAdic:
        if self.p != other.p:
            raise ValueError("different primes")
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        absprec = min(self.valuation + self.precision, other.valuation + other.precision)
        s = self.to_fraction() + other.to_fraction()
        if s == 0 or valuation(s, self.p) >= absprec:
            raise PrecisionError("sum cancels below known digits")
        v = valuation(s, self.p)
        return TruncatedPAdic.from_rational(s, self.p, int(absprec - v))

    def __neg__(self) -> TruncatedPAdic:
        if self.is_zero:
            return self
        return TruncatedPAdic(self.p, self.valuation, -self.unit, self.precision)

    def __mul__(self, other: TruncatedPAdic) -> TruncatedPAdic:
        if self.p != other.p:
            raise ValueError("different primes")
        prec = min(self.precision, other.precision)
        if self.is_zero or other.is_zero:
            return TruncatedPAdic.zero(self.p, prec)
        return TruncatedPAdic(
            self.p, self.valuation + other.valuation, self.unit * other.unit, prec
        )


def fractional_part(x: TruncatedPAdic) -> Fraction:
    """{x}_p in [0, 1): the digits of x at negative powers of p."""
    if x.is_zero or x.valuation >= 0:
        return Fraction(0)
    if x.valuation < -x.precision:
        raise PrecisionError("not enough digits for the fractional part")
    m = x.p ** (-x.valuation)
    return Fraction(x.unit % m, m)
