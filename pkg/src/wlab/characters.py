"""Dirichlet characters mod p^c, unitary characters of Q_p^x, Gauss sums."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .padic import PrimePower, TruncatedPAdic, split_rational, unit_group

TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=64)
def root_table(n: int) -> np.ndarray:
    """exp(2 pi i m / n) for m = 0..n-1, shared so repeated sums agree bitwise."""
    t = np.exp(1j * TWO_PI * np.arange(n) / n)
    t.setflags(write=False)
    return t


def e(x: Fraction | float) -> complex:
    """exp(2 pi i x), reducing rationals mod 1 exactly first."""
    if isinstance(x, Fraction):
        x = x - math.floor(x)
        return root_table_value(x.numerator, x.denominator)
    return cmath.exp(1j * TWO_PI * x)


def root_table_value(m: int, n: int) -> complex:
    if n <= 1 << 20:
        return complex(root_table(n)[m % n])
    return cmath.exp(1j * TWO_PI * (m % n) / n)


@dataclass(frozen=True)
class DirichletChar:
    """u -> exp(2 pi i k dlog(u) / phi(p^c)) on (Z/p^c)^x, zero off units."""

    modulus: PrimePower
    dlog_multiplier: int
    conductor_exponent: int = field(init=False, compare=False)
    parity: int = field(init=False, compare=False)

    def __post_init__(self):
        phi = self.modulus.phi
        object.__setattr__(self, "dlog_multiplier", self.dlog_multiplier % phi)
        k, p, c = self.dlog_multiplier, self.modulus.p, self.modulus.c
        # trivial on 1 + p^c0 iff p^(c - c0) divides k; c0 = 0 means trivial
        if k == 0:
            c0 = 0
        else:
            c0 = c
            while c0 > 1 and k % p ** (c - c0 + 1) == 0:
                c0 -= 1
        object.__setattr__(self, "conductor_exponent", c0)
        object.__setattr__(self, "parity", 1 if k % 2 == 0 else -1)

    @classmethod
    def trivial(cls, p: int, c: int = 1) -> DirichletChar:
        return cls(PrimePower(p, c), 0)

    @classmethod
    def from_conrey(cls, p: int, c: int, label: int) -> DirichletChar:
        """Conrey label n mod p^c: the character u -> e(dlog n * dlog u / phi)."""
        return cls(PrimePower(p, c), unit_group(p, c).log(label))

    @property
    def p(self) -> int:
        return self.modulus.p

    @property
    def c(self) -> int:
        return self.modulus.c

    @property
    def table(self):
        return unit_group(self.p, self.c)

    @property
    def is_primitive(self) -> bool:
        return self.conductor_exponent == self.c

    @property
    def is_even(self) -> bool:
        return self.parity == 1

    @property
    def order(self) -> int:
        phi = self.modulus.phi
        return phi // math.gcd(phi, self.dlog_multiplier)

    @property
    def conrey_label(self) -> int:
        return self.table.exp(self.dlog_multiplier)

    def __call__(self, u: int) -> complex:
        u = int(u) % self.modulus.q
        if u % self.p == 0:
            return 0j
        phi = self.modulus.phi
        return complex(root_table(phi)[self.dlog_multiplier * self.table.log(u) % phi])

    def values(self, units) -> np.ndarray:
        """Vectorized evaluation on an integer array (reduced mod q here)."""
        q, phi = self.modulus.q, self.modulus.phi
        u = np.asarray(units, dtype=np.int64) % q
        logs = self.table.dlog[u]
        out = root_table(phi)[(self.dlog_multiplier * np.maximum(logs, 0)) % phi]
        return np.where(logs >= 0, out, 0)

    def value_table(self) -> np.ndarray:
        return self.values(np.arange(self.modulus.q))

    def conj(self) -> DirichletChar:
        return DirichletChar(self.modulus, -self.dlog_multiplier)

    def __mul__(self, other: DirichletChar) -> DirichletChar:
        if other.modulus != self.modulus:
            raise ValueError("moduli differ")
        return DirichletChar(self.modulus, self.dlog_multiplier + other.dlog_multiplier)

    def lift(self, c: int) -> DirichletChar:
        """Same character viewed modulo p^c (c >= conductor exponent)."""
        if c < self.conductor_exponent:
            raise ValueError("cannot reduce below the conductor")
        if c == self.c:
            return self
        big = PrimePower(self.p, c)
        if self.dlog_multiplier == 0:
            return DirichletChar(big, 0)
        if c > self.c:
            # chi(g) = e(k dlog(g) / phi_small) = e(K / phi_big)
            g = unit_group(self.p, c).generator
            k = self.dlog_multiplier * self.table.log(g) * (big.phi // self.modulus.phi)
            return DirichletChar(big, k)
        # descending: the multiplier is divisible by the index (conductor check)
        ratio = self.modulus.phi // big.phi
        g_log = unit_group(self.p, c).log(self.table.generator)
        return DirichletChar(big, (self.dlog_multiplier // ratio) * g_log)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "c": self.c,
            "dlog_multiplier": self.dlog_multiplier,
            "generator": self.table.generator,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DirichletChar:
        chi = cls(PrimePower(int(d["p"]), int(d["c"])), int(d["dlog_multiplier"]))
        if "generator" in d and int(d["generator"]) != chi.table.generator:
            raise ValueError("serialized generator does not match the canonical one")
        return chi

    @property
    def label(self) -> str:
        return f"{self.modulus.q}.{self.conrey_label}"


def conductor_by_scan(chi: DirichletChar) -> int:
    """Least c0 with chi trivial on units = 1 mod p^c0, by direct evaluation."""
    q, p = chi.modulus.q, chi.p
    for c0 in range(0, chi.c + 1):
        step = p**c0
        us = np.arange(1, q + 1, step) if c0 else np.arange(q)
        vals = chi.values(us)
        mask = us % p != 0
        if np.all(np.abs(vals[mask] - 1) < 1e-12):
            return c0
    raise ArithmeticError("character nontrivial on 1 + p^c")  # impossible


def enumerate_chars(modulus: PrimePower, primitive_only=False, even_only=False) -> list[DirichletChar]:
    out = []
    for k in range(modulus.phi):
        chi = DirichletChar(modulus, k)
        if primitive_only and not chi.is_primitive:
            continue
        if even_only and not chi.is_even:
            continue
        out.append(chi)
    return out


def gauss_sum(chi: DirichletChar) -> complex:
    """sum over units u mod p^c of chi(u) e(u / p^c); numpy's pairwise reduction."""
    q = chi.modulus.q
    if chi.c < 1:
        raise ValueError("need c >= 1")
    u = np.arange(q)
    terms = chi.values(u) * root_table(q)[u]
    return complex(np.sum(terms))


@dataclass(frozen=True)
class UnitaryCharacter:
    """Character of Q_p^x: p^v u -> value_at_p^v * unit_part(u)."""

    unit_part: DirichletChar
    value_at_p: complex = 1.0 + 0j

    def __post_init__(self):
        if abs(abs(self.value_at_p) - 1.0) > 1e-14:
            raise ValueError("value at p must be unimodular")
        object.__setattr__(self, "value_at_p", complex(self.value_at_p))

    @classmethod
    def unramified(cls, p: int, value_at_p: complex = 1.0) -> UnitaryCharacter:
        return cls(DirichletChar.trivial(p, 1), value_at_p)

    @property
    def p(self) -> int:
        return self.unit_part.p

    @property
    def conductor_exponent(self) -> int:
        return self.unit_part.conductor_exponent

    @property
    def is_unramified(self) -> bool:
        return self.conductor_exponent == 0

    def at(self, v: int, unit: int) -> complex:
        return self.value_at_p**v * self.unit_part(unit)

    def __call__(self, x) -> complex:
        if isinstance(x, TruncatedPAdic):
            if x.is_zero:
                raise ValueError("character undefined at 0")
            if x.precision < self.unit_part.c:
                raise ValueError("unit residue coarser than the character modulus")
            return self.at(x.valuation, x.unit)
        v, u = split_rational(Fraction(x), self.p, max(self.unit_part.c, 1))
        return self.at(v, u)

    def conj(self) -> UnitaryCharacter:
        return UnitaryCharacter(self.unit_part.conj(), self.value_at_p.conjugate())

    def inverse(self) -> UnitaryCharacter:
        return self.conj()

    def __mul__(self, other: UnitaryCharacter) -> UnitaryCharacter:
        a, b = self.unit_part, other.unit_part
        c = max(a.c, b.c)
        return UnitaryCharacter(a.lift(c) * b.lift(c), self.value_at_p * other.value_at_p)


@dataclass(frozen=True)
class EpsilonFactor:
    """W(e) for the Jacquet integral of the induced newvector, i.e. the integral
    over v(x) <= -c of chi(x) conj(psi(x)) dx/|x|."""

    value: complex
    conductor_exponent: int
    shell_residuals: tuple = ()
    convention: str = "jacquet-W(e)"


def _shell_integral(chi: UnitaryCharacter, m: int) -> complex:
    """Integral over v(x) = -m of chi(x) conj(psi(x)) dx/|x|."""
    c = chi.unit_part.c
    M = max(m, c)
    pM = chi.p**M
    u = np.arange(pM)
    phases = root_table(chi.p**m)[u % chi.p**m].conj()
    s = np.sum(chi.unit_part.values(u) * phases)
    return complex(chi.value_at_p ** (-m) * s / pM)


def epsilon_W_at_identity(chi: UnitaryCharacter, tol: float = 1e-12) -> EpsilonFactor:
    c = chi.conductor_exponent
    if c < 2:
        raise ValueError("conductor exponent must be >= 2 for this formula")
    if chi.unit_part.c != c:
        chi = UnitaryCharacter(chi.unit_part.lift(c), chi.value_at_p)
    value = _shell_integral(chi, c)
    residuals = []
    for m in list(range(1, c)) + [c + 1, c + 2]:
        r = _shell_integral(chi, m)
        if abs(r) > tol:
            raise ArithmeticError(f"shell {m} does not vanish: {abs(r):.3e}")
        residuals.append((m, abs(r)))
    return EpsilonFactor(value, c, tuple(residuals))


@dataclass(frozen=True)
class BParameter:
    b: int
    a: int


def find_b(chi: DirichletChar, tol: float = 1e-12) -> BParameter:
    """The unique b mod p with chi(1 - p z) = e(b z / p) for every z."""
    p = chi.p
    if chi.c != 2 or not chi.is_primitive:
        raise ValueError("find_b needs a primitive character mod p^2")
    z = np.arange(p)
    lhs = chi.values(1 - p * z)
    for b in range(1, p):
        rhs = root_table(p)[(b * z) % p]
        if np.all(np.abs(lhs - rhs) < tol):
            return BParameter(b, pow(b, -1, p))
    raise ArithmeticError("no b found; character is not primitive")
