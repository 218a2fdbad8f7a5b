"""Integrals over Gamma_0(N)\\H: Petersson norms, L^r norms, and the mean value
M_chi(z) = sum over an orthonormal basis of |g(z)|^2.

Integration runs over the SL(2,Z) fundamental domain F_1 pulled back by coset
representatives of Gamma_0(N)\\SL(2,Z). On F_1 we use u = 1/y, so that the
invariant measure dx dy / y^2 becomes dx du and the domain is
-1/2 <= x <= 1/2, 0 < u <= (1 - x^2)^(-1/2). Each coset is truncated at
y = Y_FACTOR * (width of its cusp); the dropped tail is bounded by the
decay of the cusp expansion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .modforms import (
    NewformData,
    abs_invariant,
    evaluate_many,
    reduce_points,
    special_point,
    supnorm_scan,
    ScanGrid,
)
from .padic import factorize

Y_FACTOR = 10.0
MAX_LEVEL = 200
REFINE_TOL = 0.01


class QuadratureDisagreement(ArithmeticError):
    pass


class IncompleteBasis(ValueError):
    pass


# ---------------------------------------------------------------------------
# cosets


def gamma0_index(N: int) -> int:
    idx = N
    for p in factorize(N):
        idx = idx // p * (p + 1)
    return idx


def _p1_points(N: int) -> list[tuple[int, int]]:
    """Canonical representatives of P^1(Z/N): pairs (c, d) with gcd(c, d, N) = 1 up to units."""
    seen = set()
    out = []
    units = [u for u in range(1, N + 1) if math.gcd(u, N) == 1] if N > 1 else [1]
    for c in range(N):
        for d in range(N):
            if math.gcd(math.gcd(c, d), N) != 1:
                continue
            key = min(((u * c) % N, (u * d) % N) for u in units)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def _lift(c: int, d: int, N: int) -> tuple[int, int, int, int]:
    """An SL(2,Z) matrix whose bottom row is congruent to (c, d) mod N."""
    if N == 1:
        return 1, 0, 0, 1
    # move d to something coprime with c by adding multiples of N
    c0, d0 = c, d
    if c0 == 0:
        c0 = N
    t = 0
    while math.gcd(c0, d0 + t * N) != 1:
        t += 1
    d0 = d0 + t * N
    g, x, y = _egcd(c0, d0)
    # x c0 + y d0 = 1  ->  [[y, -x], [c0, d0]] has det y d0 + x c0 = 1
    return y, -x, c0, d0


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return a, 1, 0
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


@dataclass(frozen=True)
class CosetSystem:
    N: int
    matrices: tuple  # (a, b, c, d) with ad - bc = 1
    widths: tuple  # width of the cusp gamma(infinity) for Gamma_0(N)

    @property
    def index(self) -> int:
        return len(self.matrices)

    def inequivalent(self) -> bool:
        """Gamma_0(N) g = Gamma_0(N) h iff the bottom rows agree in P^1(Z/N)."""
        rows = {_p1_key(m[2], m[3], self.N) for m in self.matrices}
        return len(rows) == len(self.matrices)


def _p1_key(c: int, d: int, N: int):
    units = [u for u in range(1, N + 1) if math.gcd(u, N) == 1] if N > 1 else [1]
    return min(((u * c) % N, (u * d) % N) for u in units)


@lru_cache(maxsize=32)
def coset_reps(N: int) -> CosetSystem:
    if not 1 <= N <= MAX_LEVEL:
        raise ValueError(f"level must lie in [1, {MAX_LEVEL}]")
    mats, widths = [], []
    for c, d in _p1_points(N):
        a, b, c0, d0 = _lift(c, d, N)
        mats.append((a, b, c0, d0))
        # gamma(infinity) = a/c0; its width is N / gcd(c0^2, N)
        widths.append(N // math.gcd(c0 * c0, N) if N > 1 else 1)
    system = CosetSystem(N, tuple(mats), tuple(widths))
    if system.index != gamma0_index(N):
        raise ArithmeticError("coset count disagrees with the index formula")
    return system


def volume(N: int) -> float:
    return math.pi / 3.0 * gamma0_index(N)


# ---------------------------------------------------------------------------
# quadrature on F_1


@dataclass(frozen=True)
class QuadratureRule:
    nx: int = 12
    nu: int = 12
    u_panels: int = 4  # composite Gauss-Legendre panels in u, graded toward u = 0
    y_factor: float = Y_FACTOR
    tol: float = 1e-9

    def refined(self) -> QuadratureRule:
        return QuadratureRule(2 * self.nx, 2 * self.nu, self.u_panels, self.y_factor, self.tol)


@lru_cache(maxsize=16)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _gl(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = _leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (a + b), 0.5 * (b - a) * w


def f1_nodes(rule: QuadratureRule, y_max: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes z and weights for int_{F_1, y <= y_max} g dmu (y_max None: whole F_1)."""
    xs, wx = _gl(rule.nx, -0.5, 0.5)
    u_lo = 0.0 if y_max is None else 1.0 / y_max
    zs, ws = [], []
    for x, wxi in zip(xs, wx):
        u_hi = 1.0 / math.sqrt(1.0 - x * x)
        # panels graded geometrically toward u_lo, where cusp decay lives
        edges = u_lo + (u_hi - u_lo) * np.concatenate([[0.0], np.geomspace(0.05, 1.0, rule.u_panels)])
        for a, b in zip(edges[:-1], edges[1:]):
            u, wu = _gl(rule.nu, a, b)
            zs.append(x + 1j / u)
            ws.append(wxi * wu)
    return np.concatenate(zs), np.concatenate(ws)


def _mobius(m, z):
    a, b, c, d = m
    return (a * z + b) / (c * z + d)


@dataclass
class DomainSamples:
    """Sample points of Gamma_0(N)\\H, already moved to maximal height, with measure weights."""

    N: int
    points: np.ndarray
    weights: np.ndarray
    rule: QuadratureRule


@lru_cache(maxsize=16)
def domain_samples(N: int, rule: QuadratureRule = QuadratureRule()) -> DomainSamples:
    cs = coset_reps(N)
    zs, ws = [], []
    for m, w in zip(cs.matrices, cs.widths):
        z, wt = f1_nodes(rule, rule.y_factor * w)
        zs.append(_mobius(m, z))
        ws.append(wt)
    z = reduce_points(np.concatenate(zs), N)
    return DomainSamples(N, z, np.concatenate(ws), rule)


def integrate_abs_power(f: NewformData, power: float, rule: QuadratureRule = QuadratureRule()) -> float:
    """int_{Gamma_0(N)\\H} |f|^power dmu with the cusp regions beyond the truncation dropped."""
    ds = domain_samples(f.level, rule)
    vals, _ = evaluate_many(f, ds.points, rule.tol)
    return float(np.sum(ds.weights * np.abs(vals) ** power))


def constant_volume(N: int, rule: QuadratureRule = QuadratureRule()) -> float:
    """Quadrature of the constant 1 over the full (untruncated) domain."""
    z, w = f1_nodes(rule, None)
    return float(w.sum()) * coset_reps(N).index


@dataclass(frozen=True)
class NormResult:
    value: float
    coarse_value: float
    rel_change: float

    @property
    def error_estimate(self) -> float:
        return abs(self.coarse_value - self.value)


def _with_refinement(compute, rule: QuadratureRule) -> NormResult:
    a = compute(rule)
    b = compute(rule.refined())
    rel = abs(b - a) / abs(b) if b else abs(a - b)
    if rel > REFINE_TOL:
        raise QuadratureDisagreement(f"refinement changed the result by {rel:.2%}")
    return NormResult(b, a, rel)


def petersson_norm(f: NewformData, rule: QuadratureRule = QuadratureRule()) -> NormResult:
    """(f, f) = int |f|^2 dmu over Gamma_0(N)\\H (not volume-normalized)."""
    return _with_refinement(lambda r: integrate_abs_power(f, 2.0, r), rule)


def lr_norm(f: NewformData | None, r: float, level: int | None = None,
            rule: QuadratureRule = QuadratureRule()) -> float:
    """(vol^-1 int |f|^r dmu)^(1/r); f = None means the constant function 1."""
    if r == math.inf:
        if f is None:
            return 1.0
        return supnorm_scan(f, ScanGrid()).max_abs
    if not 2 <= r <= 64:
        raise ValueError("need 2 <= r <= 64 or r = inf")
    if f is None:
        N = level or 1
        return (constant_volume(N, rule) / volume(N)) ** (1.0 / r)
    res = _with_refinement(lambda q: integrate_abs_power(f, r, q), rule)
    return (res.value / volume(f.level)) ** (1.0 / r)


# ---------------------------------------------------------------------------
# mean value


@dataclass
class BasisWithNorms:
    forms: list
    norms: list  # NormResult per form
    dimension: int | None = None  # expected dimension from the data set

    @property
    def complete(self) -> bool:
        return self.dimension is not None and len(self.forms) == self.dimension

    @property
    def level(self) -> int:
        return self.forms[0].level


def build_basis(forms: list[NewformData], dimension: int | None = None,
                rule: QuadratureRule = QuadratureRule()) -> BasisWithNorms:
    if not forms:
        raise IncompleteBasis("empty basis")
    levels = {f.level for f in forms}
    if len(levels) != 1:
        raise ValueError("forms have different levels")
    chars = {tuple(c.to_dict()["dlog_multiplier"] for c in f.nebentypus) for f in forms}
    if len(chars) != 1:
        raise ValueError("forms have different nebentypus")
    # distinct Hecke eigenvalue systems are orthogonal; reject repeats
    keys = {tuple(np.round(f.coefficients[:50], 8)) for f in forms}
    if len(keys) != len(forms):
        raise ValueError("repeated eigenform in basis")
    return BasisWithNorms(list(forms), [petersson_norm(f, rule) for f in forms], dimension)


@dataclass(frozen=True)
class MValue:
    value: float
    partial: bool
    contributions: tuple = field(default=())


def m_chi(z, basis: BasisWithNorms, tol: float = 1e-10) -> MValue:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    contribs = []
    for f, nrm in zip(basis.forms, basis.norms):
        vals, _, _ = abs_invariant(f, z, tol)
        contribs.append(vals**2 / nrm.value)
    total = np.sum(contribs, axis=0)
    value = float(total[0]) if total.size == 1 else total
    return MValue(value, not basis.complete, tuple(float(c[0]) if c.size == 1 else c for c in contribs))


def m_chi_domain_average(basis: BasisWithNorms, rule: QuadratureRule = QuadratureRule()) -> MValue:
    """vol^-1 int M_chi dmu by the same coset quadrature as the norms."""
    N = basis.level
    ds = domain_samples(N, rule)
    total = np.zeros(ds.points.size)
    for f, nrm in zip(basis.forms, basis.norms):
        vals, _ = evaluate_many(f, ds.points, rule.tol)
        total += np.abs(vals) ** 2 / nrm.value
    return MValue(float(np.sum(ds.weights * total)) / volume(N), not basis.complete)


@dataclass(frozen=True)
class SpecialPointMechanism:
    m_at_z: float
    single_form_bound: float
    f_at_z: float
    norm: float
    partial: bool


def m_chi_at_special_point(basis: BasisWithNorms) -> SpecialPointMechanism:
    """M_chi(z_chi) against the single-form lower bound |f_1(z_chi)|^2 / (f_1, f_1)."""
    f = basis.forms[0]
    sp = special_point(f.nebentypus[0])
    mv = m_chi(sp.z.z, basis)
    fz = float(np.abs(evaluate_many(f, np.array([sp.z.z]), 1e-12)[0][0]))
    # the bound is read off the same sum so rounding cannot invert the inequality
    return SpecialPointMechanism(mv.value, mv.contributions[0], fz, basis.norms[0].value, mv.partial)


def reduced_height_floor(N: int, rule: QuadratureRule = QuadratureRule()) -> float:
    """Lowest height among the reduced quadrature nodes (drives coefficient needs)."""
    return float(domain_samples(N, rule).points.imag.min())
