"""Weight-2 newforms on the upper half plane, normalized as

    f(z) = y * sum_n a_n n^(1/2) e(n z),    a_1 = 1,

so |f| is Gamma_0(N)-invariant. Evaluation carries a rigorous truncation
bound from |a_n| <= d(n) <= n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .characters import DirichletChar, find_b, root_table
from .padic import factorize
from .whittaker_local import spherical_h

TWO_PI = 2.0 * math.pi
WEIGHT2_MAX = 1.0 / (TWO_PI * math.e)  # max_y y e^{-2 pi y}


class InsufficientCoefficients(ValueError):
    def __init__(self, needed: int, available: int, y: float):
        super().__init__(f"need {needed} coefficients at height {y:.3g}, have {available}")
        self.needed = needed
        self.available = available


class CertificateUnavailable(ValueError):
    pass


@dataclass
class NewformData:
    level: int
    nebentypus: tuple[DirichletChar, ...]
    coefficients: np.ndarray  # a_1 .. a_M
    source: str = ""
    label: str = ""
    l_half: complex | None = None
    petersson_reference: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if isinstance(self.nebentypus, DirichletChar):
            self.nebentypus = (self.nebentypus,)
        fac = factorize(self.level)
        parts = {chi.p: chi for chi in self.nebentypus}
        for p, c in fac.items():
            if p not in parts:
                parts[p] = DirichletChar.trivial(p, c) if p != 2 else None
        self.nebentypus = tuple(parts[p] for p in sorted(parts) if parts[p] is not None)
        self._weights = None

    @property
    def M(self) -> int:
        return self.coefficients.size

    def a(self, n: int) -> complex:
        return complex(self.coefficients[n - 1])

    def chi(self, n: int) -> complex:
        if math.gcd(n, self.level) != 1:
            return 0j
        out = 1 + 0j
        for part in self.nebentypus:
            out *= part(n)
        return out

    @property
    def ramified_exponents(self) -> dict[int, int]:
        return factorize(self.level)

    @property
    def primitive_nebentypus(self) -> bool:
        fac = self.ramified_exponents
        got = {chi.p: chi.conductor_exponent for chi in self.nebentypus}
        return all(got.get(p, 0) == c for p, c in fac.items())

    @property
    def weights(self) -> np.ndarray:
        """a_n n^(1/2), the classical coefficients."""
        if self._weights is None:
            n = np.arange(1, self.M + 1)
            self._weights = self.coefficients * np.sqrt(n)
        return self._weights


@dataclass(frozen=True)
class Point:
    """x + iy with exact rational coordinates where available."""

    x: Fraction | float
    y: Fraction | float

    @classmethod
    def of(cls, z) -> Point:
        if isinstance(z, Point):
            return z
        if isinstance(z, tuple):
            return cls(*z)
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(float(self.x), float(self.y))


@dataclass(frozen=True)
class EvalReport:
    point: Point
    value: complex
    truncation_bound: float
    terms_used: int

    @property
    def certified(self) -> bool:
        return self.truncation_bound < 1e-3 * abs(self.value)

    def to_dict(self) -> dict:
        return {
            "x": str(self.point.x), "y": str(self.point.y),
            "re": self.value.real, "im": self.value.imag, "abs": abs(self.value),
            "truncation_bound": self.truncation_bound, "terms_used": self.terms_used,
            "certified": self.certified,
        }


# ---------------------------------------------------------------------------
# truncation


def tail_bound(y: float, m: int) -> float:
    """Bound for y * sum_{n>m} n^(3/2) e^{-2 pi n y} (inf when not yet decreasing)."""
    x = math.exp(-TWO_PI * y)
    rho = ((m + 2) / (m + 1)) ** 1.5 * x
    if rho >= 1.0:
        return math.inf
    return y * (m + 1) ** 1.5 * x ** (m + 1) / (1.0 - rho)


def tail_bounds(y: np.ndarray, m: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    logx = -TWO_PI * y
    rho = ((m + 2) / (m + 1)) ** 1.5 * np.exp(logx)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = y * np.exp(1.5 * np.log(m + 1) + (m + 1) * logx) / (1.0 - rho)
    return np.where(rho < 1.0, out, np.inf)


def terms_needed(y: float, tol: float, cap: int | None = None) -> int:
    """Least m with tail_bound(y, m) <= tol (searching up to cap if given)."""
    if y <= 0:
        raise ValueError("need y > 0")
    # bound is decreasing once n > 3/(4 pi y); bisect past that point
    lo = max(1, int(1.5 / (TWO_PI * y)))
    hi = lo
    while tail_bound(y, hi) > tol:
        hi *= 2
        if cap is not None and hi > 64 * cap:
            return hi
    if tail_bound(y, lo) <= tol:
        # walk down to the least admissible m (bound may be finite below lo)
        m = lo
        while m > 1 and tail_bound(y, m - 1) <= tol:
            m -= 1
        return m
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(y, mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# evaluation


def _phases(n: np.ndarray, x) -> np.ndarray:
    if isinstance(x, Fraction) and x.denominator <= 1 << 20:
        q = x.denominator
        return root_table(q)[(n * (x.numerator % q)) % q]
    return np.exp(1j * TWO_PI * n * float(x))


def _sum_terms(weights: np.ndarray, pt: Point, m: int, mask=None) -> complex:
    n = np.arange(1, m + 1)
    y = float(pt.y)
    terms = weights[:m] * _phases(n, pt.x) * np.exp(-TWO_PI * n * y)
    if mask is not None:
        terms = terms[mask[:m]]
    return complex(y * np.sum(terms))


def evaluate(f: NewformData, z, tol: float = 1e-12) -> EvalReport:
    pt = Point.of(z)
    y = float(pt.y)
    if y <= 0:
        raise ValueError("point must lie in the upper half plane")
    m = terms_needed(y, tol, cap=f.M)
    if m > f.M:
        raise InsufficientCoefficients(m, f.M, y)
    val = _sum_terms(f.weights, pt, m)
    return EvalReport(pt, val, tail_bound(y, m), m)


def evaluate_many(f: NewformData, z: np.ndarray, tol: float = 1e-10, strict: bool = True):
    """Vectorized f(z) by Horner in q = e(z). Returns (values, tail bounds).

    Points whose height needs more than the available coefficients raise,
    or (strict=False) get their best truncation and an honest bound.
    """
    z = np.asarray(z, dtype=complex).ravel()
    out = np.zeros(z.size, dtype=complex)
    bounds = np.zeros(z.size)
    if z.size == 0:
        return out, bounds
    y = z.imag
    if np.any(y <= 0):
        raise ValueError("points must lie in the upper half plane")
    order = np.argsort(-y)
    w = f.weights
    chunk = 4096
    for s in range(0, z.size, chunk):
        idx = order[s:s + chunk]
        ymin = float(y[idx].min())
        m = terms_needed(ymin, tol, cap=f.M)
        if m > f.M:
            if strict:
                raise InsufficientCoefficients(m, f.M, ymin)
            m = f.M
        q = np.exp(2j * math.pi * z[idx])
        acc = np.zeros(idx.size, dtype=complex)
        for k in range(m - 1, -1, -1):
            acc = acc * q + w[k]
        out[idx] = y[idx] * acc * q
        bounds[idx] = tail_bounds(y[idx], np.full(idx.size, m))
    return out, bounds


def abs_invariant(f: NewformData, z: np.ndarray, tol: float = 1e-10, strict: bool = True):
    """|f| after moving each point to the highest point of its orbit."""
    zr = reduce_points(np.asarray(z, dtype=complex).ravel(), f.level)
    vals, bnd = evaluate_many(f, zr, tol, strict=strict)
    return np.abs(vals), bnd, zr


# ---------------------------------------------------------------------------
# geometry


def atkin_lehner_point(z, N: int):
    """-1/(N z), exact for Point input."""
    if isinstance(z, Point):
        x, y = Fraction(z.x), Fraction(z.y)
        d = N * (x * x + y * y)
        if d == 0:
            raise ZeroDivisionError("z = 0")
        return Point(-x / d, y / d)
    z = complex(z)
    if z == 0:
        raise ZeroDivisionError("z = 0")
    return -1.0 / (N * z)


def max_orbit_height(pt: Point, N: int) -> tuple[Fraction, tuple[int, int]]:
    """max over Gamma_0(N) of Im(gamma z) = y / |cz+d|^2, exactly."""
    x, y = Fraction(pt.x), Fraction(pt.y)
    best, row = y, (0, 1)
    k = 1
    while (N * k) ** 2 * y * y < 1:
        c = N * k
        base = math.floor(-c * x)
        for d in (base, base + 1):
            if math.gcd(c, d) != 1:
                continue
            h = y / ((c * x + d) ** 2 + c * c * y * y)
            if h > best:
                best, row = h, (c, d)
        k += 1
    return best, row


def reduce_gamma0(z: np.ndarray, N: int) -> np.ndarray:
    """Highest point of each Gamma_0(N)-orbit, x taken mod 1."""
    z = np.asarray(z, dtype=complex).copy()
    x, y = z.real, z.imag
    best_h = y.copy()
    best_c = np.zeros(z.size, dtype=np.int64)
    best_d = np.ones(z.size, dtype=np.int64)
    live = np.nonzero(N * y < 1)[0]
    k = 1
    while live.size:
        c = N * k
        xl, yl = x[live], y[live]
        base = np.floor(-c * xl).astype(np.int64)
        for d in (base, base + 1):
            h = yl / ((c * xl + d) ** 2 + (c * yl) ** 2)
            ok = (np.gcd(c, d) == 1) & (h > best_h[live])
            sel = live[ok]
            best_h[sel] = h[ok]
            best_c[sel] = c
            best_d[sel] = d[ok]
        k += 1
        live = live[N * k * y[live] < 1]
    out = z.copy()
    idx = np.nonzero(best_c)[0]
    if idx.size:
        c, d = best_c[idx], best_d[idx]
        a = _inverse_mod(d, c)
        out[idx] = a / c - 1.0 / (c * (c * z[idx] + d))
    out = (out.real % 1.0) + 1j * out.imag
    return out


def _inverse_mod(d: np.ndarray, c: np.ndarray) -> np.ndarray:
    """d^-1 mod c elementwise (gcd(c, d) = 1), by a vectorized extended Euclid."""
    r0, r1 = c.astype(np.int64), np.mod(d, c).astype(np.int64)
    s0, s1 = np.zeros_like(r0), np.ones_like(r0)
    while np.any(r1 != 0):
        live = r1 != 0
        q = np.where(live, r0 // np.where(live, r1, 1), 0)
        r0, r1 = np.where(live, r1, r0), np.where(live, r0 - q * r1, r1)
        s0, s1 = np.where(live, s1, s0), np.where(live, s0 - q * s1, s1)
    return np.mod(s0, c)


def reduce_points(z: np.ndarray, N: int, rounds: int = 4) -> np.ndarray:
    """Maximize height using Gamma_0(N) and z -> -conj(-1/(N z)).

    The reflection preserves |f| for newforms because f | W_N is a unimodular
    multiple of the form with conjugated coefficients.
    """
    cur = reduce_gamma0(z, N)
    for _ in range(rounds):
        refl = -np.conj(-1.0 / (N * cur))
        cand = reduce_gamma0(refl, N)
        better = cand.imag > cur.imag * (1 + 1e-12)
        if not better.any():
            break
        cur = np.where(better, cand, cur)
    return cur


# ---------------------------------------------------------------------------
# special point


@dataclass(frozen=True)
class SpecialPoint:
    """z_chi = a/p + i/p^3 for a primitive even nebentypus chi mod p^2.

    b is attached to the central character of the local component at p,
    which restricts to conj(chi) on units; see ``special_point``.
    """

    chi: DirichletChar
    b: int
    a: int
    z: Point
    z_prime: Point

    @property
    def p(self) -> int:
        return self.chi.p

    def chart(self, tau: complex) -> complex:
        """tau -> p tau / (1 + a p^2 tau); i maps to -conj(z'_chi), and |f| along
        the chart equals the twisted expansion at tau."""
        p = self.p
        return p * tau / (1 + self.a * p * p * tau)


def special_point(chi: DirichletChar) -> SpecialPoint:
    """b solves conj(chi)(1 - p z) = e(b z / p); a = 1/b mod p."""
    if chi.c != 2 or not chi.is_primitive or not chi.is_even:
        raise ValueError("need an even primitive character mod p^2")
    bp = find_b(chi.conj())
    p = chi.p
    z = Point(Fraction(bp.a, p), Fraction(1, p**3))
    return SpecialPoint(chi, bp.b, bp.a, z, atkin_lehner_point(z, p * p))


def _twist_mask(f: NewformData, p: int) -> np.ndarray:
    return (np.arange(1, f.M + 1) % p) == 1


def twisted_expansion_eval(f: NewformData, chi: DirichletChar, z, tol: float = 1e-12) -> EvalReport:
    """y p^(1/2) sum_{n = 1 mod p} a_n n^(1/2) e(n z)."""
    p = chi.p
    pt = Point.of(z)
    y = float(pt.y)
    if y <= 0:
        raise ValueError("point must lie in the upper half plane")
    m = terms_needed(y, tol / math.sqrt(p), cap=f.M)
    if m > f.M:
        raise InsufficientCoefficients(m, f.M, y)
    val = math.sqrt(p) * _sum_terms(f.weights, pt, m, _twist_mask(f, p))
    return EvalReport(pt, val, math.sqrt(p) * tail_bound(y, m), m)


def twisted_many(f: NewformData, p: int, tau: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    tau = np.asarray(tau, dtype=complex).ravel()
    m = terms_needed(float(tau.imag.min()), tol, cap=f.M)
    if m > f.M:
        raise InsufficientCoefficients(m, f.M, float(tau.imag.min()))
    n = np.arange(1, m + 1)
    sel = n % p == 1
    n = n[sel]
    w = f.weights[:m][sel]
    out = np.empty(tau.size, dtype=complex)
    for s in range(0, tau.size, 2048):
        t = tau[s:s + 2048]
        out[s:s + 2048] = t.imag * math.sqrt(p) * (np.exp(2j * math.pi * np.outer(t, n)) @ w)
    return out


@dataclass(frozen=True)
class NeighborhoodEstimate:
    area: float
    target: float
    threshold: float
    samples: int


def large_neighborhood(f: NewformData, chi: DirichletChar, delta: float, kappa: float = math.exp(-TWO_PI),
                       nx: int = 64, ny: int = 48, y_top: float = 1.0) -> NeighborhoodEstimate:
    """Hyperbolic area of {tau : y >= p^(delta - 1/2), |twisted(tau)| >= kappa p^delta}
    over one period in x. The chart tau -> z is an isometry up to scaling,
    so areas transfer to the neighbourhood of z'_chi (hence of z_chi)."""
    if not 0 < delta < 0.5:
        raise ValueError("need 0 < delta < 1/2")
    p = chi.p
    y_lo = p ** (delta - 0.5)
    thr = kappa * p**delta
    # midpoint rule in (x, u = 1/y): dmu = dx du
    xs = (np.arange(nx) + 0.5) / nx
    u_hi, u_lo = 1.0 / y_lo, 1.0 / y_top
    us = u_lo + (np.arange(ny) + 0.5) / ny * (u_hi - u_lo)
    X, U = np.meshgrid(xs, us)
    vals = np.abs(twisted_many(f, p, (X + 1j / U).ravel()))
    frac_hits = (vals >= thr).reshape(U.shape)
    area = float(frac_hits.sum() * (1.0 / nx) * (u_hi - u_lo) / ny)
    return NeighborhoodEstimate(area, p ** (0.5 - delta), thr, int(vals.size))


# ---------------------------------------------------------------------------
# sup norm


@dataclass(frozen=True)
class ScanGrid:
    nx: int = 64
    ny: int = 64
    y_min: float | None = None
    y_max: float = 1.0
    chart_samples: int = 256
    tol: float = 1e-10

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "y_min": self.y_min, "y_max": self.y_max,
                "chart_samples": self.chart_samples, "tol": self.tol}


@dataclass(frozen=True)
class ScanResult:
    max_abs: float
    argmax: complex
    exponent: float
    points: int
    worst_bound: float
    special_values: dict
    level: int = 1

    @property
    def normalized_exponent(self) -> float:
        """log(max / (2 pi e)^-1) / log N: the exponent once the constant is divided out."""
        return math.log(self.max_abs / WEIGHT2_MAX) / math.log(self.level) if self.level > 1 else float("nan")


def certified_floor(f: NewformData, tol: float) -> float:
    """Smallest height at which the stored coefficients meet tol."""
    lo, hi = 1e-6, 1.0
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if terms_needed(mid, tol, cap=f.M) <= f.M:
            hi = mid
        else:
            lo = mid
    return hi


def supnorm_scan(f: NewformData, grid: ScanGrid = ScanGrid(), chi: DirichletChar | None = None) -> ScanResult:
    """Grid maximum of |f| with z_chi, z'_chi and the horocycle Im tau = 1/(2 pi)
    of the twisted chart as mandatory samples (primitive nebentypus mod p^2)."""
    N = f.level
    y_min = grid.y_min or max(certified_floor(f, grid.tol), 1.0 / N**2)
    xs = np.arange(grid.nx) / grid.nx
    ys = np.geomspace(y_min, grid.y_max, grid.ny)
    X, Y = np.meshgrid(xs, ys)
    pts = [(X + 1j * Y).ravel()]
    special = {}
    fac = factorize(N)
    if chi is None and len(fac) == 1 and f.primitive_nebentypus:
        (p, c), = fac.items()
        if c == 2:
            chi = f.nebentypus[0]
    if chi is not None and chi.is_even:
        sp = special_point(chi)
        tau = (np.arange(grid.chart_samples) / grid.chart_samples) + 1j / TWO_PI
        chart = np.array([sp.chart(t) for t in tau])
        pts += [np.array([sp.z.z, sp.z_prime.z]), chart]
    z = np.concatenate(pts)
    vals, bnd, _ = abs_invariant(f, z, grid.tol)
    k = int(np.argmax(vals))
    if chi is not None and chi.is_even:
        n0 = pts[0].size
        special = {"z_chi": float(vals[n0]), "z_prime_chi": float(vals[n0 + 1]),
                   "chart_max": float(vals[n0 + 2:].max())}
    return ScanResult(float(vals[k]), complex(z[k]), math.log(vals[k]) / math.log(N) if N > 1 else float("nan"),
                      int(z.size), float(bnd.max()), special, N)


# ---------------------------------------------------------------------------
# local invariants and certificates


def local_h(f: NewformData, p: int) -> float:
    """h of the local component at p: p^(floor(c/2)/2) at ramified p with
    primitive nebentypus, 1 for an unramified twist of Steinberg, the spherical
    maximum from the Satake roots at unramified p."""
    c = f.ramified_exponents.get(p, 0)
    if c == 1 and all(ch.p != p or ch.conductor_exponent == 0 for ch in f.nebentypus):
        return 1.0  # Steinberg twist: |W| <= 1 on the diagonal
    if c:
        part = next(ch for ch in f.nebentypus if ch.p == p)
        if part.conductor_exponent != c:
            raise CertificateUnavailable(f"nebentypus not primitive at {p}")
        return p ** (0.5 * (c // 2))
    if p > f.M:
        raise InsufficientCoefficients(p, f.M, 0.0)
    ap = f.a(p)
    disc = np.sqrt(ap * ap - 4 * f.chi(p))
    alpha, beta = (ap + disc) / 2, (ap - disc) / 2
    return spherical_h(alpha, beta, p)


@dataclass(frozen=True)
class Certificate:
    value: float
    h_product: float
    scan_max: float | None
    passed: bool | None


def lower_bound_certificate(f: NewformData, scan: ScanResult | None = None) -> Certificate:
    """(2 pi e)^-1 prod_{p^c || N} p^(floor(c/2)/2); needs primitive nebentypus."""
    if not f.primitive_nebentypus:
        raise CertificateUnavailable("nebentypus is not primitive; twist-minimality is not certified")
    prod = 1.0
    for p, c in f.ramified_exponents.items():
        prod *= p ** (0.5 * (c // 2))
    val = WEIGHT2_MAX * prod
    if scan is None:
        return Certificate(val, prod, None, None)
    return Certificate(val, prod, scan.max_abs, scan.max_abs >= val)


def certificate_value_for_level(N: int) -> float:
    prod = 1.0
    for p, c in factorize(N).items():
        prod *= p ** (0.5 * (c // 2))
    return WEIGHT2_MAX * prod


def hecke_coefficient_bound(f: NewformData, local_h_values: dict | None = None) -> tuple[float, int]:
    """max_n |a_n| / (n^(1/2) prod_{p | n} h_p); returns (ratio, argmax n)."""
    n_all = np.arange(1, f.M + 1)
    denom = np.sqrt(n_all.astype(float))
    hs = dict(local_h_values or {})
    for p in _primes_upto(f.M):
        h = hs.get(p)
        if h is None:
            h = hs[p] = local_h(f, p)
        if h != 1.0:
            denom[p - 1::p] *= h
    ratio = np.abs(f.coefficients) / denom
    k = int(np.argmax(ratio))
    return float(ratio[k]), k + 1


def _primes_upto(n: int) -> list[int]:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(n**0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = False
    return [int(i) for i in np.nonzero(sieve)[0]]


# ---------------------------------------------------------------------------
# Wilton sums and the Hecke integral


def wilton_sum(f: NewformData, M: int, x) -> complex:
    if M > f.M:
        raise InsufficientCoefficients(M, f.M, 0.0)
    n = np.arange(1, M + 1)
    return complex(np.sum(f.coefficients[:M] * _phases(n, x)))


def wilton_partials(f: NewformData, x, M: int | None = None) -> np.ndarray:
    """S(m, x) for m = 1..M (running sums)."""
    M = f.M if M is None else M
    n = np.arange(1, M + 1)
    return np.cumsum(f.coefficients[:M] * _phases(n, x))


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass(frozen=True)
class WiltonScan:
    best_ratio: float
    best_M: int
    best_x: Fraction
    upper_exponent: float


def wilton_scan(f: NewformData, p: int, M_max: int, seed: int = 0, n_random: int = 64,
                M_grid: Sequence[int] | None = None) -> WiltonScan:
    """Lower side: max over x = a/p and M <= M_max of |S(M,x)| / M^(1/2).
    Upper side: slope of log max_x |S(M,x)| over random x."""
    best = (0.0, 1, Fraction(0))
    Ms = np.arange(1, M_max + 1)
    for a in range(1, p):
        x = Fraction(a, p)
        r = np.abs(wilton_partials(f, x, M_max)) / np.sqrt(Ms)
        k = int(np.argmax(r))
        if r[k] > best[0]:
            best = (float(r[k]), k + 1, x)
    rng = np.random.default_rng(seed)
    xr = rng.random(n_random)
    M_grid = list(M_grid or np.unique(np.geomspace(50, f.M, 12).astype(int)))
    maxes = []
    for M in M_grid:
        n = np.arange(1, M + 1)
        S = np.exp(2j * math.pi * np.outer(xr, n)) @ f.coefficients[:M]
        maxes.append(float(np.abs(S).max()))
    return WiltonScan(best[0], best[1], best[2], fit_exponent(M_grid, maxes))


@dataclass(frozen=True)
class HeckeIntegral:
    value: complex
    series_value: complex
    error_estimate: float
    l_half: complex | None


def hecke_integral(f: NewformData, tol: float = 1e-10) -> HeckeIntegral:
    """int_{1/N}^1 f(iy) dy / y by adaptive quadrature, with the termwise
    closed form sum a_n n^(1/2) (e^{-2 pi n/N} - e^{-2 pi n}) / (2 pi n) as check."""
    from scipy.integrate import quad

    N = f.level
    y0 = 1.0 / N
    m = terms_needed(y0, tol, cap=f.M)
    if m > f.M:
        raise InsufficientCoefficients(m, f.M, y0)
    w = f.weights[:m]
    n = np.arange(1, m + 1)

    def g(y, part):
        v = np.sum(w * np.exp(-TWO_PI * n * y))  # f(iy)/y
        return v.real if part == 0 else v.imag

    re, e1 = quad(g, y0, 1.0, args=(0,), epsabs=1e-13, epsrel=1e-12, limit=200)
    im, e2 = quad(g, y0, 1.0, args=(1,), epsabs=1e-13, epsrel=1e-12, limit=200)
    series = complex(np.sum(w * (np.exp(-TWO_PI * n / N) - np.exp(-TWO_PI * n)) / (TWO_PI * n)))
    err = e1 + e2 + (1.0 - y0) * tail_bound(y0, m) / y0
    return HeckeIntegral(complex(re, im), series, err, f.l_half)


def oldform_pullback(f: NewformData, d: int) -> NewformData:
    """g(z) = f(d z) as an (unvalidated) expansion at level d N."""
    M = f.M * d
    a = np.zeros(M, dtype=complex)
    a[d - 1::d] = f.coefficients * math.sqrt(d)
    return NewformData(f.level * d, tuple(), a, source=f"pullback of {f.label} by {d}",
                       label=f"{f.label}|B{d}")
