"""Archimedean lowest-weight Whittaker functions: sup over the norm.

Three families, indexed like the local tables:

* discrete series of even weight k, W(a(y)) = y^(k/2) e^(-2 pi y), closed form;
* principal series with trivial central character, W(a(y)) = y^(1/2) K_ir(2 pi y);
* principal series with nontrivial central character, W(a(y)) = W_{1/2,ir}(4 pi y).

Everything that decays like e^(-pi r/2) is carried in scaled form, i.e. the
reported values are multiplied by e^(pi r/2) (norms by e^(pi r)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, loggamma

from .modforms import fit_exponent

TWO_PI = 2.0 * math.pi
R_MAX = 500.0
DISCRETE_LIMIT = (2.0 * math.pi) ** -0.25  # ratio / k^(1/4) as k -> infinity
WEIGHT2_MAX = 1.0 / (2.0 * math.pi * math.e)


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ArchRepresentation:
    kind: str  # "discrete", "principal", "principal_nt"
    k: int | None = None
    r: float | None = None

    def __post_init__(self):
        if self.kind == "discrete":
            if self.k is None or self.k < 2 or self.k % 2:
                raise ValueError("discrete series needs an even weight k >= 2")
        elif self.kind in ("principal", "principal_nt"):
            if self.r is None or not self.r > 0:
                raise ValueError("principal series needs r > 0")
            if self.r > R_MAX:
                raise ValueError(f"r > {R_MAX} is outside the scaled-Bessel range")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def discrete(cls, k: int) -> ArchRepresentation:
        return cls("discrete", k=k)

    @classmethod
    def principal(cls, r: float) -> ArchRepresentation:
        return cls("principal", r=float(r))

    @classmethod
    def principal_nt(cls, r: float) -> ArchRepresentation:
        return cls("principal_nt", r=float(r))

    @property
    def parameter(self) -> float:
        return float(self.k if self.kind == "discrete" else self.r)


@dataclass(frozen=True)
class ArchResult:
    rep: ArchRepresentation
    log_max: float  # log max|W| (scaled by e^(pi r/2) for principal series)
    log_norm: float  # log (W,W) as stated (scaled by e^(pi r))
    argmax_y: float
    log_norm_quadrature: float | None = None

    @property
    def ratio(self) -> float:
        return math.exp(self.log_max - 0.5 * self.log_norm)

    def to_row(self) -> dict:
        return {"kind": self.rep.kind, "parameter": self.rep.parameter, "max": _exp(self.log_max),
                "norm": _exp(self.log_norm), "log_max": self.log_max, "log_norm": self.log_norm,
                "ratio": self.ratio, "argmax_y": self.argmax_y}


def _exp(x: float) -> float:
    """exp that saturates to inf; large-weight values are reported through their logs."""
    return math.exp(x) if x < 700.0 else math.inf


# ---------------------------------------------------------------------------
# discrete series


def discrete_log_max(k: int) -> float:
    return 0.5 * k * math.log(k / (4.0 * math.pi)) - 0.5 * k


def discrete_log_norm(k: int) -> float:
    return -k * math.log(4.0 * math.pi) + float(gammaln(k))


def discrete_argmax(k: int) -> float:
    return k / (4.0 * math.pi)


def discrete_argmax_numeric(k: int) -> float:
    """Maximizer of (k/2) log y - 2 pi y by bounded search (cross-check)."""
    y0 = discrete_argmax(k)
    res = minimize_scalar(lambda t: -(0.5 * k * t - TWO_PI * math.exp(t)),
                          bounds=(math.log(y0) - 3, math.log(y0) + 3), method="bounded",
                          options={"xatol": 1e-12})
    return math.exp(res.x)


def weight2_max() -> tuple[float, float]:
    """(argmax, max) of y e^(-2 pi y)."""
    y = discrete_argmax(2)
    return y, y * math.exp(-TWO_PI * y)


# ---------------------------------------------------------------------------
# principal series, trivial central character


def _scaled_k_trapezoid(r: float, x: float, h_scale: float) -> tuple[float, float]:
    # K_ir(x) = (1/2) int_R exp(-x cosh t + i r t) dt, on the line Im t = pi/2 - eps;
    # the factor e^(pi r/2) cancels the e^(-r (pi/2 - eps)) picked up by the shift
    eps = min(0.5, 3.0 / r)
    theta = 0.5 * math.pi - eps
    # beyond s_max the integrand is below e^-40 relative to its O(1) bulk
    s_max = math.acosh(max(1.0, (40.0 + r * eps) / (x * math.sin(eps))))
    f_max = r + x * math.sinh(s_max)
    # two nodes per shortest period suffice: the rule converges geometrically
    # for entire integrands, and scaled_k checks against a half step
    h = min(0.1, math.pi / f_max) * h_scale
    s = np.arange(-s_max, s_max + 0.5 * h, h)
    expo = -x * np.cosh(s + 1j * theta) + 1j * r * s + r * eps
    terms = np.exp(expo)
    # second value: L1 mass of the sum, the scale of its rounding error
    return float(0.5 * h * np.sum(terms).real), float(0.5 * h * np.sum(np.abs(terms)))


def scaled_k(r: float, x: float, rel_tol: float = 1e-8) -> float:
    """e^(pi r/2) K_ir(x) by a contour-shifted trapezoid rule.

    The shifted integrand is analytic and decays double-exponentially, so the
    trapezoid rule converges geometrically in the step; a half-step refinement
    is compared and a disagreement beyond rel_tol raises QuadratureError.
    """
    if not r > 0 or not x > 0:
        raise ValueError("need r > 0 and x > 0")
    coarse, _ = _scaled_k_trapezoid(r, x, 1.0)
    fine, mass = _scaled_k_trapezoid(r, x, 0.5)
    # absolute floors: K~ exponentially small, or near a zero where cancellation dominates
    scale = max(abs(fine), 1e-6, 1e-6 * mass)
    if abs(fine - coarse) > rel_tol * scale:
        raise QuadratureError(f"K_ir refinement mismatch at r={r}, x={x}")
    return fine


def _principal_profile(r: float, y: float) -> float:
    return math.sqrt(y) * abs(scaled_k(r, TWO_PI * y))


def _maximize(profile, y_grid: np.ndarray) -> tuple[float, float]:
    vals = np.array([profile(y) for y in y_grid])
    k = int(np.argmax(vals))
    k = min(max(k, 1), len(y_grid) - 2)
    res = minimize_scalar(lambda y: -profile(y), bracket=(y_grid[k - 1], y_grid[k], y_grid[k + 1]),
                          method="golden", tol=1e-9)
    if -res.fun < vals.max():
        return float(y_grid[int(np.argmax(vals))]), float(vals.max())
    return float(res.x), float(-res.fun)


def principal_max(r: float, samples: int = 32) -> tuple[float, float]:
    """(argmax y, max_y y^(1/2) |K_ir(2 pi y)| e^(pi r/2)).

    The maximum sits in the transition range x = 2 pi y within a few r^(1/3)
    below x = r; the coarse grid brackets it and golden section refines it.
    """
    w = r ** (1.0 / 3.0)
    x_lo = max(r - 8.0 * w, 0.25 * r)
    xs = np.linspace(x_lo, r + 3.0 * w, samples)
    return _maximize(lambda y: _principal_profile(r, y), xs / TWO_PI)


def principal_log_norm(r: float) -> float:
    """log of e^(pi r) (1/4) Gamma_R(1+2ir) Gamma_R(1-2ir), Gamma_R(s) = pi^(-s/2) Gamma(s/2)."""
    lg = loggamma(0.5 + 1j * r)
    return math.log(0.25) - math.log(math.pi) + 2.0 * float(lg.real) + math.pi * r


def principal_log_norm_exact(r: float) -> float:
    """log of e^(pi r) int_0^inf |y^(1/2) K_ir(2 pi y)|^2 dy/y = e^(pi r) pi / (8 cosh pi r)."""
    return math.log(math.pi / 4.0) - math.log1p(math.exp(-TWO_PI * r))


def principal_norm_quadrature(r: float, rel_tol: float = 1e-8) -> float:
    """e^(pi r) (W,W) by direct quadrature of (1/2 pi) int |K~_ir(x)|^2 dx (for checks)."""
    from scipy.integrate import quad

    def g(t):  # x = e^t
        x = math.exp(t)
        return x * scaled_k(r, x, rel_tol) ** 2

    # K~ ~ amplitude r^-1/2 oscillation in log x for x << r; tail beyond r + 40 r^(1/3) is negligible
    t_hi = math.log(r + 40.0 * r ** (1.0 / 3.0) + 40.0)
    edges = np.linspace(-40.0, t_hi, 400)
    total = sum(quad(g, a, b, epsrel=1e-10, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))
    return total / TWO_PI


# ---------------------------------------------------------------------------
# principal series, nontrivial central character


def scaled_whittaker(r: float, u: float, dps: int = 30) -> float:
    """|W_{1/2,ir}(u)| e^(pi r/2) through mpmath's confluent hypergeometric code."""
    with mpmath.workdps(dps):
        return float(abs(mpmath.whitw(0.5, 1j * r, u)) * mpmath.exp(mpmath.pi * r / 2))


def nontrivial_max(r: float, samples: int = 40) -> tuple[float, float]:
    """(argmax y, max_y |W_{1/2,ir}(4 pi y)| e^(pi r/2)); turning point near 4 pi y = 2r + 1."""
    w = r ** (1.0 / 3.0)
    us = np.linspace(2.0 * r - 6.0 * w, 2.0 * r + 3.0 * w, samples)
    us = us[us > 0]
    return _maximize(lambda y: scaled_whittaker(r, 2.0 * TWO_PI * y), us / (2.0 * TWO_PI))


def nontrivial_log_norm(r: float) -> float:
    """log of e^(pi r) pi Im digamma(ir) / (sinh(2 pi r) Gamma(ir) Gamma(-ir)).

    Uses Im digamma(ir) = 1/(2r) + (pi/2) coth(pi r) and
    Gamma(ir) Gamma(-ir) = pi / (r sinh pi r), so the value is
    r (1/(2r) + (pi/2) coth(pi r)) / (2 cosh pi r).
    """
    coth = 1.0 / math.tanh(math.pi * r)
    return (math.log(r * (0.5 / r + 0.5 * math.pi * coth)) - math.log(2.0)
            + math.pi * r - (math.pi * r + math.log1p(math.exp(-TWO_PI * r)) - math.log(2.0)))


def nontrivial_norm_quadrature(r: float, dps: int = 20) -> float:
    """e^(pi r) int_0^inf |W_{1/2,ir}(u)|^2 du/u by mpmath quadrature (slow; small r)."""
    with mpmath.workdps(dps):
        g = lambda u: abs(mpmath.whitw(0.5, 1j * r, u)) ** 2 / u  # noqa: E731
        nodes = [0] + [r * k / 4 for k in range(1, 17)] + [6 * r, mpmath.inf]
        return float(mpmath.quad(g, nodes) * mpmath.exp(mpmath.pi * r))


# ---------------------------------------------------------------------------
# dispatch and fits


def arch_result(rep: ArchRepresentation) -> ArchResult:
    if rep.kind == "discrete":
        k = rep.k
        return ArchResult(rep, discrete_log_max(k), discrete_log_norm(k), discrete_argmax(k))
    if rep.kind == "principal":
        y, m = principal_max(rep.r)
        return ArchResult(rep, math.log(m), principal_log_norm(rep.r), y, principal_log_norm_exact(rep.r))
    y, m = nontrivial_max(rep.r)
    return ArchResult(rep, math.log(m), nontrivial_log_norm(rep.r), y)


def arch_ratio(rep: ArchRepresentation) -> float:
    if rep.kind == "principal_nt":
        return arch_ratio_nontrivial_central(rep.r).ratio
    return arch_result(rep).ratio


@dataclass(frozen=True)
class NontrivialCentralResult:
    r: float
    scaled_max: float
    scaled_norm: float
    argmax_y: float
    exploratory: bool = True

    @property
    def ratio(self) -> float:
        return self.scaled_max / math.sqrt(self.scaled_norm)


def arch_ratio_nontrivial_central(r: float) -> NontrivialCentralResult:
    if not 10 <= r <= 300:
        raise ValueError("r must lie in [10, 300]")
    y, m = nontrivial_max(r)
    return NontrivialCentralResult(r, m, math.exp(nontrivial_log_norm(r)), y)


@dataclass(frozen=True)
class ExponentFit:
    kind: str
    parameters: tuple
    max_exponent: float
    norm_exponent: float
    ratio_exponent: float
    rows: tuple


def fit_family(kind: str, params: Sequence[float]) -> ExponentFit:
    """Least-squares slopes of log max, log norm and log ratio against log parameter.

    For principal series the e^(-pi r/2) and e^(-pi r) factors are already
    divided out, so the slopes are the polynomial exponents.
    """
    rows = []
    for t in params:
        rep = ArchRepresentation(kind, k=int(t)) if kind == "discrete" else ArchRepresentation(kind, r=float(t))
        res = arch_result(rep)
        rows.append(res.to_row())
    ps = [row["parameter"] for row in rows]
    return ExponentFit(
        kind,
        tuple(ps),
        _log_slope(ps, [row["log_max"] for row in rows]) if kind != "discrete" else float("nan"),
        _log_slope(ps, [row["log_norm"] for row in rows]) if kind != "discrete" else float("nan"),
        fit_exponent(ps, [row["ratio"] for row in rows]),
        tuple(rows),
    )


def _log_slope(xs: Sequence[float], log_ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.asarray(log_ys, float), 1)[0])


def default_grid(lo: float, hi: float, n: int = 20) -> np.ndarray:
    return np.geomspace(lo, hi, n)
