"""Whittaker newvector of a twist-minimal principal series of GL2(Q_p).

Two independent routes to the same numbers:

* closed forms on the cells a(y) k of B\\G/I_c, and
* ``JacquetEngine``, which integrates the induced-model newvector against
  conj(psi) exactly. Every integrand is locally constant, so each valuation
  shell of the integral is a finite character sum; shells are aggregated
  with an FFT over the unit classes of y.

Conventions. psi(x) = e({x}_p). The induced model of 1 [+] chi is
f(n diag(a, d) g) = chi(d) |a/d|^(1/2) f(g); its newvector is

    f([[a, b], [g, d]]) = chi(d) |det|^(1/2) / |d|   if v(g) - v(d) >= c,

and 0 otherwise. For chi1 [+] chi2 with chi1 unramified we use
W(g) = chi1(det g) W_{1 [+] chi}(g), chi = chi2 / chi1.

Cell representatives: kappa_0 = [[1,0],[1,1]], kappa_i = a(p^i) [[1,0],[p^i,1]]
for 0 < i < c, and kappa_c = [[1,0],[p^c,1]] (which lies in I_c).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .characters import (
    DirichletChar,
    UnitaryCharacter,
    e,
    find_b,
    root_table,
)
from .padic import PrecisionError, TruncatedPAdic, fractional_part, valuation

# engine limits: p^L entries per shell, modulus for exact residues
MAX_SHELL_ENTRIES = 1 << 22
INT_LIMIT = 1 << 62
SHELL_GUARD_TOL = 1e-8


class UnsupportedCell(ValueError):
    pass


class ShellConvergenceError(ArithmeticError):
    """A shell outside the proven support did not vanish."""


class HInvariantMismatch(ArithmeticError):
    pass


def psi(x: Fraction, p: int) -> complex:
    """Unramified additive character e({x}_p) on Q (seen in Q_p)."""
    x = Fraction(x)
    if x == 0:
        return 1.0 + 0j
    return e(fractional_part(TruncatedPAdic.from_rational(x, p, max(1, -valuation(x, p)))))


@dataclass(frozen=True)
class PrincipalSeries:
    """chi1 [+] chi2 with chi1 unramified, chi2 of conductor p^c."""

    chi1: UnitaryCharacter
    chi2: UnitaryCharacter

    def __post_init__(self):
        if not self.chi1.is_unramified:
            raise ValueError("chi1 must be unramified (twist-minimal shape)")
        if self.chi1.p != self.chi2.p:
            raise ValueError("characters live at different primes")

    @classmethod
    def from_dirichlet(cls, unit_part: DirichletChar, chi2_at_p: complex = 1.0,
                       chi1_at_p: complex = 1.0) -> PrincipalSeries:
        p = unit_part.p
        c = unit_part.conductor_exponent
        up = unit_part.lift(c) if c >= 1 else DirichletChar.trivial(p, 1)
        return cls(UnitaryCharacter.unramified(p, chi1_at_p), UnitaryCharacter(up, chi2_at_p))

    @property
    def p(self) -> int:
        return self.chi2.p

    @property
    def c(self) -> int:
        return self.chi2.conductor_exponent

    @property
    def chi(self) -> UnitaryCharacter:
        """chi2 / chi1, the character of the untwisted series 1 [+] chi."""
        return UnitaryCharacter(self.chi2.unit_part, self.chi2.value_at_p / self.chi1.value_at_p)

    def twist(self, eta: UnitaryCharacter) -> PrincipalSeries:
        if not eta.is_unramified:
            raise ValueError("only unramified twists keep the shape")
        return PrincipalSeries(
            UnitaryCharacter.unramified(self.p, self.chi1.value_at_p * eta.value_at_p),
            UnitaryCharacter(self.chi2.unit_part, self.chi2.value_at_p * eta.value_at_p),
        )

    def twist_factor(self, det_valuation: int) -> complex:
        return self.chi1.value_at_p**det_valuation


@dataclass(frozen=True)
class WhittakerCell:
    y: TruncatedPAdic
    i: int

    def __post_init__(self):
        if self.y.is_zero:
            raise ValueError("y must be nonzero")
        if self.i < 0:
            raise ValueError("cell index must be >= 0")


@dataclass(frozen=True)
class WhittakerValue:
    value: complex
    nonzero: bool
    provenance: str
    extrapolated: bool = False

    @property
    def modulus(self) -> float:
        return abs(self.value)


def cell_matrix(p: int, c: int, i: int) -> tuple[int, int, int, int]:
    if not 0 <= i <= max(c, 0):
        raise UnsupportedCell(f"cell {i} outside 0..{c}")
    if i == 0:
        return (1, 0, 1, 1)
    if i == c:
        return (1, 0, p**c, 1)
    q = p**i
    return (q, 0, q, 1)


def cell_det_valuation(c: int, i: int) -> int:
    return i if 0 < i < c else 0


# ---------------------------------------------------------------------------
# engine


def _v(n: int, p: int) -> float:
    return math.inf if n == 0 else valuation(n, p)


def _vals_array(E: np.ndarray, P: int, p: int) -> np.ndarray:
    """Valuations of residues mod p^P, capped at P (meaning >= P)."""
    v = np.zeros(E.shape, dtype=np.int64)
    rest = E.copy()
    live = np.ones(E.shape, dtype=bool)
    for _ in range(P):
        live &= rest % p == 0
        if not live.any():
            break
        v += live
        rest = np.where(live, rest // p, rest)
    return v


@dataclass
class _Linear:
    """Z = a + s c on the shell s = p^j u, known for u mod p^L.

    After pulling out p^offset, Z = p^offset * E with E known mod p^prec
    (prec = inf for exact).
    """

    offset: int
    prec: float
    E: np.ndarray | None
    exact_v: float = math.inf
    exact_unit: int = 0


def _linear(a: int, cc: int, j: int, u: np.ndarray, L: int, p: int, cap: int) -> _Linear:
    if j < 0:
        a2, c2, off = a * p ** (-j), cc, j
    else:
        a2, c2, off = a, cc * p**j, 0
    if c2 == 0:
        return _Linear(off, math.inf, None, _v(a2, p), a2)
    t = int(min(_v(a2, p), _v(c2, p)))
    a2 //= p**t
    c2 //= p**t
    off += t
    prec = min(L + valuation(c2, p), cap)
    M = p**prec
    E = (a2 % M + u * (c2 % M)) % M
    return _Linear(off, prec, E)


class JacquetEngine:
    """W(g) = int f(w n(t) g) conj(psi(t)) dt for the newvector of 1 [+] chi."""

    def __init__(self, chi: UnitaryCharacter, min_precision: int | None = None):
        self.chi = chi
        self.p = chi.p
        self.c = chi.conductor_exponent
        if self.c < 1:
            raise ValueError("engine needs a ramified chi; use the spherical formula for c = 0")
        if chi.unit_part.c != self.c:
            chi = UnitaryCharacter(chi.unit_part.lift(self.c), chi.value_at_p)
            self.chi = chi
        self.L0 = max(self.c, min_precision or 1)
        self._shell_cache: dict = {}
        self.max_L_used = 0
        self._We = None

    # -- integrand ---------------------------------------------------------
    def _shell_values(self, g: tuple[int, int, int, int], j: int):
        """(L, F values over units u mod p^L) for F(s) = f(w n(s) g), s = p^j u."""
        key = (g, j)
        hit = self._shell_cache.get(key)
        if hit is not None:
            return hit
        p, c = self.p, self.c
        A, B, C, D = g
        det = A * D - B * C
        half_det = p ** (-valuation(det, p) / 2.0)
        L = self.L0
        while True:
            if p**L > MAX_SHELL_ENTRIES:
                raise PrecisionError(f"shell {j} of {g} needs more than p^{L - 1} classes")
            cap = int(math.floor(math.log(INT_LIMIT / p**L, p)))
            u = np.arange(p**L, dtype=np.int64)
            u = u[u % p != 0]
            X = _linear(A, C, j, u, L, p, cap)
            Y = _linear(B, D, j, u, L, p, cap)
            n_u = u.size
            # X data
            if X.E is None:
                vX = np.full(n_u, X.offset + X.exact_v)
                detX = np.ones(n_u, dtype=bool)
                PX = math.inf
            else:
                vEX = _vals_array(X.E, X.prec, p)
                detX = vEX < X.prec
                vX = (X.offset + vEX).astype(float)
                PX = X.offset + X.prec
            # Y data
            if Y.E is None:
                if Y.exact_v == math.inf:
                    raise ArithmeticError("degenerate matrix")
                vY = np.full(n_u, Y.offset + Y.exact_v)
                detY = np.ones(n_u, dtype=bool)
                unit_ok = np.ones(n_u, dtype=bool)
                exu = Y.exact_unit // p ** int(Y.exact_v)
                unitY = np.full(n_u, exu % p**c, dtype=np.int64)
                PY = math.inf
            else:
                vEY = _vals_array(Y.E, Y.prec, p)
                detY = vEY < Y.prec
                vY = (Y.offset + vEY).astype(float)
                PY = Y.offset + Y.prec
                unit_ok = vEY + c <= Y.prec
                pw = np.power(p, np.minimum(vEY, Y.prec - 1).astype(np.int64))
                unitY = (Y.E // pw) % p**c
            with np.errstate(invalid="ignore"):
                true_known = (detX & detY & (vX - vY >= c)) | (~detX & detY & (PX >= vY + c))
                false_known = (detX & detY & (vX - vY < c)) | (detX & ~detY & (PY > vX - c))
            ok = false_known | (true_known & unit_ok)
            if ok.all():
                break
            L += 1
        self.max_L_used = max(self.max_L_used, L)
        F = np.zeros(n_u, dtype=complex)
        sel = true_known & ~false_known
        if sel.any():
            vy = vY[sel].astype(np.int64)
            F[sel] = (
                self.chi.unit_part.values(unitY[sel])
                * self.chi.value_at_p ** vy.astype(float)
                * np.power(float(p), vy.astype(float))
                * half_det
            )
        out = (L, u, F)
        self._shell_cache[key] = out
        return out

    def _range(self, g, m: int):
        """(j_lo, J, F_ball): shells j_lo..J-1 carry the integral, v(s) >= J is a ball."""
        p, c = self.p, self.c
        A, B, C, D = g
        vA, vB, vC, vD = (_v(t, p) for t in g)
        det = A * D - B * C
        half_det = p ** (-valuation(det, p) / 2.0)
        cands = []
        if B != 0:
            if D != 0:
                cands.append(vB + c - vD)
            if A != 0 and C != 0:
                cands.append(vA - vC + 1)
            if A == 0:
                cands.append(vB + c - vC)
            ind = A == 0 or vA - vB >= c
            F_ball = self.chi(Fraction(B)) * p**vB * half_det if ind else 0j
        else:
            if C != 0:
                cands.append(vA - vC + 1)
            cands.append(vA - vD - c + 1)
            F_ball = 0j
        J = int(max(cands)) if cands else 0
        lows = [-m - c - 1, J - 1]
        for t in (vB - vD - c - 1, vA - vC - 1, vA - vD - c, vB - vC + c - 1, vA - vC - c):
            if t not in (math.inf, -math.inf) and not math.isnan(t):
                lows.append(int(t))
        return int(min(lows)), J, F_ball

    def _shell_transform(self, g, j: int, m: int, w: np.ndarray) -> np.ndarray:
        """int over v(s) = j of F(s) conj(psi(p^m w s)) ds, for each unit w."""
        p = self.p
        L, u, F = self._shell_values(g, j)
        n = -(j + m)
        scale = float(p) ** (-j - L)
        if n <= 0:
            return np.full(w.shape, scale * F.sum(), dtype=complex)
        if n > L:
            return np.zeros(w.shape, dtype=complex)
        pn = p**n
        r = u % pn
        H = np.bincount(r, weights=F.real, minlength=pn) + 1j * np.bincount(r, weights=F.imag, minlength=pn)
        spec = np.fft.fft(H)
        return scale * spec[w % pn]

    def kirillov(self, g, m: int, w: Sequence[int]) -> np.ndarray:
        """Unnormalized W(a(p^m w) g) for integer matrix g and units w."""
        p = self.p
        w = np.asarray(w, dtype=np.int64)
        j_lo, J, F_ball = self._range(g, m)
        total = np.zeros(w.shape, dtype=complex)
        for j in range(j_lo, J):
            total += self._shell_transform(g, j, m, w)
        for j in (j_lo - 1, j_lo - 2):
            guard = self._shell_transform(g, j, m, w)
            if np.max(np.abs(guard), initial=0.0) > SHELL_GUARD_TOL:
                raise ShellConvergenceError(f"shell {j} outside support carries {np.max(np.abs(guard)):.3e}")
        if F_ball != 0 and J + m >= 0:
            total += F_ball * float(p) ** (-J)
        pref = self.chi.value_at_p**m * self.chi.unit_part.values(w) * float(p) ** (-m / 2.0)
        return pref * total

    @property
    def W_identity(self) -> complex:
        if self._We is None:
            self._We = complex(self.kirillov((1, 0, 0, 1), 0, [1])[0])
        return self._We

    def at_matrix(self, g) -> complex:
        """Unnormalized W(g) for a rational matrix ((a, b), (c, d))."""
        (a, b), (cc, d) = g
        ents = [Fraction(t) for t in (a, b, cc, d)]
        den = math.lcm(*(t.denominator for t in ents))
        gi = tuple(int(t * den) for t in ents)
        # scalar matrices act by the central character chi
        return complex(self.kirillov(gi, 0, [1])[0]) / self.chi(Fraction(den))


_ENGINES: dict = {}


def engine_for(chi: UnitaryCharacter) -> JacquetEngine:
    key = (chi.unit_part.p, chi.unit_part.c, chi.unit_part.dlog_multiplier, chi.value_at_p)
    eng = _ENGINES.get(key)
    if eng is None:
        if len(_ENGINES) > 256:
            _ENGINES.clear()
        eng = _ENGINES[key] = JacquetEngine(chi)
    return eng


# ---------------------------------------------------------------------------
# normalized values


def _spherical(pi: PrincipalSeries, m: int) -> complex:
    if m < 0:
        return 0j
    a, b = pi.chi1.value_at_p, pi.chi2.value_at_p
    s = sum(a**k * b ** (m - k) for k in range(m + 1))
    return s * pi.p ** (-m / 2.0)


def spherical_h(alpha: complex, beta: complex, p: int, max_m: int = 400) -> float:
    """max over m >= 0 of p^(-m/2) |sum_k alpha^k beta^(m-k)| (Satake roots alpha, beta).

    Equals 1 for tempered parameters once p >= 5, but can exceed 1 at p = 2, 3.
    """
    r = max(abs(alpha), abs(beta), 1.0)
    s_prev, s = 1.0 + 0j, complex(alpha + beta)
    best = 1.0
    for m in range(1, max_m + 1):
        best = max(best, abs(s) * p ** (-m / 2.0))
        if (m + 2) * r ** (m + 1) * p ** (-(m + 1) / 2.0) < best:
            break
        s_prev, s = s, (alpha + beta) * s - alpha * beta * s_prev
    return float(best)


def kirillov_normalized(pi: PrincipalSeries, i: int, m: int, w: Sequence[int]) -> np.ndarray:
    """W_o(a(p^m w) kappa_i) for all units w, via the engine."""
    w = np.asarray(w, dtype=np.int64)
    if pi.c == 0:
        if i != 0:
            raise UnsupportedCell("spherical vector has a single cell")
        return np.full(w.shape, _spherical(pi, m), dtype=complex)
    eng = engine_for(pi.chi)
    g = cell_matrix(pi.p, pi.c, i)
    vals = eng.kirillov(g, m, w) / eng.W_identity
    return vals * pi.twist_factor(m + cell_det_valuation(pi.c, i))


def _rep(y: TruncatedPAdic) -> tuple[int, int]:
    return y.valuation, y.unit


def jacquet_oracle(pi: PrincipalSeries, cell: WhittakerCell) -> WhittakerValue:
    if pi.c < 1:
        raise ValueError("oracle needs a ramified chi2")
    if cell.i > pi.c:
        raise UnsupportedCell(f"cell {cell.i} outside 0..{pi.c}")
    if cell.y.precision < pi.c:
        raise PrecisionError("y must be known modulo p^c")
    m, w = _rep(cell.y)
    val = complex(kirillov_normalized(pi, cell.i, m, [w])[0])
    return WhittakerValue(val, abs(val) > 1e-12, "oracle", extrapolated=pi.c != 2)


def whittaker_at(pi: PrincipalSeries, g) -> complex:
    """Normalized newvector at an arbitrary rational matrix."""
    eng = engine_for(pi.chi)
    (a, b), (cc, d) = g
    det = Fraction(a) * Fraction(d) - Fraction(b) * Fraction(cc)
    return eng.at_matrix(g) / eng.W_identity * pi.twist_factor(valuation(det, pi.p))


def w_diag(pi: PrincipalSeries, y: TruncatedPAdic) -> WhittakerValue:
    m = y.valuation
    if pi.c == 0:
        val = _spherical(pi, m)
    else:
        val = pi.twist_factor(m) * pi.p ** (-m / 2.0) if m >= 0 else 0j
    return WhittakerValue(complex(val), m >= 0, "closed-form")


def _require_c2(pi: PrincipalSeries):
    if pi.c != 2:
        raise UnsupportedCell("closed form is only available at conductor p^2; use the oracle")


def w_cell0(pi: PrincipalSeries, y: TruncatedPAdic) -> WhittakerValue:
    """Modulus p^-1 |y|^(1/2) on p^-2 Z_p; phase chi(-y) psi(y) / (p^2 W(e)),
    with W(e) the epsilon factor of the Jacquet integral."""
    from .characters import epsilon_W_at_identity

    _require_c2(pi)
    p, c = pi.p, pi.c
    m = y.valuation
    if m < -c:
        return WhittakerValue(0j, False, "closed-form")
    chi = pi.chi
    W_e = epsilon_W_at_identity(chi).value
    yq = y.to_fraction()
    val = chi.at(m, -y.unit) * psi(yq, p) * p ** (-m / 2.0) * p ** (-c) / W_e
    return WhittakerValue(complex(val * pi.twist_factor(m)), True, "closed-form")


def w_cell1(pi: PrincipalSeries, y: TruncatedPAdic) -> WhittakerValue:
    """p^(1/2) exactly when v(y) = -2 and p^2 y = b mod p; zero otherwise."""
    _require_c2(pi)
    p = pi.p
    b = find_b(pi.chi.unit_part).b
    if y.valuation != -2 or y.unit % p != b:
        return WhittakerValue(0j, False, "closed-form")
    val = math.sqrt(p) * pi.twist_factor(y.valuation + 1)
    return WhittakerValue(complex(val), True, "closed-form")


def closed_form(pi: PrincipalSeries, cell: WhittakerCell) -> WhittakerValue:
    if cell.i == 0:
        return w_cell0(pi, cell.y)
    if cell.i == 1:
        return w_cell1(pi, cell.y)
    if cell.i == 2:
        _require_c2(pi)
        return w_diag(pi, cell.y)
    raise UnsupportedCell(f"no closed form for cell {cell.i}")


# ---------------------------------------------------------------------------
# h invariant


@dataclass(frozen=True)
class HSearch:
    value: float
    cell: int
    v_y: int
    unit: int
    cells_scanned: int = 0


def h_closed_form(pi: PrincipalSeries) -> float:
    return pi.p ** (0.5 * (pi.c // 2))


def h_search(pi: PrincipalSeries, v_window: tuple[int, int] | None = None, max_m_spherical: int = 60) -> HSearch:
    """Max of |W_o| over cells 0..c, v(y) in the window, all units mod p^c."""
    p, c = pi.p, pi.c
    if c == 0:
        vals = [abs(_spherical(pi, m)) for m in range(max_m_spherical + 1)]
        k = int(np.argmax(vals))
        return HSearch(float(vals[k]), 0, k, 1, len(vals))
    lo, hi = v_window or (-(c + 2), 2)
    q = p**c
    w = np.arange(q, dtype=np.int64)
    w = w[w % p != 0]
    best = HSearch(-1.0, 0, 0, 1)
    count = 0
    for i in range(c + 1):
        for m in range(lo, hi + 1):
            mods = np.abs(kirillov_normalized(pi, i, m, w))
            count += w.size
            k = int(np.argmax(mods))
            if mods[k] > best.value + 1e-13:
                best = HSearch(float(mods[k]), i, m, int(w[k]))
    return HSearch(best.value, best.cell, best.v_y, best.unit, count)


def h_invariant(pi: PrincipalSeries, method: str = "closed_form", tol: float = 1e-8) -> float:
    if method == "closed_form":
        return h_closed_form(pi)
    if method != "exhaustive":
        raise ValueError(f"unknown method {method!r}")
    found = h_search(pi).value
    expected = h_closed_form(pi)
    if abs(found - expected) > tol:
        raise HInvariantMismatch(f"exhaustive {found:.12f} vs closed form {expected:.12f}")
    return found


def unramified_twist_invariance(pi: PrincipalSeries, eta: UnitaryCharacter, tol: float = 1e-8) -> bool:
    return abs(h_search(pi.twist(eta)).value - h_search(pi).value) <= tol


# ---------------------------------------------------------------------------
# tables


def y_classes(p: int, c: int, v: int) -> list[TruncatedPAdic]:
    q = p**c
    return [TruncatedPAdic(p, v, u, c) for u in range(1, q) if u % p]


def local_table(pi: PrincipalSeries, chi_id: str, v_range=(-4, 1), cells=None, oracle=True, closed=True,
                atol: float = 1e-10) -> list[dict]:
    """Rows (p, c, chi_id, cell, v_y, unit_class, abs_w, phase, provenance)."""
    p, c = pi.p, pi.c
    cells = list(range(c + 1)) if cells is None else list(cells)
    q = p**c
    w = np.arange(q, dtype=np.int64)
    w = w[w % p != 0]
    rows = []
    for i in cells:
        for m in range(v_range[0], v_range[1] + 1):
            orc = kirillov_normalized(pi, i, m, w) if oracle else None
            for k, unit in enumerate(w):
                cf = None
                if closed and c == 2:
                    cf = closed_form(pi, WhittakerCell(TruncatedPAdic(p, m, int(unit), c), i)).value
                if orc is not None and cf is not None:
                    val, prov = orc[k], "oracle+closed-form"
                    if abs(orc[k] - cf) > atol:
                        prov = "MISMATCH"
                elif orc is not None:
                    val, prov = orc[k], "oracle" + ("" if c == 2 else ",extrapolated")
                else:
                    val, prov = cf, "closed-form"
                rows.append({
                    "p": p, "c": c, "chi_id": chi_id, "cell": i, "v_y": m, "unit_class": int(unit),
                    "abs_w": float(abs(val)), "phase": float(np.angle(val)) if abs(val) > 1e-12 else 0.0,
                    "provenance": prov,
                })
    return rows
