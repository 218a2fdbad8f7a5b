import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from wlab import ingest
from wlab.characters import DirichletChar, enumerate_chars, find_b
from wlab.modforms import (
    WEIGHT2_MAX,
    CertificateUnavailable,
    InsufficientCoefficients,
    Point,
    ScanGrid,
    abs_invariant,
    atkin_lehner_point,
    certificate_value_for_level,
    evaluate,
    evaluate_many,
    hecke_coefficient_bound,
    hecke_integral,
    large_neighborhood,
    local_h,
    lower_bound_certificate,
    max_orbit_height,
    oldform_pullback,
    reduce_points,
    special_point,
    supnorm_scan,
    tail_bound,
    terms_needed,
    twisted_expansion_eval,
    wilton_scan,
    wilton_sum,
)
from wlab.padic import PrimePower

TWISTED_AT_I = math.sqrt(5) * math.exp(-2 * math.pi)


def gamma0_element(N, k, d, t):
    """An element of Gamma_0(N) with lower row (N k, d)."""
    c = N * k
    # a d - b c = 1
    g, x, y = _egcd(d, c)
    a, b = x, -y
    return a + t * c, b + t * d, c, d


def _egcd(a, b):
    if b == 0:
        return a, 1, 0
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def test_evaluate_large_y(form25):
    r = evaluate(form25, Point(Fraction(0), Fraction(10)))
    assert r.terms_used >= 1
    assert r.value == pytest.approx(10 * math.exp(-20 * math.pi), rel=1e-12)


def test_evaluate_rejects(form25):
    with pytest.raises(ValueError):
        evaluate(form25, 0.3 - 0.1j)
    with pytest.raises(InsufficientCoefficients):
        evaluate(form25, 0.3 + 1e-5j)


def test_tail_bound_monotone():
    for y in (0.008, 0.05, 0.3):
        prev = 0
        for tol in (1e-6, 1e-8, 1e-10, 1e-12):
            m = terms_needed(y, tol)
            assert m >= prev
            assert tail_bound(y, m) <= tol
            prev = m


def test_tail_bound_dominates_series():
    y = 0.02
    m = terms_needed(y, 1e-8)
    n = np.arange(m + 1, m + 20000)
    assert y * np.sum(n**1.5 * np.exp(-2 * math.pi * n * y)) <= tail_bound(y, m) * (1 + 1e-12)


def test_halving_tol_is_consistent(form25):
    z = 0.37 + 0.01j
    a = evaluate(form25, z, tol=1e-8)
    b = evaluate(form25, z, tol=5e-9)
    assert abs(a.value - b.value) <= 1e-8


@given(st.integers(-3, 3), st.integers(-3, 3), st.floats(0, 1), st.floats(0.02, 0.4))
def test_gamma0_invariance(form25, shift, t, x, y):
    N, k = 25, 1
    # d near -N x keeps the image high enough to evaluate
    d = -round(N * x) + shift
    assume(math.gcd(d, N * k) == 1)
    a, b, c, dd = gamma0_element(N, k, d, t)
    assert a * dd - b * c == 1
    z = complex(x, y)
    gz = (a * z + b) / (c * z + dd)
    assume(gz.imag > 0.004)
    v1, b1 = evaluate_many(form25, np.array([z]))
    v2, b2 = evaluate_many(form25, np.array([gz]))
    assert abs(abs(v1[0]) - abs(v2[0])) <= b1[0] + b2[0] + 1e-9


def test_fricke_reflection_preserves_modulus(form25):
    rng = np.random.default_rng(1)
    z = rng.random(20) + 1j * (0.05 + 0.3 * rng.random(20))
    w = -np.conj(-1.0 / (25 * z))
    ok = w.imag > 0.004
    v1, _ = evaluate_many(form25, z[ok])
    v2, _ = evaluate_many(form25, w[ok])
    assert np.allclose(np.abs(v1), np.abs(v2), atol=1e-9)


def test_reduce_points_raises_height():
    z = np.array([0.3 + 0.001j, 0.03 + 0.0002j, 0.8 + 0.0001j])
    zr = reduce_points(z, 25)
    assert np.all(zr.imag >= z.imag)
    assert np.all(zr[:2].imag > 0.003)
    # 4/5 is a cusp inequivalent to infinity and 0, so nothing lifts it
    assert zr[2].imag == pytest.approx(1e-4)


def test_atkin_lehner_involution():
    z = Point(Fraction(2, 7), Fraction(1, 9))
    assert atkin_lehner_point(atkin_lehner_point(z, 25), 25) == z
    w = atkin_lehner_point(Point(Fraction(0), Fraction(1, 25)), 25)
    assert w == Point(Fraction(0), Fraction(1))
    with pytest.raises(ZeroDivisionError):
        atkin_lehner_point(0j, 25)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_orbit_inequalities_of_companion_point(p):
    for chi in enumerate_chars(PrimePower(p, 2), primitive_only=True, even_only=True):
        sp = special_point(chi)
        assert sp.z.y == Fraction(1, p**3)
        assert sp.z_prime.y < Fraction(1, p**3)
        h, _ = max_orbit_height(sp.z_prime, p * p)
        gap = 1 / p**3 - float(h)
        assert p**-7 / 2 <= gap <= p**-5


def test_special_point_convention():
    for chi in enumerate_chars(PrimePower(5, 2), primitive_only=True, even_only=True):
        sp = special_point(chi)
        assert sp.a * sp.b % 5 == 1
        assert sp.b == find_b(chi.conj()).b
        if sp.b == 2:
            assert sp.a == 3 and sp.z == Point(Fraction(3, 5), Fraction(1, 125))
    with pytest.raises(ValueError):
        special_point(DirichletChar.from_conrey(5, 2, 2))  # odd


def test_direct_vs_twisted(form25):
    chi = form25.nebentypus[0]
    sp = special_point(chi)
    direct = evaluate(form25, sp.z)
    tw = twisted_expansion_eval(form25, chi, 1j)
    assert abs(abs(direct.value) - abs(tw.value)) <= direct.truncation_bound + tw.truncation_bound + 1e-12
    assert abs(tw.value) == pytest.approx(TWISTED_AT_I, rel=1e-6)
    assert abs(direct.value) == pytest.approx(0.004182, rel=0.05)
    # |f| along the chart equals the twisted expansion
    for tau in (0.3 + 0.5j, 0.71 + 0.2j):
        lhs = abs_invariant(form25, np.array([sp.chart(tau)]))[0][0]
        assert lhs == pytest.approx(abs(twisted_expansion_eval(form25, chi, tau).value), abs=1e-9)


def test_large_neighborhood_monotone(form25):
    chi = form25.nebentypus[0]
    areas = [large_neighborhood(form25, chi, d).area for d in (0.1, 0.2, 0.3)]
    assert areas[0] >= areas[1] >= areas[2] >= 0
    with pytest.raises(ValueError):
        large_neighborhood(form25, chi, 0.5)
    near = large_neighborhood(form25, chi, 0.499)
    assert near.target == pytest.approx(1.0, abs=0.01)


def test_supnorm_scan_and_certificate(form25):
    scan = supnorm_scan(form25, ScanGrid(nx=32, ny=24, chart_samples=64))
    assert scan.max_abs >= 0.95 * TWISTED_AT_I
    assert scan.exponent == pytest.approx(math.log(scan.max_abs) / math.log(25))
    # with the (2 pi e)^-1 constant removed the growth exponent is visible
    assert scan.normalized_exponent >= 0.25 - 0.15
    assert scan.special_values["z_chi"] == pytest.approx(TWISTED_AT_I, rel=1e-6)
    cert = lower_bound_certificate(form25, scan)
    assert cert.value == pytest.approx(WEIGHT2_MAX * math.sqrt(5))
    assert cert.passed


def test_certificate_values():
    assert certificate_value_for_level(25) == pytest.approx(25**0.25 / (2 * math.pi * math.e))
    assert certificate_value_for_level(49 * 9) == pytest.approx((49 * 9) ** 0.25 / (2 * math.pi * math.e))
    # cube of a square-free level: N^(1/6)
    assert certificate_value_for_level(27 * 125) == pytest.approx((27 * 125) ** (1 / 6) / (2 * math.pi * math.e))


def test_certificate_unavailable_for_trivial_nebentypus(data_dir):
    f = ingest.load(data_dir / "form_49_1_0_0.txt")
    with pytest.raises(CertificateUnavailable):
        lower_bound_certificate(f)
    with pytest.raises(CertificateUnavailable):
        local_h(f, 7)


def test_hecke_coefficient_bound(form25, data_dir):
    ratio, n = hecke_coefficient_bound(form25)
    assert ratio <= 1 + 1e-6
    assert abs(form25.a(1)) == pytest.approx(1.0)
    assert local_h(form25, 5) == pytest.approx(math.sqrt(5))
    f11 = ingest.load(data_dir / "form_11_1_0_0.txt")
    assert local_h(f11, 11) == 1.0
    assert hecke_coefficient_bound(f11)[0] <= 1 + 1e-6


def test_wilton(form25):
    assert wilton_sum(form25, 1, 0) == pytest.approx(1.0)
    ws = wilton_scan(form25, 5, 125, n_random=16)
    assert ws.best_ratio >= 0.3
    assert ws.upper_exponent <= 0.6


def test_hecke_integral(form25):
    hi = hecke_integral(form25)
    assert abs(hi.value - hi.series_value) < 1e-9
    assert abs(hi.value - hi.l_half / (2 * math.pi)) <= 2


def test_oldform_pullback(data_dir):
    f = ingest.load(data_dir / "form_11_1_0_0.txt")
    g = oldform_pullback(f, 3)
    rng = np.random.default_rng(4)
    z = rng.random(16) + 1j * (0.05 + rng.random(16))
    vg, _ = evaluate_many(g, z)
    vf, _ = evaluate_many(f, 3 * z)
    assert np.allclose(vg, vf, atol=1e-9)
