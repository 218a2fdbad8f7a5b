import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wlab.characters import DirichletChar, UnitaryCharacter, enumerate_chars, find_b
from wlab.padic import PrimePower, TruncatedPAdic
from wlab.whittaker_local import (
    HInvariantMismatch,
    PrincipalSeries,
    UnsupportedCell,
    WhittakerCell,
    closed_form,
    h_closed_form,
    h_invariant,
    h_search,
    jacquet_oracle,
    kirillov_normalized,
    local_table,
    psi,
    spherical_h,
    unramified_twist_invariance,
    w_cell0,
    w_cell1,
    w_diag,
    whittaker_at,
)


def series(p, c=2, k=0, chi1=1.0, chi2=1.0):
    chi = enumerate_chars(PrimePower(p, c), primitive_only=True)[k]
    return PrincipalSeries.from_dirichlet(chi, chi2, chi1)


def test_psi_examples():
    assert psi(Fraction(3), 5) == 1
    assert abs(psi(Fraction(1, 5), 5) - cmath.exp(2j * math.pi / 5)) < 1e-14
    # {1/3}_5 = 0: 1/3 is a 5-adic integer
    assert psi(Fraction(1, 3), 5) == 1


def test_w_diag_values():
    pi = series(5)
    for m in range(-3, 5):
        v = w_diag(pi, TruncatedPAdic(5, m, 2, 2))
        assert v.nonzero == (m >= 0)
        if m >= 0:
            assert abs(v.value - 5 ** (-m / 2)) < 1e-14


@pytest.mark.parametrize("p", [3, 5, 7])
def test_cell1_support(p):
    """Cell 1 is supported on a single residue class mod p at v(y) = -2."""
    for k in range(3):
        pi = series(p, k=k)
        b = find_b(pi.chi.unit_part).b
        units = [u for u in range(1, p * p) if u % p]
        for m in range(-4, 2):
            vals = kirillov_normalized(pi, 1, m, units)
            support = [u for u, x in zip(units, vals) if abs(x) > 1e-10]
            if m == -2:
                assert len(support) == p and all(u % p == b for u in support)
                assert np.allclose(np.abs(vals[np.abs(vals) > 1e-10]), math.sqrt(p))
            else:
                assert not support


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("cell", [0, 1, 2])
def test_oracle_matches_closed_form(p, cell):
    for k in (0, 1):
        for chi1, chi2 in [(1.0, 1.0), (cmath.exp(0.7j), cmath.exp(-1.1j))]:
            pi = series(p, k=k, chi1=chi1, chi2=chi2)
            for m in range(-4, 2):
                for u in range(1, p * p, 3):
                    if u % p == 0:
                        continue
                    c = WhittakerCell(TruncatedPAdic(p, m, u, 2), cell)
                    a, b = jacquet_oracle(pi, c), closed_form(pi, c)
                    assert abs(a.value - b.value) < 1e-10
                    assert a.nonzero == b.nonzero


def test_cell0_modulus():
    pi = series(5)
    for m in range(-2, 3):
        v = w_cell0(pi, TruncatedPAdic(5, m, 7, 2))
        assert abs(v.modulus - 5 ** (-1) * 5 ** (-m / 2)) < 1e-12
    assert not w_cell0(pi, TruncatedPAdic(5, -3, 7, 2)).nonzero


def test_closed_form_rejects_other_conductors():
    pi = series(5, c=3)
    with pytest.raises(UnsupportedCell):
        w_cell1(pi, TruncatedPAdic(5, -2, 1, 3))
    v = jacquet_oracle(pi, WhittakerCell(TruncatedPAdic(5, -2, 1, 3), 1))
    assert v.extrapolated


@given(st.sampled_from([3, 5, 7]), st.integers(-3, 2), st.integers(1, 200), st.integers(-40, 40), st.integers(0, 3))
def test_psi_equivariance(p, m, u, num, den_exp):
    if u % p == 0:
        u += 1
    pi = series(p, chi1=cmath.exp(0.4j), chi2=cmath.exp(0.9j))
    y = Fraction(u) * Fraction(p) ** m
    x = Fraction(num, p**den_exp)
    for g in [((y, 0), (1, 1)), ((y, 0), (p, 1)), ((y, 0), (0, 1))]:
        (a, b), (c, d) = g
        ng = ((a + x * c, b + x * d), (c, d))
        assert abs(whittaker_at(pi, ng) - psi(x, p) * whittaker_at(pi, g)) < 1e-10


def test_right_k1_invariance():
    p = 5
    pi = series(p, chi1=1j, chi2=1j)
    k = ((2, 5), (25 * 4, 1 + 25 * 3))
    for y in [Fraction(3), Fraction(3, 5), Fraction(3, 25)]:
        g = np.array([[y, 0], [1, 1]], dtype=object) @ np.array(k, dtype=object)
        lhs = whittaker_at(pi, tuple(map(tuple, g)))
        rhs = whittaker_at(pi, ((y, 0), (1, 1)))
        assert abs(lhs - rhs) < 1e-12


@pytest.mark.parametrize("p,c", [(3, 2), (3, 3), (3, 4), (5, 2), (5, 3), (5, 4)])
def test_h_closed_form_matches_search(p, c):
    for k in (0, 1):
        pi = series(p, c=c, k=k)
        assert abs(h_search(pi).value - p ** ((c // 2) / 2)) < 1e-8
        assert h_invariant(pi, "exhaustive") == pytest.approx(h_closed_form(pi), abs=1e-8)


def test_h_invariant_unknown_method():
    with pytest.raises(ValueError):
        h_invariant(series(5), "guess")


@given(st.floats(0, 2 * math.pi), st.sampled_from([(3, 2), (5, 3), (7, 2)]))
def test_unramified_twist_invariance(theta, pc):
    pi = series(*pc)
    assert unramified_twist_invariance(pi, UnitaryCharacter.unramified(pc[0], cmath.exp(1j * theta)))


def test_spherical_h():
    # tempered at p >= 5 gives 1; the trivial Satake pair at p = 3 exceeds it
    assert spherical_h(1, 1, 5) == pytest.approx(1.0)
    assert spherical_h(1, 1, 3) > 1.0
    assert spherical_h(1j, -1j, 7) == pytest.approx(1.0)


def test_local_table_rows():
    pi = series(3)
    rows = local_table(pi, "9.2", v_range=(-3, 0))
    assert len(rows) == 3 * 4 * 6
    assert all(r["provenance"] == "oracle+closed-form" for r in rows)
    assert {"p", "c", "chi_id", "cell", "v_y", "unit_class", "abs_w", "phase", "provenance"} <= set(rows[0])
