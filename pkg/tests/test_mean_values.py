import math

import numpy as np
import pytest

from wlab import ingest
from wlab.mean_values import (
    QuadratureRule,
    build_basis,
    constant_volume,
    coset_reps,
    gamma0_index,
    integrate_abs_power,
    lr_norm,
    m_chi,
    m_chi_at_special_point,
    petersson_norm,
    reduced_height_floor,
    volume,
)
from wlab.modforms import NewformData, special_point


@pytest.mark.parametrize("N,count", [(1, 1), (9, 12), (25, 30), (11, 12), (49, 56), (30, 72)])
def test_coset_counts(N, count):
    cs = coset_reps(N)
    assert cs.index == count == gamma0_index(N)
    assert cs.inequivalent()
    assert all(a * d - b * c == 1 for a, b, c, d in cs.matrices)


def test_cusp_widths_divide_level():
    for N in (9, 25, 49):
        cs = coset_reps(N)
        # each coset contributes its own cusp neighbourhood; widths are positive divisors of N
        assert all(N % w == 0 for w in cs.widths)


def test_coset_reps_rejects_large_level():
    with pytest.raises(ValueError):
        coset_reps(500)


def test_constant_calibration():
    for N in (1, 25, 49):
        assert constant_volume(N) / volume(N) == pytest.approx(1.0, abs=1e-6)
        assert lr_norm(None, 6, level=N) == pytest.approx(1.0, abs=1e-6)


def test_petersson_scaling_and_refinement(form25):
    base = petersson_norm(form25)
    assert base.rel_change < 0.01
    scaled = NewformData(form25.level, form25.nebentypus, 3.0 * form25.coefficients, label="3f")
    # validation of a1 is not needed for the quadrature
    assert integrate_abs_power(scaled, 2.0) == pytest.approx(9.0 * base.coarse_value, rel=1e-12)


def test_petersson_matches_database_reference(data_dir):
    # the stored reference is the norm divided by the index [SL2(Z) : Gamma_0(N)]
    for name in ("form_25_4_0_0.txt", "form_25_16_0_0.txt", "form_49_9_0_0.txt", "form_11_1_0_0.txt"):
        f = ingest.load(data_dir / name)
        norm = petersson_norm(f).value
        assert norm / gamma0_index(f.level) == pytest.approx(f.petersson_reference, rel=0.05)


def test_lr_norm_consistency(form25):
    n2 = lr_norm(form25, 2)
    assert n2 == pytest.approx(math.sqrt(petersson_norm(form25).value / volume(25)), rel=1e-9)
    n4, n6 = lr_norm(form25, 4), lr_norm(form25, 6)
    # log-convexity: ||f||_4 <= ||f||_2^(1/4) ||f||_6^(3/4)
    assert n4 <= n2**0.25 * n6**0.75 * (1 + 1e-9)
    assert n2 <= n4 <= n6
    with pytest.raises(ValueError):
        lr_norm(form25, 1)


def test_l6_trend(form25, form49):
    r25 = lr_norm(form25, 6) / lr_norm(form25, 2)
    r49 = lr_norm(form49, 6) / lr_norm(form49, 2)
    assert r49 > r25


def test_m_chi_positivity(basis25):
    assert basis25.complete
    rng = np.random.default_rng(2)
    z = rng.random(10) + 1j * (0.05 + rng.random(10))
    mv = m_chi(z, basis25)
    assert np.all(mv.value >= mv.contributions[0])
    assert not mv.partial


def test_m_chi_special_point(basis25):
    mech = m_chi_at_special_point(basis25)
    assert mech.m_at_z >= mech.single_form_bound
    assert mech.single_form_bound == pytest.approx(mech.f_at_z**2 / mech.norm, rel=1e-9)
    assert mech.f_at_z == pytest.approx(math.sqrt(5) * math.exp(-2 * math.pi), rel=1e-6)


def test_partial_basis_is_tagged(form25):
    b = build_basis([form25], 2)
    assert not b.complete
    assert m_chi(0.3 + 0.2j, b).partial


def test_basis_rejects_repeats(form25):
    with pytest.raises(ValueError):
        build_basis([form25, form25])


def test_reduced_height_floor():
    assert reduced_height_floor(25) > 0.003
    assert reduced_height_floor(49) > 0.001
