import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermofold import CreaseActuator, bimorph_curvature, stress_free_angle
from thermofold.actuation import bending_rigidity, membrane_stiffness
from conftest import bimorph_equilibrium_oracle


def act(t1=1e-6, t2=0.2e-6, E1=2e9, E2=79e9, a1=52e-6, a2=14.2e-6):
    return CreaseActuator(t1=t1, t2=t2, E1=E1, E2=E2, alpha1=a1, alpha2=a2)


def test_equal_expansion_gives_zero():
    a = act(a1=30e-6, a2=30e-6)
    assert bimorph_curvature(a, 150.0) == 0.0


def test_zero_stimulus_gives_zero():
    assert bimorph_curvature(act(), 0.0) == 0.0


def test_equal_layers_reduction():
    # t1 = t2, E1 = E2: kappa = (3/2) dalpha dT / (t1 + t2)
    a = act(t1=1e-6, t2=1e-6, E1=2e9, E2=2e9, a1=50e-6, a2=20e-6)
    dT = 80.0
    expected = 1.5 * (50e-6 - 20e-6) * dT / 2e-6
    assert bimorph_curvature(a, dT) == pytest.approx(expected, rel=1e-12)
    assert bimorph_curvature(a, dT) == pytest.approx(
        bimorph_equilibrium_oracle(1e-6, 1e-6, 2e9, 2e9, 50e-6, 20e-6, dT),
        rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(dT=st.floats(-300, 300), scale=st.floats(0.1, 10))
def test_curvature_linear_in_dT(dT, scale):
    a = act()
    assert bimorph_curvature(a, scale * dT) == pytest.approx(
        scale * bimorph_curvature(a, dT), rel=1e-12, abs=1e-12)


def test_layer_swap_negates_curvature():
    a = act()
    swapped = CreaseActuator(t1=a.t2, t2=a.t1, E1=a.E2, E2=a.E1,
                             alpha1=a.alpha2, alpha2=a.alpha1)
    assert bimorph_curvature(swapped, 120.0) == pytest.approx(
        -bimorph_curvature(a, 120.0), rel=1e-12)


def test_curvature_matches_cross_section_oracle_grid():
    t1, E1 = 1e-6, 2e9
    worst = 0.0
    for m in np.geomspace(0.1, 10, 10):
        for n in np.geomspace(0.1, 10, 10):
            a = CreaseActuator(t1=t1, t2=m * t1, E1=E1, E2=n * E1,
                               alpha1=52e-6, alpha2=14.2e-6)
            kappa = bimorph_curvature(a, 100.0)
            ref = bimorph_equilibrium_oracle(t1, m * t1, E1, n * E1,
                                             52e-6, 14.2e-6, 100.0,
                                             n_quad=200000)
            worst = max(worst, abs(kappa - ref) / abs(ref))
    assert worst < 1e-6


def test_stress_free_angle_product_and_residual():
    a = act()
    # kappa * span with zero residual
    dT = 50.0
    kappa = bimorph_curvature(a, dT)
    assert stress_free_angle(a, 200e-6, dT) == pytest.approx(kappa * 200e-6)
    # residual only at zero stimulus
    res = math.radians(-10.0)
    assert stress_free_angle(a, 200e-6, 0.0, res) == pytest.approx(res)
    # doubling the span doubles the thermal part exactly
    th1 = stress_free_angle(a, 200e-6, dT, res)
    th2 = stress_free_angle(a, 400e-6, dT, res)
    assert th2 - res == pytest.approx(2.0 * (th1 - res), rel=1e-12)


def test_derived_ratios_never_stale():
    a = act(t1=2e-6, t2=1e-6, E1=1e9, E2=4e9)
    assert a.m == 0.5
    assert a.n == 4.0


def test_positivity_enforced():
    with pytest.raises(ValueError):
        CreaseActuator(t1=0.0, t2=1e-6, E1=1e9, E2=1e9, alpha1=1e-6, alpha2=2e-6)


def test_composite_stiffness_helpers():
    a = act(t1=1e-6, t2=1e-6, E1=2e9, E2=2e9)
    assert membrane_stiffness(a) == pytest.approx(4e3)
    # symmetric pair: D = E (2t)^3 / 12
    assert bending_rigidity(a) == pytest.approx(2e9 * (2e-6) ** 3 / 12, rel=1e-12)
