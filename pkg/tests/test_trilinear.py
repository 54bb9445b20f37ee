import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlelab import Cap, CircleFunction
from circlelab.extension import PlaneGrid
from circlelab.trilinear import (
    FAST_DIRECT,
    DirectSettings,
    antipodal_lower_bound,
    antipodal_ratio,
    cap_interaction,
    concentrating_cap_function,
    default_kappa_samples,
    measure_kappa,
    plancherel_constant,
    richardson_halving,
    sixfold_identity_residual,
    smoothed_l2_squared,
    trilinear_norm_direct,
    trilinear_norm_fourier,
)

GRID = PlaneGrid.square(50, 0.9)


def bump(center=1.0, width=0.6, n=128):
    return CircleFunction.from_callable(lambda t: np.exp(-((np.angle(np.exp(1j * (t - center)))) ** 2) / (2 * width**2)), n)


def test_richardson_exact_for_linear_and_quadratic():
    h = np.array([0.4, 0.2, 0.1])
    assert richardson_halving(3 + 2 * h) == pytest.approx(3.0, abs=1e-14)
    assert richardson_halving(3 + 2 * h - 5 * h * h) == pytest.approx(3.0, abs=1e-13)


def test_direct_settings_checked():
    with pytest.raises(ValueError):
        DirectSettings(widths=(0.04, 0.03))
    with pytest.raises(ValueError):
        DirectSettings(widths=(0.04, 0.02), bin_width=0.02)
    with pytest.raises(ValueError):
        DirectSettings(widths=(0.04,))


def test_zero_function_both_routes():
    z = CircleFunction.constant(64, 0.0)
    assert trilinear_norm_fourier(z, GRID, kappa=2 * math.pi).value == 0.0
    assert trilinear_norm_direct(z, FAST_DIRECT) == 0.0


def test_smoothed_norms_grow_as_kernel_narrows():
    vals = smoothed_l2_squared(CircleFunction.constant(64), FAST_DIRECT)
    assert np.all(np.diff(vals) > 0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 5.0))
def test_homogeneity_fourier(c):
    f = bump()
    a = trilinear_norm_fourier(f, GRID, kappa=2 * math.pi).value
    b = trilinear_norm_fourier(CircleFunction(c * f.samples), GRID, kappa=2 * math.pi).value
    assert b == pytest.approx(c**3 * a, rel=1e-12)


def test_homogeneity_direct():
    f = bump(n=64)
    a = trilinear_norm_direct(f, FAST_DIRECT)
    assert trilinear_norm_direct(CircleFunction(2 * f.samples), FAST_DIRECT) == pytest.approx(8 * a, rel=1e-12)
    assert trilinear_norm_direct(CircleFunction(-1j * f.samples), FAST_DIRECT) == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("quarter", [1, 2, 3])
def test_direct_quarter_turn_invariance(quarter):
    f = bump()
    a = trilinear_norm_direct(f, FAST_DIRECT)
    assert trilinear_norm_direct(f.rotated(32 * quarter), FAST_DIRECT) == pytest.approx(a, rel=1e-6)


def test_direct_general_rotation_within_binning_error():
    f = bump()
    a = trilinear_norm_direct(f, FAST_DIRECT)
    assert trilinear_norm_direct(f.rotated(5), FAST_DIRECT) == pytest.approx(a, rel=1e-3)


def test_fourier_rotation_invariance():
    f = bump()
    a = trilinear_norm_fourier(f, GRID, kappa=1.0)
    b = trilinear_norm_fourier(f.rotated(5), GRID, kappa=1.0)
    # the square box is not rotation invariant; the gap must sit inside the tail bars
    assert abs(a.value - b.value) <= a.error + b.error


def test_kappa_is_two_pi():
    kappa = plancherel_constant()
    assert kappa > 0
    assert kappa == pytest.approx(2 * math.pi, rel=0.01)


def test_kappa_report_family():
    rep = measure_kappa(default_kappa_samples(128), GRID, FAST_DIRECT)
    assert rep.spread < 0.05
    assert rep.nearest == "2pi"
    # the constant and the bump give the same ratio within the spread
    assert abs(rep.samples[0] - rep.samples[1]) / rep.kappa <= rep.spread


def test_kappa_needs_samples():
    with pytest.raises(ValueError):
        measure_kappa([], GRID)


def test_sixfold_constants():
    ones = [CircleFunction.constant(128)] * 6
    assert sixfold_identity_residual(ones, GRID) < 1e-6


def test_sixfold_bumps():
    b = bump(center=math.pi / 2, width=0.3)
    assert sixfold_identity_residual([b] * 6, GRID) < 1e-3


def test_sixfold_mixed_inputs():
    fs = [bump(center=c, width=0.4) for c in (0.3, 1.0, 2.0, 2.5, 4.0, 5.5)]
    assert sixfold_identity_residual(fs, GRID) < 1e-3


def test_sixfold_rejects_complex():
    f = CircleFunction.from_callable(lambda t: np.exp(1j * t), 64)
    with pytest.raises(ValueError):
        sixfold_identity_residual([f] * 6, GRID)


def test_antipodal_pair_keeps_norm():
    f = concentrating_cap_function(0.05, 1024)
    big = CircleFunction((f.samples + f.antipodal().samples) / math.sqrt(2))
    assert big.l2_norm() == pytest.approx(f.l2_norm(), rel=1e-10)


def test_antipodal_gain_small_bump():
    rep = antipodal_lower_bound(0.05)
    assert rep.ratio >= 2.5 * 0.95
    assert 2.4 <= rep.ratio <= 2.6


def test_antipodal_ratio_of_even_function_is_two():
    # F = (f + f~)/sqrt(2) with f already even is sqrt(2) f: ratio 2^3
    f = CircleFunction.constant(128)
    assert antipodal_ratio(f, GRID).ratio == pytest.approx(8.0, rel=1e-12)


def test_cap_interaction_baseline_and_reflection():
    r = 0.1
    grid = PlaneGrid.square(200, 0.9)
    n = 512
    c1 = Cap(math.pi / 2, r)
    base = cap_interaction(c1, c1, grid, n, kappa=2 * math.pi)
    assert base.value > 0
    c2 = Cap(math.pi / 2 + 8 * r, r)
    a = cap_interaction(c1, c2, grid, n, kappa=2 * math.pi)
    b = cap_interaction(c1, c2.negated(), grid, n, kappa=2 * math.pi)
    assert b.value == pytest.approx(a.value, rel=1e-10)
    assert a.value < base.value
