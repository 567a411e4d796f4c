import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghostfringe.errors import AliasingError, AxisMismatchError, SamplingError, ValidationError
from ghostfringe.grid import Axis, ComplexField, power
from ghostfringe.optics import (ApertureSpec, Free, Mask, PathSpec, apply_mask, mask_profile,
                                padded_size, propagate_fresnel, propagate_kernel_matrix,
                                run_path, split_beam, wavenumber)

WL = 632.8e-9


def gaussian_field(axis, w, x0=0.0):
    return ComplexField(axis, np.exp(-((axis.coords - x0) / w) ** 2))


def analytic_gaussian(x, z, w, wl=WL):
    """Field of exp(-x^2/w^2) after paraxial free travel z (standard Gaussian-beam solution)."""
    k = 2 * math.pi / wl
    zr = k * w * w / 2
    qf = 1 + 1j * z / zr
    return np.exp(1j * k * z) / np.sqrt(qf) * np.exp(-x * x / (w * w * qf))


def rms_rel(a, b):
    return float(np.sqrt(np.mean(np.abs(a - b) ** 2) / np.mean(np.abs(b) ** 2)))


# ------------------------------------------------------------------ apertures

def test_double_slit_intervals():
    iv = ApertureSpec.double().intervals()
    np.testing.assert_allclose(np.array(iv) * 1e6, [[-207.5, -122.5], [122.5, 207.5]], atol=1e-9)


def test_incomplete_slit_keeps_inner_quarter():
    (lo, hi), right = ApertureSpec.incomplete().intervals()
    assert lo * 1e6 == pytest.approx(-143.75) and hi * 1e6 == pytest.approx(-122.5)
    assert (lo + hi) / 2 * 1e6 == pytest.approx(-133.125)
    assert right == ApertureSpec.double().intervals()[1]


def test_single_slit_only_positive_side():
    assert ApertureSpec.single().intervals() == [ApertureSpec.double().intervals()[1]]


def test_retained_one_equals_double():
    ax = Axis(512, 1e-6)
    a = mask_profile(ApertureSpec.incomplete(retained_fraction=1.0), ax).values
    np.testing.assert_array_equal(a, mask_profile(ApertureSpec.double(), ax).values)


def test_profile_open_exactly_on_intervals_for_aligned_grid():
    ax = Axis(256, 2.5e-6)
    t = mask_profile(ApertureSpec.double(), ax).values.real
    x = np.abs(ax.coords)
    np.testing.assert_array_equal(t, ((x > 122.5e-6) & (x < 207.5e-6)).astype(float))


def test_gray_pixels_carry_open_fraction():
    ax = Axis(64, 4e-6)
    spec = ApertureSpec("double_slit", 20e-6, 60e-6)
    t = mask_profile(spec, ax).values.real
    assert np.sum(t) * ax.dx == pytest.approx(2 * 20e-6, rel=1e-12)
    assert np.all((t >= 0) & (t <= 1))


def test_uniform_input_power_ratio_is_open_area():
    ax = Axis(256, 2.5e-6)
    out = apply_mask(ComplexField(ax, np.ones(256)), ApertureSpec.double())
    assert power(out) / power(ComplexField(ax, np.ones(256))) == pytest.approx(
        2 * 85e-6 / ax.extent, rel=1e-12)


def test_mask_idempotent_and_local():
    ax = Axis(256, 2.5e-6)
    f = gaussian_field(ax, 150e-6)
    once = apply_mask(f, ApertureSpec.double())
    twice = apply_mask(once, ApertureSpec.double())
    np.testing.assert_array_equal(once.values, twice.values)
    t = mask_profile(ApertureSpec.double(), ax).values.real
    np.testing.assert_array_equal(once.values[t == 1], f.values[t == 1])
    assert np.all(once.values[t == 0] == 0)


@given(st.floats(0.1, 1.0), st.integers(0, 2 ** 31))
def test_mask_never_adds_power(frac, seed):
    ax = Axis(512, 1e-6)
    r = np.random.default_rng(seed)
    f = ComplexField(ax, r.standard_normal(512) + 1j * r.standard_normal(512))
    out = apply_mask(f, ApertureSpec.incomplete(retained_fraction=frac))
    assert power(out) <= power(f)


def test_aperture_validation():
    with pytest.raises(ValidationError):
        ApertureSpec.double(b=400e-6, d=330e-6)
    with pytest.raises(ValidationError):
        ApertureSpec.incomplete(retained_fraction=0.0)
    with pytest.raises(ValidationError):
        ApertureSpec("triangle")
    with pytest.raises(SamplingError):
        mask_profile(ApertureSpec.incomplete(), Axis(2048, 8e-6))
    with pytest.raises(ValidationError):
        mask_profile(ApertureSpec.double(), Axis(64, 4e-6))
    with pytest.raises(AxisMismatchError):
        apply_mask(ComplexField(Axis(8, 1.0), np.ones(8)), ComplexField(Axis(8, 2.0), np.ones(8)))


def test_custom_profile_resampled():
    src = Axis(8, 1.0)
    spec = ApertureSpec("custom", custom_axis=src, custom_values=(0, 0, 1, 1, 1, 1, 0, 0))
    np.testing.assert_array_equal(mask_profile(spec, src).values.real, [0, 0, 1, 1, 1, 1, 0, 0])
    with pytest.raises(ValidationError):
        ApertureSpec("custom", custom_axis=src, custom_values=(2,) * 8)


# ---------------------------------------------------------------- propagation

def test_transfer_function_matches_kernel_matrix():
    ax = Axis(256, 1e-6)
    f = gaussian_field(ax, 20e-6)
    m = propagate_kernel_matrix(ax, ax, 1e-3, WL)
    assert rms_rel(propagate_fresnel(f, 1e-3, WL).values, m @ f.values) <= 1e-6


def test_gaussian_beam_matches_closed_form():
    ax = Axis(2048, 1e-6)
    w, z = 30e-6, 5e-3
    out = propagate_fresnel(gaussian_field(ax, w), z, WL)
    assert rms_rel(out.values, analytic_gaussian(ax.coords, z, w)) <= 1e-6
    i = out.intensity
    width = math.sqrt(4 * np.sum(ax.coords ** 2 * i) / np.sum(i))  # 1/e^2 intensity radius
    k = wavenumber(WL)
    expect = w * math.sqrt(1 + (2 * z / (k * w * w)) ** 2)
    assert width == pytest.approx(expect, rel=1e-3)


def test_power_conserved_and_semigroup():
    ax = Axis(1024, 1e-6)
    f = gaussian_field(ax, 25e-6)
    a = propagate_fresnel(propagate_fresnel(f, 1e-3, WL), 2e-3, WL)
    b = propagate_fresnel(f, 3e-3, WL)
    assert abs(power(b) - power(f)) / power(f) <= 1e-6
    assert rms_rel(a.values, b.values) <= 1e-8


def test_kernel_matrix_contracts():
    ax = Axis(64, 1e-6)
    m = propagate_kernel_matrix(ax, ax, 1e-3, WL)
    k = wavenumber(WL)
    np.testing.assert_allclose(np.abs(m), math.sqrt(k / (2 * math.pi * 1e-3)) * ax.dx, rtol=1e-12)
    np.testing.assert_allclose(m, m.T, rtol=0, atol=1e-15 * np.abs(m).max())
    with pytest.raises(ValidationError):
        propagate_kernel_matrix(Axis(1024, 1e-6), Axis(1024, 1e-6), 1e-3, WL)


def test_padding_and_aliasing_guards():
    n, dx = 256, 1e-6
    assert padded_size(n, dx, 1e-6, WL) >= n
    with pytest.raises(AliasingError):
        padded_size(n, dx, 1e-2, WL, pad=False)
    with pytest.raises(AliasingError):
        padded_size(n, dx, 100.0, WL, max_samples=1 << 12)
    with pytest.raises(ValidationError):
        propagate_fresnel(gaussian_field(Axis(8, 1e-6), 2e-6), -1.0, WL)


def test_zero_field_propagates_to_zero():
    out = propagate_fresnel(ComplexField.zeros(Axis(64, 1e-6)), 1e-3, WL)
    assert not np.any(out.values)


# ----------------------------------------------------------------- split, path

def test_split_beam():
    ax = Axis(64, 1e-6)
    f = gaussian_field(ax, 10e-6)
    a, b = split_beam(f)
    assert power(a) == pytest.approx(power(f) / 2) and power(b) == pytest.approx(power(f) / 2)
    np.testing.assert_allclose((a.values + b.values) / math.sqrt(2), f.values, rtol=1e-15)


def test_run_path_identity_and_single_free():
    ax = Axis(256, 1e-6)
    f = gaussian_field(ax, 20e-6)
    np.testing.assert_array_equal(run_path(f, PathSpec(()), WL).values, f.values)
    np.testing.assert_array_equal(run_path(f, PathSpec((Free(1e-3),)), WL).values,
                                  propagate_fresnel(f, 1e-3, WL).values)


def test_masked_path_matches_matrix_composition():
    # apodized double slit: band-limited, so midpoint quadrature and the spectral route coincide
    ax = Axis(256, 2.5e-6)
    src = gaussian_field(ax, 10e-6, x0=5e-6)
    z0, z = 10e-3, 10e-3
    hard = mask_profile(ApertureSpec.double(), ax).values.real
    g = np.exp(-0.5 * (np.arange(-16, 17) / 4.0) ** 2)
    t = np.clip(np.convolve(hard, g / g.sum(), mode="same"), 0.0, 1.0)
    soft = ApertureSpec("custom", custom_axis=ax, custom_values=tuple(t))
    path = PathSpec((Free(z0), Mask(soft), Free(z)))
    m1 = propagate_kernel_matrix(ax, ax, z0, WL)
    m2 = propagate_kernel_matrix(ax, ax, z, WL)
    ref = m2 @ (t * (m1 @ src.values))
    assert rms_rel(run_path(src, path, WL).values, ref) <= 1e-6


def test_hard_mask_discretization_gap_shrinks_with_distance():
    # sharp edges put power at the Nyquist band, where the sampled kernel and the
    # band-limited transfer function differ; the gap falls as the chirp slows
    ax = Axis(256, 2.5e-6)
    src = gaussian_field(ax, 10e-6)
    t = mask_profile(ApertureSpec.double(), ax).values
    gaps = []
    for z in (10e-3, 30e-3, 100e-3):
        m = propagate_kernel_matrix(ax, ax, z, WL)
        field = m @ src.values
        spectral = run_path(ComplexField(ax, t * field), PathSpec((Free(z),)), WL).values
        gaps.append(rms_rel(spectral, m @ (t * field)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_path_validation():
    with pytest.raises(ValidationError):
        Free(-0.1)
    with pytest.raises(ValidationError):
        PathSpec(("lens",))
    assert PathSpec((Free(0.1), Mask(ApertureSpec.double()), Free(0.2))).length == pytest.approx(0.3)
