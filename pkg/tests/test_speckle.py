import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from ghostfringe.errors import AxisMismatchError, InsufficientDataError, SamplingError, ValidationError
from ghostfringe.grid import Axis, ComplexField
from ghostfringe.speckle import (DegenerateSpectrumWarning, SeedSpec, SpectrumModel,
                                 coherence_length, estimate_first_order, sample_speckle,
                                 sample_speckle_batch)


def _numeric_covariance(spec, t):
    # direct quadrature of the spectrum: integral W(q) cos(q t) dq
    lim = 12 * spec.width
    return integrate.quad(lambda q: float(spec.power_spectrum(q)) * math.cos(q * t),
                          -lim, lim, limit=400)[0]


def test_determinism_and_independence():
    spec = SpectrumModel.from_coherence_length(5e-6)
    ax = Axis(256, 1e-6)
    a = sample_speckle(spec, ax, SeedSpec(7, 3))
    b = sample_speckle(spec, ax, SeedSpec(7, 3))
    c = sample_speckle(spec, ax, SeedSpec(7, 4))
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_batch_rows_depend_only_on_index():
    spec = SpectrumModel.from_coherence_length(5e-6)
    ax = Axis(128, 1e-6)
    full = sample_speckle_batch(spec, ax, 11, range(10))
    part = sample_speckle_batch(spec, ax, 11, [7, 2])
    np.testing.assert_array_equal(part[0], full[7])
    np.testing.assert_array_equal(part[1], full[2])


def test_zero_spectrum_gives_zero_field_with_warning():
    spec = SpectrumModel("gaussian", 0.0, 4e5)
    with pytest.warns(DegenerateSpectrumWarning):
        f = sample_speckle(spec, Axis(64, 1e-6), SeedSpec(1, 0))
    assert not np.any(f.values)


def test_under_resolved_coherence_raises():
    with pytest.raises(SamplingError):
        sample_speckle(SpectrumModel.from_coherence_length(5e-6), Axis(64, 6e-6), SeedSpec(1))
    with pytest.raises(SamplingError):
        sample_speckle(SpectrumModel.broadband(), Axis(64, 1e-6), SeedSpec(1))


def test_coherence_length_gaussian_and_reciprocity():
    s = SpectrumModel("gaussian", 1.0, 4e5)
    assert coherence_length(s) == pytest.approx(5e-6)
    s2 = SpectrumModel("gaussian", 1.0, 8e5)
    assert coherence_length(s2) == pytest.approx(coherence_length(s) / 2)
    assert coherence_length(SpectrumModel.broadband()) == 0.0


def test_coherence_length_is_one_over_e_point_of_numeric_transform():
    for spec in (SpectrumModel("gaussian", 1.0, 3e5), SpectrumModel("flat-top", 1.0, 3e5)):
        lc = coherence_length(spec)
        g0 = _numeric_covariance(spec, 0.0)
        assert abs(_numeric_covariance(spec, lc)) / g0 == pytest.approx(math.exp(-1), rel=1e-6)


def test_flat_top_first_zero():
    spec = SpectrumModel("flat-top", 1.0, 2e5)
    assert spec.field_covariance(math.pi / 2e5) == pytest.approx(0.0, abs=1e-9 * spec.field_covariance(0.0))


@given(st.floats(1e4, 1e7))
def test_coherence_length_decreases_with_width(w):
    a = coherence_length(SpectrumModel("gaussian", 1.0, w))
    b = coherence_length(SpectrumModel("gaussian", 1.0, w * 1.5))
    assert b < a


@pytest.mark.parametrize("t", [0.0, 2e-6, 5e-6, 9e-6])
def test_closed_form_covariance_matches_numeric_transform(t):
    spec = SpectrumModel("gaussian", 1.0, 4e5)
    assert spec.field_covariance(t) == pytest.approx(_numeric_covariance(spec, t), rel=1e-8)


def test_ensemble_covariance_matches_spectrum_transform():
    spec = SpectrumModel.from_coherence_length(5e-6)
    ax = Axis(64, 1e-6)
    e = sample_speckle_batch(spec, ax, 5, range(10_000))
    x = ax.coords
    cov = np.conj(e[:, 0:1]) * e  # <E*(x0) E(x)>
    mean = cov.mean(axis=0)
    se = np.sqrt(cov.real.var(axis=0, ddof=1) / len(e)) + 1e-300
    # DFT synthesis makes the field periodic over the window: sum the lag images
    period = ax.extent
    expect = np.array([sum(_numeric_covariance(spec, xx - x[0] + m * period) for m in (-1, 0, 1))
                       for xx in x])
    assert np.all(np.abs(mean.real - expect) <= 5 * se + 1e-12 * expect[0])


def test_intensity_contrast_is_negative_exponential():
    spec = SpectrumModel.from_coherence_length(5e-6)
    ax = Axis(64, 1e-6)
    i = np.abs(sample_speckle_batch(spec, ax, 9, range(100_000))[:, 32]) ** 2
    blocks = i.reshape(100, -1)
    ratio = lambda b: np.mean(b ** 2) / np.mean(b) ** 2
    reps = np.array([ratio(np.delete(blocks, k, axis=0)) for k in range(100)])
    se = math.sqrt(99 / 100 * np.sum((reps - reps.mean()) ** 2))
    assert abs(ratio(i) - 2.0) <= 5 * se


def test_wick_factorization_on_sampled_quadruples(rng):
    spec = SpectrumModel.from_coherence_length(5e-6)
    ax = Axis(64, 1e-6)
    e = sample_speckle_batch(spec, ax, 13, range(100_000))
    quads = rng.integers(20, 44, size=(40, 4))
    nb = 100
    for a, b, c, d in quads:
        four = np.conj(e[:, a]) * np.conj(e[:, b]) * e[:, c] * e[:, d]
        p_ad = np.conj(e[:, a]) * e[:, d]
        p_bc = np.conj(e[:, b]) * e[:, c]
        p_ac = np.conj(e[:, a]) * e[:, c]
        p_bd = np.conj(e[:, b]) * e[:, d]

        def resid(sl):
            return (four[sl].mean() - p_ad[sl].mean() * p_bc[sl].mean()
                    - p_ac[sl].mean() * p_bd[sl].mean())
        full = resid(slice(None))
        idx = np.arange(len(e)).reshape(nb, -1)
        reps = np.array([resid(np.delete(idx, k, axis=0).ravel()) for k in range(nb)])
        se = math.sqrt((nb - 1) / nb * np.sum(np.abs(reps - reps.mean()) ** 2))
        assert abs(full) <= 5 * se


def test_envelope_scales_intensity():
    spec = SpectrumModel.from_coherence_length(5e-6, envelope_width=50e-6)
    ax = Axis(256, 1e-6)
    e = sample_speckle_batch(spec, ax, 3, range(4000))
    i = (np.abs(e) ** 2).mean(axis=0)
    ratio = i / i[128]
    expect = np.exp(-(ax.coords ** 2 - ax.coords[128] ** 2) / 50e-6 ** 2)
    assert np.max(np.abs(ratio[96:160] - expect[96:160])) < 0.1


def test_estimate_first_order_contracts():
    ax = Axis(8, 1.0)
    f = ComplexField(ax, np.arange(8) * (1 + 1j))
    est = estimate_first_order([f, f, f])
    np.testing.assert_allclose(est.mean, np.conj(f.values)[:, None] * f.values[None, :])
    assert np.all(est.stderr == 0)
    spec = SpectrumModel.from_coherence_length(4.0, envelope_width=math.inf)
    ens = [sample_speckle(spec, Axis(8, 1.0), SeedSpec(1, i)) for i in range(5)]
    d = np.diag(estimate_first_order(ens).mean)
    assert np.all(d.real >= 0) and np.all(d.imag == 0)
    with pytest.raises(InsufficientDataError):
        estimate_first_order([f])
    with pytest.raises(AxisMismatchError):
        estimate_first_order([f, ComplexField(Axis(8, 2.0), f.values)])


def test_translation_invariance_without_envelope():
    spec = SpectrumModel.from_coherence_length(5e-6)
    ax = Axis(32, 2e-6)
    ens = [ComplexField(ax, v) for v in sample_speckle_batch(spec, ax, 2, range(5000))]
    est = estimate_first_order(ens)
    for lag in (0, 1, 2, 3):
        d = np.diagonal(est.mean, lag).real
        s = np.diagonal(est.stderr, lag)
        assert np.all(np.abs(d - d.mean()) <= 5 * s + 1e-15)


def test_invalid_spectra():
    for kw in ({"kind": "lorentz"}, {"w0": -1.0}, {"width": 0.0}, {"envelope_width": 0.0},
               {"kind": "flat-top", "width": math.inf}):
        with pytest.raises(ValidationError):
            SpectrumModel(**kw)
    with pytest.raises(ValidationError):
        SeedSpec(1, -1)
