import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghostfringe.correlation import (CorrelationAccumulator, SliceCurve, delta_axis, finalize,
                                     merge, scan_slice, siegert_residual)
from ghostfringe.errors import AxisMismatchError, InsufficientDataError, ValidationError
from ghostfringe.grid import Axis, ComplexField
from ghostfringe.speckle import SpectrumModel, sample_speckle_batch

AX = Axis(16, 1e-6)
SUMS = ("sum_I1", "sum_I2", "diag", "sum_I1I2", "sum_E1cE2", "rows", "cols", "xrows", "xcols")


def gaussian_pairs(rng, count, n=16):
    e = (rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))) / math.sqrt(2)
    return e, np.roll(e, 3, axis=1) * 0.5 + 0.1 * e


def acc_of(e1, e2, **kw):
    kw.setdefault("track_rows", (2, 9))
    kw.setdefault("track_cols", (5,))
    kw.setdefault("block_size", 4)
    return CorrelationAccumulator(Axis(e1.shape[1], 1e-6), Axis(e2.shape[1], 1e-6),
                                  **kw).accumulate_batch(e1, e2)


def assert_sums_close(a, b, rtol=1e-12):
    assert a.count == b.count
    for name in SUMS:
        x, y = getattr(a, name), getattr(b, name)
        if x is None:
            assert y is None
        else:
            np.testing.assert_allclose(x, y, rtol=rtol, atol=rtol * float(np.max(np.abs(y))))


# -------------------------------------------------------------- accumulation

@given(st.integers(0, 2 ** 31), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
def test_merge_is_a_commutative_monoid(seed, na, nb, nc):
    rng = np.random.default_rng(seed)
    a, b, c = (acc_of(*gaussian_pairs(rng, k)) for k in (na, nb, nc))
    assert_sums_close(merge(merge(a, b), c), merge(a, merge(b, c)))
    assert_sums_close(merge(a, b), merge(b, a))
    assert_sums_close(merge(a, a.empty_like()), a, rtol=0)
    assert merge(merge(a, b), c).count == na + nb + nc


def test_merging_singles_equals_serial_accumulation(rng):
    e1, e2 = gaussian_pairs(rng, 7)
    serial = acc_of(e1, e2)
    total = acc_of(e1[:1], e2[:1])
    for r in range(1, 7):
        total = merge(total, acc_of(e1[r:r + 1], e2[r:r + 1]))
    assert_sums_close(total, serial)


def test_order_independence(rng):
    e1, e2 = gaussian_pairs(rng, 9)
    assert_sums_close(acc_of(e1, e2), acc_of(e1[::-1], e2[::-1]))


def test_full_and_slices_modes_agree(rng):
    e1, e2 = gaussian_pairs(rng, 12)
    full = acc_of(e1, e2, mode="full")
    sl = acc_of(e1, e2, mode="slices")
    assert sl.sum_I1I2 is None and full.sum_I1I2 is not None
    for name in ("sum_I1", "sum_I2", "diag", "rows", "cols", "xrows", "xcols"):
        np.testing.assert_allclose(getattr(sl, name), getattr(full, name), rtol=1e-10,
                                   atol=1e-12 * np.max(np.abs(getattr(full, name))))
    # diagonal sums hold sum over i - j of I1[i] I2[j]
    p = full.sum_I1I2
    expect = [np.trace(p, offset=-o) for o in range(-(p.shape[1] - 1), p.shape[0])]
    np.testing.assert_allclose(full.diag, expect, rtol=1e-12)


def test_zero_pair_changes_only_count(rng):
    e1, e2 = gaussian_pairs(rng, 3)
    acc = acc_of(e1, e2)
    before = acc.copy()
    acc.accumulate(ComplexField.zeros(AX), ComplexField.zeros(AX))
    assert acc.count == before.count + 1
    for name in SUMS:
        np.testing.assert_array_equal(getattr(acc, name), getattr(before, name))


def test_single_sample_numerator(rng):
    e1, e2 = gaussian_pairs(rng, 1)
    acc = acc_of(e1, e2)
    np.testing.assert_allclose(acc.sum_I1I2, np.outer(abs(e1[0]) ** 2, abs(e2[0]) ** 2),
                               rtol=1e-15)
    np.testing.assert_allclose(acc.sum_E1cE2, np.outer(np.conj(e1[0]), e2[0]), rtol=1e-15)
    with pytest.raises(InsufficientDataError):
        finalize(acc)


def test_accumulator_validation():
    with pytest.raises(ValidationError):
        CorrelationAccumulator(AX, AX, mode="sparse")
    with pytest.raises(ValidationError):
        CorrelationAccumulator(AX, AX, block_size=0)
    with pytest.raises(ValidationError):
        CorrelationAccumulator(AX, AX, track_rows=(16,))
    acc = CorrelationAccumulator(AX, AX)
    with pytest.raises(AxisMismatchError):
        acc.accumulate(ComplexField.zeros(Axis(16, 2e-6)), ComplexField.zeros(AX))
    with pytest.raises(AxisMismatchError):
        merge(acc, CorrelationAccumulator(AX, AX, track_rows=(1,)))
    with pytest.raises(ValidationError):
        acc.accumulate_batch(np.zeros((2, 16)), np.zeros((3, 16)))


# ------------------------------------------------------------------ finalize

def test_all_dark_rejected():
    acc = CorrelationAccumulator(AX, AX).accumulate_batch(np.zeros((3, 16)), np.zeros((3, 16)))
    with pytest.raises(InsufficientDataError):
        finalize(acc)


def test_ensemble_of_two_without_jackknife(rng):
    e1, e2 = gaussian_pairs(rng, 2)
    res = finalize(acc_of(e1, e2, block_size=100))
    assert res.count == 2 and res.blocks == 1
    assert np.all(np.isfinite(res.g2)) and np.all(np.isnan(res.stderr if res.stderr is not None
                                                           else np.nan))


def test_independent_arms_give_one(rng):
    n = 20000
    e1, _ = gaussian_pairs(rng, n)
    e2, _ = gaussian_pairs(rng, n)
    res = finalize(acc_of(e1, e2, block_size=500))
    z = (res.g2 - 1) / res.stderr
    assert np.max(np.abs(z)) <= 5


def test_identical_arms_give_two_on_the_diagonal(rng):
    n = 20000
    e, _ = gaussian_pairs(rng, n)
    res = finalize(acc_of(e, e, block_size=500))
    d = np.diag(res.g2)
    assert np.max(np.abs(d - 2) / np.diag(res.stderr)) <= 5
    off = ~np.eye(16, dtype=bool)
    assert np.max(np.abs(res.g2[off] - 1) / res.stderr[off]) <= 5
    # relabeling the arms transposes the surface
    res_t = finalize(acc_of(e, e, block_size=500, track_rows=(5,), track_cols=(2, 9)))
    np.testing.assert_allclose(res_t.g2, res.g2.T, rtol=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(0, 2 * math.pi))
def test_scale_invariance(scale, phase):
    rng = np.random.default_rng(11)
    e1, e2 = gaussian_pairs(rng, 12)
    c = scale * np.exp(1j * phase)
    a = finalize(acc_of(e1, e2))
    b = finalize(acc_of(c * e1, c * e2))
    np.testing.assert_allclose(b.g2, a.g2, rtol=1e-12)
    np.testing.assert_allclose(b.g1sq, a.g1sq, rtol=1e-12)
    np.testing.assert_allclose(b.delta_g2, a.delta_g2, rtol=1e-12)


def test_dark_samples_are_flagged(rng):
    e1, e2 = gaussian_pairs(rng, 8)
    e2[:, 10:] = 0
    res = finalize(acc_of(e1, e2))
    assert res.dark2[10:].all() and not res.dark2[:10].any()
    assert np.all(np.isnan(res.g2[:, 10:])) and np.all(np.isfinite(res.g2[:, :10]))
    assert res.flags[:, 10:].all()


def test_tracked_slices_match_surface(rng):
    e1, e2 = gaussian_pairs(rng, 40)
    res = finalize(acc_of(e1, e2))
    row = scan_slice(res, 1, AX.coords[9])
    np.testing.assert_allclose(row.g2, res.g2[9], rtol=1e-12)
    col = scan_slice(res, 2, AX.coords[5])
    np.testing.assert_allclose(col.g2, res.g2[:, 5], rtol=1e-12)
    assert row.replicates.shape == (10, 16)
    untracked = scan_slice(res, 1, AX.coords[0])
    np.testing.assert_allclose(untracked.g2, res.g2[0])
    with pytest.raises(ValidationError):
        scan_slice(res, 3, 0.0)


def test_delta_axis_and_ratio_of_sums(rng):
    e1, e2 = gaussian_pairs(rng, 30)
    res = finalize(acc_of(e1, e2))
    np.testing.assert_allclose(delta_axis(AX, AX), np.arange(-15, 16) * 1e-6, atol=1e-18)
    mm = np.outer(res.mean1, res.mean2)
    o = 3  # x1 - x2 = 3 dx
    num = np.trace(res.g2 * mm, offset=-o)
    assert res.delta_g2[15 + o] == pytest.approx(num / np.trace(mm, offset=-o), rel=1e-12)
    assert delta_axis(AX, Axis(16, 2e-6)) is None


def test_slice_statistic_jackknife():
    reps = np.array([[1.0, 2.0], [1.2, 2.0], [0.8, 2.2], [1.0, 1.8]])
    curve = SliceCurve(np.arange(2.0), np.array([1.0, 2.0]), np.zeros(2), np.zeros(2, bool),
                       replicates=reps)
    value, se = curve.statistic(lambda c: c[0] + c[1])
    s = reps.sum(axis=1)
    assert value == 3.0
    assert se == pytest.approx(math.sqrt(3 / 4 * np.sum((s - s.mean()) ** 2)))
    _, se_none = SliceCurve(curve.coords, curve.g2, curve.stderr, curve.flags).statistic(sum)
    assert math.isnan(se_none)


# ------------------------------------------------------------------ Siegert

@pytest.fixture(scope="module")
def siegert_runs():
    ax = Axis(64, 1e-6)
    spec = SpectrumModel.from_coherence_length(4e-6)
    out = {}
    acc = CorrelationAccumulator(ax, ax, block_size=1000)
    for start in range(0, 100_000, 10_000):
        e = sample_speckle_batch(spec, ax, 5, range(start, start + 10_000))
        acc.accumulate_batch(e, np.roll(e, 5, axis=1))
        if acc.count == 50_000:
            out[50_000] = finalize(acc)
    out[100_000] = finalize(acc)
    return out


def test_siegert_identity_within_five_standard_errors(siegert_runs):
    assert siegert_residual(siegert_runs[100_000]) <= 5


def test_siegert_residual_shrinks_like_root_n(siegert_runs):
    half = siegert_residual(siegert_runs[50_000], normalized=False)
    full = siegert_residual(siegert_runs[100_000], normalized=False)
    assert 1.1 <= half / full <= 1.9


def test_siegert_degenerate_input_not_scored():
    ones = np.ones((20, 8), dtype=complex)
    res = finalize(acc_of(ones, ones, block_size=5, track_rows=(), track_cols=()))
    assert math.isnan(siegert_residual(res))
    # constant fields: g2 = 1 and g1sq = 1, so the raw residual is 1 (not Gaussian light)
    assert siegert_residual(res, normalized=False) == pytest.approx(1.0)
