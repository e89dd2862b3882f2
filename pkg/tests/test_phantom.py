import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctnoise.errors import InvalidParams, Mismatch
from ctnoise.image_core import Roi, roi_variance
from ctnoise.phantom import (
    STREAM_SPLIT,
    PhantomParams,
    ScanPair,
    _splitmix64,
    gaussian_field,
    generate_pair,
    oracle_residual,
)

from conftest import make_pair


def _splitmix64_scalar(seed, count):
    """Independent scalar-loop SplitMix64 reference."""
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_splitmix64_matches_scalar_reference(seed):
    got = _splitmix64(seed, 17)
    assert [int(v) for v in got] == _splitmix64_scalar(seed, 17)


def test_gaussian_field_deterministic_and_odd_count():
    a = gaussian_field(123, 101)
    b = gaussian_field(123, 101)
    assert np.array_equal(a, b)
    assert a.shape == (101,)
    # Shorter draws are prefixes of longer ones from the same seed.
    assert np.array_equal(gaussian_field(123, 50), a[:50])


def test_gaussian_field_moments():
    z = gaussian_field(7, 200_000)
    n = z.size
    # Mean of n standard normals has std 1/sqrt(n); allow 5 sigma.
    assert abs(z.mean()) < 5.0 / math.sqrt(n)
    # Sample variance of normals has std sqrt(2/(n-1)).
    assert abs(z.var(ddof=1) - 1.0) < 5.0 * math.sqrt(2.0 / (n - 1))
    assert np.all(np.isfinite(z))


def test_generate_pair_bitwise_deterministic():
    pair1, gt1 = make_pair(seed=5)
    pair2, gt2 = make_pair(seed=5)
    assert np.array_equal(pair1.high.pixels, pair2.high.pixels)
    assert np.array_equal(pair1.low.pixels, pair2.low.pixels)
    assert np.array_equal(gt1.clean.pixels, gt2.clean.pixels)


def test_high_low_streams_differ():
    pair, gt = make_pair(seed=5)
    assert not np.array_equal(gt.noise_high.pixels, gt.noise_low.pixels)


def test_oracle_residual_bitwise():
    pair, gt = make_pair(seed=9)
    res_high, res_low = oracle_residual(pair, gt)
    assert np.array_equal(res_high.pixels, gt.noise_high.pixels)
    assert np.array_equal(res_low.pixels, gt.noise_low.pixels)


def test_oracle_residual_rejects_foreign_ground_truth():
    pair, _ = make_pair(seed=1)
    _, gt_other = make_pair(seed=2)
    with pytest.raises(Mismatch):
        oracle_residual(pair, gt_other)


def test_noise_variance_within_chi_square_bound():
    # 64x64 ROI: sample variance of n=4096 normals has relative std
    # sqrt(2/(n-1)) ~ 2.2%; 5 sigma ~ 11%.
    pair, gt = make_pair(seed=42)
    roi = pair.roi
    var_high = roi_variance(gt.noise_high, roi)
    var_low = roi_variance(gt.noise_low, roi)
    assert 100.0 * 0.89 < var_high < 100.0 * 1.11
    assert 960.0 * 0.89 < var_low < 960.0 * 1.11


def test_noise_fields_uncorrelated():
    pair, gt = make_pair(seed=3)
    a = gt.noise_high.pixels.astype(np.float64).ravel()
    b = gt.noise_low.pixels.astype(np.float64).ravel()
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 5.0 / math.sqrt(a.size)


def test_stream_split_constant():
    assert STREAM_SPLIT == 0x9E3779B97F4A7C15


def test_ramp_signal_amplitude():
    pair, gt = make_pair(seed=0, signal="ramp:80")
    clean = gt.clean.pixels
    # Rows are identical; the left edge sits at the 40 HU base and the
    # right edge 80 HU above it.
    assert clean[0, 0] == pytest.approx(40.0)
    assert clean[0, -1] == pytest.approx(120.0)
    assert np.array_equal(clean[0], clean[-1])


def test_chest_signal_composition():
    pair, gt = make_pair(seed=0, size=128, roi=Roi(40, 40, 48, 48), signal="chest")
    clean = gt.clean.pixels
    assert clean[0, 0] == -1000.0  # air outside the body
    assert np.any(clean == -800.0)  # lung-like region
    assert clean.min() >= -1000.0 and clean.max() <= 90.0


def test_texture_kernel_preserves_roi_variance():
    roi = Roi(16, 16, 64, 64)
    params = PhantomParams(
        width=96,
        height=96,
        sigma_high=10.0,
        ratio=4.0,
        roi=roi,
        texture_kernel=np.ones((3, 3)),
        seed=11,
    )
    pair, gt = generate_pair(params)
    var_high = roi_variance(gt.noise_high, roi)
    # The kernel rescale pins the pre-rounding ROI variance at sigma^2.
    assert var_high == pytest.approx(100.0, rel=1e-3)
    # Smoothed noise is spatially correlated with its neighbors.
    field = gt.noise_high.pixels.astype(np.float64)
    r = np.corrcoef(field[:, :-1].ravel(), field[:, 1:].ravel())[0, 1]
    assert r > 0.3


def test_phantom_params_validation():
    roi = Roi(0, 0, 8, 8)
    with pytest.raises(InvalidParams):
        PhantomParams(0, 16, 10.0, 9.6, roi)
    with pytest.raises(InvalidParams):
        PhantomParams(16, 16, -1.0, 9.6, roi)
    with pytest.raises(InvalidParams):
        PhantomParams(16, 16, 10.0, 0.0, roi)
    with pytest.raises(InvalidParams):
        PhantomParams(16, 16, 10.0, 9.6, Roi(10, 10, 8, 8))
    with pytest.raises(InvalidParams):
        PhantomParams(16, 16, 10.0, 9.6, roi, signal="blob")


def test_scan_pair_needs_dose_or_override():
    pair, _ = make_pair(seed=1)
    from ctnoise.image_core import Image

    bare_high = Image(pair.high.pixels)
    bare_low = Image(pair.low.pixels)
    with pytest.raises(InvalidParams):
        ScanPair(high=bare_high, low=bare_low, roi=pair.roi)
    ok = ScanPair(high=bare_high, low=bare_low, roi=pair.roi, rthe_override=9.6)
    assert ok.rthe_override == 9.6
    with pytest.raises(InvalidParams):
        ScanPair(high=bare_high, low=bare_low, roi=pair.roi, rthe_override=-2.0)


def test_pair_mas_encodes_ratio():
    pair, _ = make_pair(seed=4, ratio=9.6)
    assert pair.high.meta.mas / pair.low.meta.mas == pytest.approx(9.6)
