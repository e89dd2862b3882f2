import numpy as np
import pytest
from scipy import ndimage

from ctnoise.errors import ImageTooSmall, InvalidParams
from ctnoise.image_core import Image
from ctnoise.spatial_filters import (
    AdParams,
    BilateralParams,
    MatchedFilterParams,
    anisotropic_diffusion,
    bilateral,
    estimate_noise_sigma,
    gaussian_template,
    matched_filter,
    pwnlm,
)

from conftest import random_image


def test_gaussian_template_unit_sum_and_symmetry():
    k = gaussian_template(3, 1.3)
    assert k.shape == (7, 7)
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(k, k[::-1, ::-1])
    assert np.allclose(k, k.T)


def test_matched_filter_impulse_response_is_template():
    # Correlating an interior impulse with the unit-sum template must
    # reproduce the template itself around the impulse.
    px = np.zeros((11, 11), dtype=np.float32)
    px[5, 5] = 1.0
    p = MatchedFilterParams(half_width=2, sigma_t=1.0)
    out = matched_filter(Image(px), p).pixels
    template = gaussian_template(2, 1.0)
    assert np.allclose(out[3:8, 3:8], template, atol=1e-7)
    assert np.allclose(np.delete(out.ravel(), [r * 11 + c for r in range(3, 8) for c in range(3, 8)]), 0.0)


def test_matched_filter_half_width_zero_is_identity():
    img = random_image(0, 8, 8)
    out = matched_filter(img, MatchedFilterParams(half_width=0, sigma_t=1.0))
    assert np.array_equal(out.pixels, img.pixels)


def test_matched_filter_preserves_constant():
    img = Image(np.full((16, 16), 70.0, dtype=np.float32))
    out = matched_filter(img, MatchedFilterParams(3, 2.0))
    assert np.allclose(out.pixels, 70.0, atol=1e-4)


def test_bilateral_flat_range_matches_gaussian_convolution():
    # With sigma_r -> infinity the range kernel is flat and the bilateral
    # filter degenerates to normalized Gaussian window smoothing.
    img = random_image(5, 64, 64)
    p = BilateralParams(half_width=3, sigma_sx=1.5, sigma_sy=0.8, sigma_r=1e12)
    got = bilateral(img, p).pixels.astype(np.float64)

    d = np.arange(-3, 4, dtype=np.float64)
    kx = np.exp(-(d * d) / (2.0 * p.sigma_sx**2))
    ky = np.exp(-(d * d) / (2.0 * p.sigma_sy**2))
    kernel = np.outer(ky, kx)
    kernel /= kernel.sum()
    oracle = ndimage.correlate(img.pixels.astype(np.float64), kernel, mode="nearest")
    scale = float(np.max(np.abs(oracle)))
    assert np.max(np.abs(got - oracle)) / scale < 1e-6


def test_bilateral_preserves_constant():
    img = Image(np.full((12, 12), -300.0, dtype=np.float32))
    out = bilateral(img, BilateralParams())
    assert np.allclose(out.pixels, -300.0, atol=1e-4)


def test_bilateral_edge_preservation():
    # A sharp 200 HU step: with a small range sigma the edge survives,
    # with a huge one it is blurred like plain Gaussian smoothing.
    px = np.zeros((16, 16), dtype=np.float32)
    px[:, 8:] = 200.0
    img = Image(px)
    sharp = bilateral(img, BilateralParams(2, 1.5, 1.5, 5.0)).pixels
    blurred = bilateral(img, BilateralParams(2, 1.5, 1.5, 1e6)).pixels
    edge_sharp = abs(float(sharp[8, 8]) - float(sharp[8, 7]))
    edge_blurred = abs(float(blurred[8, 8]) - float(blurred[8, 7]))
    assert edge_sharp > edge_blurred + 10.0


def test_ad_hand_step_impulse():
    # kappa huge: conduction is exactly 1 and one delta=0.25 step moves a
    # quarter of the center value to each 4-neighbor.
    px = np.zeros((3, 3), dtype=np.float32)
    px[1, 1] = 1.0
    p = AdParams(iterations=1, delta=0.25, kappa=1e9)
    out = anisotropic_diffusion(Image(px), p).pixels
    expected = np.array(
        [[0.0, 0.25, 0.0], [0.25, 0.0, 0.25], [0.0, 0.25, 0.0]], dtype=np.float32
    )
    assert np.array_equal(out, expected)


def test_ad_linear_limit_matches_laplacian_step():
    # Same huge-kappa limit on random data: one step equals
    # I + delta * laplacian(I) with zero-flux boundaries.
    img = random_image(3, 16, 16)
    x = img.pixels.astype(np.float64)
    p = AdParams(iterations=1, delta=0.2, kappa=1e9)
    got = anisotropic_diffusion(img, p).pixels.astype(np.float64)
    padded = np.pad(x, 1, mode="edge")
    lap = (
        padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
        - 4.0 * x
    )
    oracle = x + 0.2 * lap
    assert np.max(np.abs(got - oracle)) < 1e-3


@pytest.mark.parametrize("conduction", ["exponential", "reciprocal"])
def test_ad_conserves_image_sum(conduction):
    img = random_image(11, 64, 64)
    p = AdParams(iterations=40, delta=0.2, kappa=30.0, conduction=conduction)
    out = anisotropic_diffusion(img, p)
    s0 = float(np.sum(img.pixels.astype(np.float64)))
    s1 = float(np.sum(out.pixels.astype(np.float64)))
    assert abs(s1 - s0) <= 1e-6 * abs(s0)


def test_ad_maximum_principle():
    img = random_image(13, 32, 32)
    out = anisotropic_diffusion(img, AdParams(iterations=25, delta=0.25, kappa=40.0))
    eps = 1e-3
    assert out.pixels.min() >= img.pixels.min() - eps
    assert out.pixels.max() <= img.pixels.max() + eps


def test_ad_zero_iterations_is_identity():
    img = random_image(1, 8, 8)
    out = anisotropic_diffusion(img, AdParams(iterations=0))
    assert np.array_equal(out.pixels, img.pixels)


def test_ad_params_validation():
    with pytest.raises(InvalidParams):
        AdParams(delta=0.3)
    with pytest.raises(InvalidParams):
        AdParams(delta=0.0)
    with pytest.raises(InvalidParams):
        AdParams(iterations=-1)
    with pytest.raises(InvalidParams):
        AdParams(kappa=0.0)
    with pytest.raises(InvalidParams):
        AdParams(conduction="linear")


def test_estimate_noise_sigma_on_pure_noise():
    from ctnoise.phantom import gaussian_field

    noise = gaussian_field(21, 256 * 256).reshape(256, 256) * 10.0
    sigma = estimate_noise_sigma(noise)
    assert sigma == pytest.approx(10.0, rel=0.1)


def test_estimate_noise_sigma_robust_to_ramp():
    from ctnoise.phantom import gaussian_field

    noise = gaussian_field(22, 128 * 128).reshape(128, 128) * 10.0
    ramp = np.broadcast_to(np.linspace(0.0, 100.0, 128), (128, 128))
    sigma = estimate_noise_sigma(noise + ramp)
    assert sigma == pytest.approx(10.0, rel=0.15)


def test_pwnlm_too_small_image():
    with pytest.raises(ImageTooSmall):
        pwnlm(random_image(0, 6, 6))


def test_pwnlm_constant_image_unchanged():
    img = Image(np.full((16, 16), 40.0, dtype=np.float32))
    out = pwnlm(img)
    assert np.allclose(out.pixels, 40.0, atol=1e-4)


def test_pwnlm_reduces_noise_deterministically():
    from ctnoise.phantom import gaussian_field

    px = (40.0 + gaussian_field(31, 48 * 48).reshape(48, 48) * 10.0).astype(np.float32)
    img = Image(px)
    out1 = pwnlm(img)
    out2 = pwnlm(img)
    assert np.array_equal(out1.pixels, out2.pixels)
    assert float(np.var(out1.pixels)) < 0.5 * float(np.var(px))


def test_param_validation_mf_bf():
    with pytest.raises(InvalidParams):
        MatchedFilterParams(half_width=-1)
    with pytest.raises(InvalidParams):
        MatchedFilterParams(sigma_t=0.0)
    with pytest.raises(InvalidParams):
        BilateralParams(half_width=0)
    with pytest.raises(InvalidParams):
        BilateralParams(sigma_r=-5.0)
