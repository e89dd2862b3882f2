import math

import numpy as np
import pytest

from ctnoise.dtcwt import (
    G0_LEVEL1,
    G1_LEVEL1,
    H0_LEVEL1,
    H1_LEVEL1,
    QSHIFT_14,
    CoefficientPyramid,
    dtcwt_forward,
    dtcwt_inverse,
)
from ctnoise.errors import MalformedPyramid
from ctnoise.image_core import Image

from conftest import random_image


def _rel_rms(a, b):
    num = math.sqrt(float(np.mean((a - b) ** 2)))
    den = math.sqrt(float(np.mean(b**2))) or 1.0
    return num / den


def test_level1_perfect_reconstruction_identity():
    # Full-rate two-channel identity: conv(h0,g0) + conv(h1,g1) = 2*delta.
    total = np.convolve(H0_LEVEL1, G0_LEVEL1) + np.convolve(H1_LEVEL1, G1_LEVEL1)
    delta = np.zeros_like(total)
    delta[(total.size - 1) // 2] = 2.0
    assert np.max(np.abs(total - delta)) < 1e-14


def test_level1_lowpass_dc_gain():
    assert float(np.sum(H0_LEVEL1)) == pytest.approx(1.0, abs=1e-15)
    # Highpass filters annihilate constants.
    assert abs(float(np.sum(H1_LEVEL1))) < 1e-14
    assert abs(float(np.sum(G1_LEVEL1))) < 1e-14


def test_qshift_orthonormal_and_dc_free():
    h = QSHIFT_14
    # Shift-by-2 orthonormality of the lowpass.
    for k in range(1, h.size // 2):
        assert abs(float(np.dot(h[2 * k :], h[: h.size - 2 * k]))) < 1e-12
    assert float(np.dot(h, h)) == pytest.approx(1.0, abs=1e-12)
    # Zero at z = -1: the quadrature-mirror highpass kills constants.
    assert abs(float(np.sum(h * (-1.0) ** np.arange(h.size)))) < 1e-12
    assert float(np.sum(h)) == pytest.approx(math.sqrt(2.0), abs=1e-12)


@pytest.mark.parametrize(
    "shape", [(32, 32), (64, 64), (96, 160), (50, 70), (512, 512)]
)
def test_perfect_reconstruction(shape):
    img = random_image(17, *shape)
    back = dtcwt_inverse(dtcwt_forward(img))
    assert back.pixels.shape == img.pixels.shape
    assert _rel_rms(back.pixels.astype(np.float64), img.pixels.astype(np.float64)) < 1e-8


def test_constant_image_has_no_detail_energy():
    img = Image(np.full((64, 64), 500.0, dtype=np.float32))
    pyr = dtcwt_forward(img)
    for level in pyr.details:
        assert float(np.max(np.abs(level))) < 1e-9 * 500.0


def test_pyramid_structure():
    img = random_image(19, 64, 64)
    pyr = dtcwt_forward(img)
    assert len(pyr.details) == 3
    assert pyr.details[0].shape == (32, 32, 6)
    assert pyr.details[1].shape == (16, 16, 6)
    assert pyr.details[2].shape == (8, 8, 6)
    assert np.iscomplexobj(pyr.details[0])
    assert not np.iscomplexobj(pyr.lowpass)


def test_forward_is_linear():
    a = random_image(1, 32, 32)
    b = random_image(2, 32, 32)
    summed = Image(a.pixels + b.pixels)
    pa, pb, ps = dtcwt_forward(a), dtcwt_forward(b), dtcwt_forward(summed)
    # The summed image is rounded to float32 on construction, so compare
    # relative to the coefficient scale rather than absolutely.
    for da, db, ds in zip(pa.details, pb.details, ps.details):
        scale = float(np.max(np.abs(ds))) or 1.0
        assert np.max(np.abs(ds - (da + db))) < 1e-6 * scale
    scale = float(np.max(np.abs(ps.lowpass))) or 1.0
    assert np.max(np.abs(ps.lowpass - (pa.lowpass + pb.lowpass))) < 1e-6 * scale


def test_malformed_pyramid_rejected():
    img = random_image(23, 32, 32)
    pyr = dtcwt_forward(img)
    bad = CoefficientPyramid(
        details=(pyr.details[0][:-1], pyr.details[1], pyr.details[2]),
        lowpass=pyr.lowpass,
        shape=pyr.shape,
        padded_shape=pyr.padded_shape,
    )
    with pytest.raises(MalformedPyramid):
        dtcwt_inverse(bad)
