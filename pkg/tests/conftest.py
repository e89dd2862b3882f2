import numpy as np
import pytest

from ctnoise.image_core import Image, ImageMeta, Roi
from ctnoise.phantom import PhantomParams, generate_pair


def make_pair(
    seed=42,
    size=96,
    roi=None,
    signal="uniform",
    ratio=9.6,
    sigma_high=10.0,
):
    """Small deterministic phantom pair for unit tests."""
    if roi is None:
        roi = Roi(16, 16, 64, 64)
    params = PhantomParams(
        width=size,
        height=size,
        sigma_high=sigma_high,
        ratio=ratio,
        roi=roi,
        signal=signal,
        seed=seed,
    )
    return generate_pair(params)


def random_image(seed, height, width, lo=-200.0, hi=400.0, meta=None):
    rng = np.random.default_rng(seed)
    px = rng.uniform(lo, hi, size=(height, width)).astype(np.float32)
    return Image(px, meta or ImageMeta())


@pytest.fixture
def uniform_pair():
    return make_pair()
