"""Frequency-domain denoising filters.

Two filters: complex-wavelet shrinkage (hard thresholding of dual-tree
detail coefficients by magnitude) and a spectral-subtraction Wiener
filter that attenuates Fourier bins toward the estimated noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dtcwt import CoefficientPyramid, dtcwt_forward, dtcwt_inverse
from .errors import InvalidParams
from .image_core import Image

# Fixed HU window for intensity normalization: u = (HU + 1024) / 4096 maps
# [-1024, 3072] HU onto [0, 1]. The Wiener noise-variance parameter and the
# mean-absolute-error metric are both expressed on this scale.
HU_WINDOW_OFFSET = 1024.0
HU_WINDOW_SPAN = 4096.0


def normalize_hu(pixels: np.ndarray) -> np.ndarray:
    return (pixels + HU_WINDOW_OFFSET) / HU_WINDOW_SPAN


def denormalize_hu(u: np.ndarray) -> np.ndarray:
    return u * HU_WINDOW_SPAN - HU_WINDOW_OFFSET


@dataclass(frozen=True)
class CdwtParams:
    threshold: float = 150.0  # coefficient magnitude cut, HU

    def __post_init__(self):
        if not (math.isfinite(self.threshold) and self.threshold >= 0):
            raise InvalidParams("threshold must be finite and >= 0")


@dataclass(frozen=True)
class FdeParams:
    noise_variance: float = 1e-9  # sigma_n^2 on the normalized scale

    def __post_init__(self):
        if not (math.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise InvalidParams("noise_variance must be finite and >= 0")


def cdwt_denoise(img: Image, p: CdwtParams) -> Image:
    """Hard-threshold dual-tree detail coefficients by complex magnitude.

    Coefficients with |c| < threshold are zeroed; the lowpass is kept, so
    a constant image passes through unchanged and threshold 0 is the
    identity (up to transform roundoff).
    """
    pyr = dtcwt_forward(img)
    if p.threshold > 0.0:
        kept = tuple(
            np.where(np.abs(d) < p.threshold, 0.0, d) for d in pyr.details
        )
        pyr = CoefficientPyramid(
            details=kept,
            lowpass=pyr.lowpass,
            shape=pyr.shape,
            padded_shape=pyr.padded_shape,
        )
    return Image(dtcwt_inverse(pyr).pixels, img.meta)


def fde_wiener(img: Image, p: FdeParams) -> Image:
    """Spectral-subtraction Wiener denoising in the Fourier domain.

    Pipeline: normalize intensities to [0, 1], mirror-pad to twice the
    size (suppresses wrap-around ringing at the borders), take the 2-D
    DFT, apply the per-frequency gain G = Ps / (Ps + N) where N is the
    flat noise floor sigma_n^2 * Npix and Ps = max(|U|^2 - N, 0) is the
    subtracted signal periodogram, then invert, crop and de-normalize.
    """
    u = normalize_hu(img.as_float64())
    h, w = u.shape
    padded = np.pad(u, ((0, h), (0, w)), mode="symmetric")
    spectrum = np.fft.fft2(padded)
    noise_floor = p.noise_variance * padded.size
    if noise_floor > 0.0:
        power = np.abs(spectrum) ** 2
        signal = np.maximum(power - noise_floor, 0.0)
        gain = signal / (signal + noise_floor)
        spectrum = spectrum * gain
    restored = np.fft.ifft2(spectrum).real[:h, :w]
    return Image(denormalize_hu(restored).astype(np.float32), img.meta)
