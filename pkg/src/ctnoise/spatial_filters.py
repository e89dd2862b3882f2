"""Spatial-domain denoising filters.

Four filters operating directly on the pixel grid: Gaussian-template
matched filtering, bilateral filtering, anisotropic diffusion and a
parameter-free patch-wise non-local means. All are pure functions from
Image to Image; window filters use replicate-edge padding and the
diffusion uses zero-flux boundaries, so residual images carry no
synthetic border edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmall, InvalidParams
from .image_core import Image

# Patch-wise NLM is deliberately parameter-free; these are its fixed
# internals (7x7 patches, 21x21 search window, filtering strength 0.4
# times the estimated noise sigma).
NLM_PATCH_HALF = 3
NLM_SEARCH_HALF = 10
NLM_H_FACTOR = 0.4


@dataclass(frozen=True)
class MatchedFilterParams:
    half_width: int = 2  # kernel side = 2*half_width + 1
    sigma_t: float = 1.0  # Gaussian template std, pixels

    def __post_init__(self):
        if self.half_width < 0:
            raise InvalidParams("half_width must be >= 0")
        if not (math.isfinite(self.sigma_t) and self.sigma_t > 0):
            raise InvalidParams("sigma_t must be finite and positive")


@dataclass(frozen=True)
class BilateralParams:
    half_width: int = 2
    sigma_sx: float = 1.0  # spatial std, pixels
    sigma_sy: float = 1.0
    sigma_r: float = 50.0  # range std, HU

    def __post_init__(self):
        if self.half_width < 1:
            raise InvalidParams("half_width must be >= 1")
        for name in ("sigma_sx", "sigma_sy", "sigma_r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParams(f"{name} must be finite and positive")


@dataclass(frozen=True)
class AdParams:
    iterations: int = 20
    delta: float = 0.2  # time step; <= 0.25 for explicit 4-neighbor stability
    kappa: float = 54.0  # gradient threshold, HU
    conduction: str = "exponential"  # or "reciprocal"

    def __post_init__(self):
        if self.iterations < 0:
            raise InvalidParams("iterations must be >= 0")
        if not (0.0 < self.delta <= 0.25):
            raise InvalidParams("delta must lie in (0, 0.25]")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise InvalidParams("kappa must be finite and positive")
        if self.conduction not in ("exponential", "reciprocal"):
            raise InvalidParams(f"unknown conduction {self.conduction!r}")


def gaussian_template(half_width: int, sigma: float) -> np.ndarray:
    """Unit-sum 2-D Gaussian on a (2*half_width+1)^2 grid."""
    if half_width == 0:
        return np.ones((1, 1))
    d = np.arange(-half_width, half_width + 1, dtype=np.float64)
    g1 = np.exp(-(d * d) / (2.0 * sigma * sigma))
    kernel = np.outer(g1, g1)
    return kernel / kernel.sum()


def matched_filter(img: Image, p: MatchedFilterParams) -> Image:
    """Correlate with a unit-sum Gaussian template (replicate edges)."""
    kernel = gaussian_template(p.half_width, p.sigma_t)
    out = ndimage.correlate(img.as_float64(), kernel, mode="nearest")
    return img.with_pixels(out)


def bilateral(img: Image, p: BilateralParams) -> Image:
    """Edge-preserving smoothing with separate spatial and range kernels.

    Each output pixel is the weight-normalized window sum with weight
    exp(-dx^2/(2*sx^2) - dy^2/(2*sy^2)) * exp(-(I(q)-I(p))^2/(2*sr^2)).
    Implemented as a loop over window offsets, each offset handled as a
    whole-image shift, which keeps the cost at O(window * pixels).
    """
    hw = p.half_width
    x = np.pad(img.as_float64(), hw, mode="edge")
    center = img.as_float64()
    inv_2sx2 = 1.0 / (2.0 * p.sigma_sx * p.sigma_sx)
    inv_2sy2 = 1.0 / (2.0 * p.sigma_sy * p.sigma_sy)
    inv_2sr2 = 1.0 / (2.0 * p.sigma_r * p.sigma_r)
    h, w = center.shape
    acc = np.zeros_like(center)
    norm = np.zeros_like(center)
    for dy in range(-hw, hw + 1):
        for dx in range(-hw, hw + 1):
            shifted = x[hw + dy : hw + dy + h, hw + dx : hw + dx + w]
            spatial = math.exp(-(dx * dx) * inv_2sx2 - (dy * dy) * inv_2sy2)
            diff = shifted - center
            weight = spatial * np.exp(-(diff * diff) * inv_2sr2)
            acc += weight * shifted
            norm += weight
    return img.with_pixels(acc / norm)


def _conduction(grad: np.ndarray, kappa: float, kind: str) -> np.ndarray:
    t = grad / kappa
    if kind == "exponential":
        return np.exp(-(t * t))
    return 1.0 / (1.0 + t * t)


def anisotropic_diffusion(img: Image, p: AdParams) -> Image:
    """Explicit 4-neighbor nonlinear diffusion with zero-flux boundaries.

    Update per iteration: I += delta * sum_d g(grad_d; kappa) * grad_d
    over the N/E/S/W one-sided differences. Neumann boundaries make each
    step conservative: the image sum is unchanged up to roundoff.
    """
    x = img.as_float64()
    for _ in range(p.iterations):
        # One-sided differences with the edge row/column repeated, so the
        # boundary flux is exactly zero.
        grad_n = np.empty_like(x)
        grad_n[1:, :] = x[:-1, :] - x[1:, :]
        grad_n[0, :] = 0.0
        grad_s = np.empty_like(x)
        grad_s[:-1, :] = x[1:, :] - x[:-1, :]
        grad_s[-1, :] = 0.0
        grad_w = np.empty_like(x)
        grad_w[:, 1:] = x[:, :-1] - x[:, 1:]
        grad_w[:, 0] = 0.0
        grad_e = np.empty_like(x)
        grad_e[:, :-1] = x[:, 1:] - x[:, :-1]
        grad_e[:, -1] = 0.0
        flux = (
            _conduction(grad_n, p.kappa, p.conduction) * grad_n
            + _conduction(grad_s, p.kappa, p.conduction) * grad_s
            + _conduction(grad_w, p.kappa, p.conduction) * grad_w
            + _conduction(grad_e, p.kappa, p.conduction) * grad_e
        )
        x = x + p.delta * flux
    return img.with_pixels(x)


def estimate_noise_sigma(pixels: np.ndarray) -> float:
    """Immerkaer's fast noise estimate from the 3x3 Laplacian response."""
    lap = np.array([[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]])
    response = ndimage.convolve(pixels, lap, mode="nearest")
    h, w = pixels.shape
    return float(
        math.sqrt(math.pi / 2.0)
        * np.sum(np.abs(response))
        / (6.0 * (w - 2) * (h - 2))
    )


def pwnlm(img: Image) -> Image:
    """Patch-wise non-local means with fixed internals.

    Patch distance is the mean squared difference over 7x7 patches inside
    a 21x21 search window; weights follow the noise-compensated kernel
    w = exp(-max(d2 - 2*sigma^2, 0) / (h_factor*sigma)^2) with sigma
    estimated from the image itself. The self-weight is replaced by the
    maximum neighbor weight to avoid over-weighting the noisy center.
    """
    if min(img.width, img.height) < 2 * NLM_PATCH_HALF + 1:
        raise ImageTooSmall(
            f"pwnlm needs at least {2 * NLM_PATCH_HALF + 1} pixels per side"
        )
    x = img.as_float64()
    sigma = estimate_noise_sigma(x)
    if sigma <= 0.0:
        return img.with_pixels(x)
    h2 = (NLM_H_FACTOR * sigma) ** 2
    two_sigma2 = 2.0 * sigma * sigma

    pad = NLM_SEARCH_HALF
    xp = np.pad(x, pad, mode="edge")
    hgt, wid = x.shape
    patch_size = 2 * NLM_PATCH_HALF + 1

    acc = np.zeros_like(x)
    norm = np.zeros_like(x)
    max_weight = np.zeros_like(x)
    for dy in range(-pad, pad + 1):
        for dx in range(-pad, pad + 1):
            if dy == 0 and dx == 0:
                continue
            shifted = xp[pad + dy : pad + dy + hgt, pad + dx : pad + dx + wid]
            diff2 = (shifted - x) ** 2
            # Mean over the patch = box filter of the squared differences.
            d2 = ndimage.uniform_filter(diff2, size=patch_size, mode="nearest")
            weight = np.exp(-np.maximum(d2 - two_sigma2, 0.0) / h2)
            acc += weight * shifted
            norm += weight
            np.maximum(max_weight, weight, out=max_weight)
    acc += max_weight * x
    norm += max_weight
    return img.with_pixels(acc / norm)
