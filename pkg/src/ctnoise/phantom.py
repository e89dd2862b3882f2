"""Synthetic ground-truth scan pairs with known injected noise.

Stands in for repeat patient acquisitions: a shared deterministic clean
signal plus independently drawn Gaussian noise fields whose variance
ratio is known exactly. The generator is bitwise reproducible across
platforms: it uses SplitMix64 for the uniform stream and Box-Muller on
pairs of 53-bit uniforms for the Gaussian variates, so no library RNG
is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, Mismatch
from .image_core import Image, ImageMeta, Roi

# Stream separation constant: the low-dose stream seeds with seed XOR this
# (the SplitMix64 golden-ratio increment), so high/low noise are independent.
STREAM_SPLIT = 0x9E3779B97F4A7C15

_MASK64 = (1 << 64) - 1


def _splitmix64(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of SplitMix64 seeded with `seed`, as uint64."""
    state = np.uint64(seed & _MASK64)
    out = np.empty(count, dtype=np.uint64)
    inc = np.uint64(STREAM_SPLIT)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    # State advance is a plain counter, so the whole stream vectorizes.
    with np.errstate(over="ignore"):
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = state + inc * idx
        z = (z ^ (z >> np.uint64(30))) * m1
        z = (z ^ (z >> np.uint64(27))) * m2
        out = z ^ (z >> np.uint64(31))
    return out


def gaussian_field(seed: int, count: int) -> np.ndarray:
    """`count` standard normal variates, Box-Muller on 53-bit uniforms."""
    pairs = (count + 1) // 2
    raw = _splitmix64(seed, 2 * pairs)
    # 53-bit uniforms in (0, 1]: shift to the double mantissa width and
    # offset by one ulp so log() never sees zero.
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    z = np.empty(2 * pairs, dtype=np.float64)
    z[0::2] = r * np.cos(angle)
    z[1::2] = r * np.sin(angle)
    return z[:count]


@dataclass(frozen=True)
class PhantomParams:
    width: int
    height: int
    sigma_high: float  # noise std of the high-technique image, HU
    ratio: float  # target variance ratio R, sigma_low^2 = R * sigma_high^2
    roi: Roi
    signal: str = "uniform"  # "uniform" | "ramp:<amplitude>" | "chest"
    texture_kernel: np.ndarray | None = None  # optional small smoothing kernel
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParams("phantom dimensions must be positive")
        if not (math.isfinite(self.sigma_high) and self.sigma_high > 0):
            raise InvalidParams("sigma_high must be finite and positive")
        if not (math.isfinite(self.ratio) and self.ratio > 0):
            raise InvalidParams("ratio must be finite and positive")
        if (
            self.roi.x + self.roi.w > self.width
            or self.roi.y + self.roi.h > self.height
        ):
            raise InvalidParams("ROI must lie inside the phantom")
        kind = self.signal.split(":")[0]
        if kind not in ("uniform", "ramp", "chest"):
            raise InvalidParams(f"unknown signal kind {self.signal!r}")


@dataclass(frozen=True)
class ScanPair:
    """Registered high/low-technique images over the same slice."""

    high: Image
    low: Image
    roi: Roi
    rthe_override: float | None = None

    def __post_init__(self):
        if self.high.pixels.shape != self.low.pixels.shape:
            raise InvalidParams("high and low images must share dimensions")
        self.roi.validate(self.high)
        if self.rthe_override is None:
            for img in (self.high, self.low):
                if img.meta.mas is None or img.meta.mas <= 0:
                    raise InvalidParams(
                        "pair needs positive mas metadata or an rthe override"
                    )
        elif self.rthe_override <= 0:
            raise InvalidParams("rthe_override must be positive")


@dataclass(frozen=True)
class GroundTruth:
    clean: Image
    noise_high: Image
    noise_low: Image
    true_ratio: float


def _uniform_signal(p: PhantomParams) -> np.ndarray:
    # Soft-tissue-like flat background.
    return np.full((p.height, p.width), 40.0, dtype=np.float64)


def _chest_signal(p: PhantomParams) -> np.ndarray:
    """Fixed analytic chest-like composition.

    Two ellipses (body at 50 HU over air at -800 HU inside the outer one),
    a uniform 40 HU patch hosting the analysis ROI, and a linear 50 HU
    texture ramp across the patch.
    """
    yy, xx = np.mgrid[0 : p.height, 0 : p.width].astype(np.float64)
    cx, cy = (p.width - 1) / 2.0, (p.height - 1) / 2.0
    sig = np.full((p.height, p.width), -1000.0)
    body = ((xx - cx) / (0.45 * p.width)) ** 2 + ((yy - cy) / (0.40 * p.height)) ** 2
    sig[body <= 1.0] = 50.0
    lung = ((xx - cx) / (0.28 * p.width)) ** 2 + ((yy - cy * 0.8) / (0.22 * p.height)) ** 2
    sig[lung <= 1.0] = -800.0
    # Para-spinal-like uniform patch carrying the ROI, with a gentle ramp.
    px, py = p.roi.x, p.roi.y
    pw = min(200, p.width - px)
    ph = min(200, p.height - py)
    patch = np.broadcast_to(np.linspace(40.0, 90.0, pw), (ph, pw))
    sig[py : py + ph, px : px + pw] = patch
    return sig


def _clean_signal(p: PhantomParams) -> np.ndarray:
    kind, _, arg = p.signal.partition(":")
    if kind == "uniform":
        return _uniform_signal(p)
    if kind == "ramp":
        amplitude = float(arg) if arg else 50.0
        base = _uniform_signal(p)
        ramp = np.linspace(0.0, amplitude, p.width)
        return base + np.broadcast_to(ramp, (p.height, p.width))
    return _chest_signal(p)


def _shaped_noise(p: PhantomParams, seed: int, sigma: float) -> np.ndarray:
    """White (or optionally textured) Gaussian noise with the target ROI std."""
    field = gaussian_field(seed, p.width * p.height).reshape(p.height, p.width)
    field = field * sigma
    if p.texture_kernel is not None:
        from scipy.ndimage import convolve

        kernel = np.asarray(p.texture_kernel, dtype=np.float64)
        kernel = kernel / kernel.sum()
        field = convolve(field, kernel, mode="nearest")
        # Convolution shrinks the variance; rescale on the ROI so the
        # ground-truth ratio still holds exactly where it is measured.
        patch = field[p.roi.y : p.roi.y + p.roi.h, p.roi.x : p.roi.x + p.roi.w]
        actual = float(np.var(patch, ddof=1))
        if actual > 0:
            field = field * (sigma / math.sqrt(actual))
    return field


def generate_pair(p: PhantomParams) -> tuple[ScanPair, GroundTruth]:
    """Deterministic phantom pair plus its exact ground truth."""
    clean64 = _clean_signal(p)
    sigma_low = p.sigma_high * math.sqrt(p.ratio)
    noise_high64 = _shaped_noise(p, p.seed, p.sigma_high)
    noise_low64 = _shaped_noise(p, p.seed ^ STREAM_SPLIT, sigma_low)

    clean = Image(clean64.astype(np.float32))
    high = Image(
        np.float32(clean.pixels + noise_high64.astype(np.float32)),
        ImageMeta(mas=float(p.ratio), slice_id=f"phantom-{p.seed}-high"),
    )
    low = Image(
        np.float32(clean.pixels + noise_low64.astype(np.float32)),
        ImageMeta(mas=1.0, slice_id=f"phantom-{p.seed}-low"),
    )
    # Store the noise fields as the float32 differences actually present in
    # the images, so noisy = clean + noise holds bitwise on the stored grids.
    noise_high = Image(high.pixels - clean.pixels)
    noise_low = Image(low.pixels - clean.pixels)
    pair = ScanPair(high=high, low=low, roi=p.roi)
    gt = GroundTruth(
        clean=clean,
        noise_high=noise_high,
        noise_low=noise_low,
        true_ratio=p.ratio,
    )
    return pair, gt


def oracle_residual(pair: ScanPair, gt: GroundTruth) -> tuple[Image, Image]:
    """Ideal-filter residuals: the exact injected noise fields."""
    if gt.clean.pixels.shape != pair.high.pixels.shape:
        raise Mismatch("ground truth does not match the pair dimensions")
    res_high = pair.high.pixels - gt.clean.pixels
    res_low = pair.low.pixels - gt.clean.pixels
    if not (
        np.array_equal(res_high, gt.noise_high.pixels)
        and np.array_equal(res_low, gt.noise_low.pixels)
    ):
        raise Mismatch("ground truth was not generated from this pair")
    return Image(res_high, pair.high.meta), Image(res_low, pair.low.meta)
