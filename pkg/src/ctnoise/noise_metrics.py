"""Blind noise-ratio estimation metrics.

The estimation chain: filter both images of a registered high/low-dose
pair, take the residuals (original minus filtered) as blind noise
images, compare the ratio of their ROI variances against the dose-derived
theoretical ratio, and score the filter with a cost that also penalizes
signal removed into the residual:

    r_blind = sigma_low^2 / sigma_high^2
    theta   = (1 - r_blind / r_the)^2 + beta * M

where M is the mean absolute original-vs-filtered error on normalized
intensities, averaged over the two studies. The target is
r_blind / r_the = 1: noise variance scales inversely with the tube
current time product, so the low-dose scan should carry r_the times the
high-dose noise variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spatial_filters as sf
from . import spectral_filters as xf
from .errors import (
    DegenerateHighVariance,
    DimensionMismatch,
    InvalidParams,
    MissingDose,
)
from .image_core import Image, roi_variance, subtract
from .phantom import ScanPair
from .spectral_filters import normalize_hu

# Residual variances below this are treated as degenerate: identity-like
# filters give zero residual and the blind ratio would be 0/0.
DEGENERATE_VARIANCE = 1e-12

DEFAULT_BETAS = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)

FILTER_KINDS = ("mf", "bf", "ad", "cdwt", "fde", "pwnlm", "none")

_PARAM_TYPES = {
    "mf": sf.MatchedFilterParams,
    "bf": sf.BilateralParams,
    "ad": sf.AdParams,
    "cdwt": xf.CdwtParams,
    "fde": xf.FdeParams,
}


@dataclass(frozen=True)
class FilterSpec:
    """A filter kind plus its parameter record (none for pwnlm/none)."""

    kind: str
    params: object = None

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise InvalidParams(f"unknown filter kind {self.kind!r}")
        expected = _PARAM_TYPES.get(self.kind)
        if expected is None:
            if self.params is not None:
                raise InvalidParams(f"{self.kind} takes no parameters")
        elif not isinstance(self.params, expected):
            raise InvalidParams(
                f"{self.kind} expects {expected.__name__}, got {type(self.params).__name__}"
            )

    def apply(self, img: Image) -> Image:
        if self.kind == "mf":
            return sf.matched_filter(img, self.params)
        if self.kind == "bf":
            return sf.bilateral(img, self.params)
        if self.kind == "ad":
            return sf.anisotropic_diffusion(img, self.params)
        if self.kind == "cdwt":
            return xf.cdwt_denoise(img, self.params)
        if self.kind == "fde":
            return xf.fde_wiener(img, self.params)
        if self.kind == "pwnlm":
            return sf.pwnlm(img)
        return img  # kind == "none"

    def serialize(self) -> str:
        """Flat ``kind:key=value,...`` form used in sweep configs and CSV."""
        if self.params is None:
            return self.kind
        short = {"exponential": "exp", "reciprocal": "rec"}
        parts = []
        for name, value in vars(self.params).items():
            if isinstance(value, float):
                parts.append(f"{name}={value:.9g}")
            else:
                parts.append(f"{name}={short.get(value, value)}")
        return f"{self.kind}:" + ",".join(parts)


@dataclass(frozen=True)
class NoiseEstimate:
    sigma2_high: float  # residual ROI variance, high-dose study, HU^2
    sigma2_low: float
    r_blind: float
    r_the: float
    ratio_of_ratios: float  # r_blind / r_the
    m: float  # mean absolute error, normalized intensity units
    theta_by_beta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "sigma2_high": self.sigma2_high,
            "sigma2_low": self.sigma2_low,
            "r_blind": self.r_blind,
            "r_the": self.r_the,
            "ratio_of_ratios": self.ratio_of_ratios,
            "m": self.m,
            "theta_by_beta": {f"{b:.9g}": t for b, t in self.theta_by_beta.items()},
        }


def compute_r_the(pair: ScanPair) -> float:
    """Theoretical variance ratio from the tube current time products."""
    if pair.rthe_override is not None:
        return float(pair.rthe_override)
    mas_high = pair.high.meta.mas
    mas_low = pair.low.meta.mas
    if not mas_high or not mas_low or mas_high <= 0 or mas_low <= 0:
        raise MissingDose("pair carries no usable mas metadata or override")
    return mas_high / mas_low


def r_blind(sigma2_low: float, sigma2_high: float) -> float:
    """Blind variance ratio sigma_low^2 / sigma_high^2."""
    if sigma2_high <= DEGENERATE_VARIANCE:
        raise DegenerateHighVariance(
            f"high-dose residual variance {sigma2_high} is below {DEGENERATE_VARIANCE}"
        )
    return sigma2_low / sigma2_high


def mean_abs_error(pair: ScanPair, filtered_high: Image, filtered_low: Image) -> float:
    """Mean absolute filtering bias M, averaged over the two studies.

    Each term is the mean over all pixels of |original - filtered| on the
    normalized [0, 1] intensity scale, so beta is comparable across
    datasets regardless of the HU content.
    """
    for original, filtered in ((pair.high, filtered_high), (pair.low, filtered_low)):
        if original.pixels.shape != filtered.pixels.shape:
            raise DimensionMismatch("filtered image does not match the pair")
    mae_high = float(
        np.mean(
            np.abs(
                normalize_hu(pair.high.as_float64())
                - normalize_hu(filtered_high.as_float64())
            )
        )
    )
    mae_low = float(
        np.mean(
            np.abs(
                normalize_hu(pair.low.as_float64())
                - normalize_hu(filtered_low.as_float64())
            )
        )
    )
    return 0.5 * (mae_high + mae_low)


def theta(ratio_of_ratios: float, m: float, beta: float) -> float:
    """Cost balancing ratio accuracy against filtering bias."""
    dev = 1.0 - ratio_of_ratios
    return dev * dev + beta * m


def _assemble(
    pair: ScanPair,
    sigma2_high: float,
    sigma2_low: float,
    m: float,
    betas,
) -> NoiseEstimate:
    ratio = r_blind(sigma2_low, sigma2_high)
    rthe = compute_r_the(pair)
    rr = ratio / rthe
    return NoiseEstimate(
        sigma2_high=sigma2_high,
        sigma2_low=sigma2_low,
        r_blind=ratio,
        r_the=rthe,
        ratio_of_ratios=rr,
        m=m,
        theta_by_beta={float(b): theta(rr, m, float(b)) for b in betas},
    )


def estimate(pair: ScanPair, spec: FilterSpec, betas=DEFAULT_BETAS) -> NoiseEstimate:
    """Full blind estimate for one pair under one filter configuration.

    For ``spec.kind == "none"`` this is the pre-filter baseline: ROI
    variances come from the original images themselves and M is zero.
    """
    if spec.kind == "none":
        return baseline_estimate(pair, betas)
    filtered_high = spec.apply(pair.high)
    filtered_low = spec.apply(pair.low)
    residual_high = subtract(pair.high, filtered_high)
    residual_low = subtract(pair.low, filtered_low)
    sigma2_high = roi_variance(residual_high, pair.roi)
    sigma2_low = roi_variance(residual_low, pair.roi)
    m = mean_abs_error(pair, filtered_high, filtered_low)
    return _assemble(pair, sigma2_high, sigma2_low, m, betas)


def baseline_estimate(pair: ScanPair, betas=DEFAULT_BETAS) -> NoiseEstimate:
    """Pre-filter estimate: ROI variances of the originals, M = 0."""
    sigma2_high = roi_variance(pair.high, pair.roi)
    sigma2_low = roi_variance(pair.low, pair.roi)
    return _assemble(pair, sigma2_high, sigma2_low, 0.0, betas)
