"""Blind CT noise estimation from filtering residuals.

Estimate image noise as the residual between an image and a filtered
version of it, score the estimate against the dose-derived theoretical
noise-variance ratio, and sweep filter parameters for the configuration
with the best blind-estimation behavior.
"""

from .errors import CtNoiseError
from .image_core import Image, ImageMeta, Roi, import_pgm, load_image, roi_variance, save_image, subtract
from .noise_metrics import (
    DEFAULT_BETAS,
    FILTER_KINDS,
    FilterSpec,
    NoiseEstimate,
    baseline_estimate,
    compute_r_the,
    estimate,
    mean_abs_error,
    r_blind,
    theta,
)
from .phantom import GroundTruth, PhantomParams, ScanPair, generate_pair, oracle_residual
from .spatial_filters import (
    AdParams,
    BilateralParams,
    MatchedFilterParams,
    anisotropic_diffusion,
    bilateral,
    matched_filter,
    pwnlm,
)
from .spectral_filters import CdwtParams, FdeParams, cdwt_denoise, fde_wiener
from .sweep import FilterGrid, SweepRecord, enumerate_grid, parse_params, run_sweep, select_optimal

__version__ = "0.1.0"

__all__ = [
    "AdParams",
    "BilateralParams",
    "CdwtParams",
    "CtNoiseError",
    "DEFAULT_BETAS",
    "FILTER_KINDS",
    "FdeParams",
    "FilterGrid",
    "FilterSpec",
    "GroundTruth",
    "Image",
    "ImageMeta",
    "MatchedFilterParams",
    "NoiseEstimate",
    "PhantomParams",
    "Roi",
    "ScanPair",
    "SweepRecord",
    "anisotropic_diffusion",
    "baseline_estimate",
    "bilateral",
    "cdwt_denoise",
    "compute_r_the",
    "enumerate_grid",
    "estimate",
    "fde_wiener",
    "generate_pair",
    "import_pgm",
    "load_image",
    "matched_filter",
    "mean_abs_error",
    "oracle_residual",
    "parse_params",
    "pwnlm",
    "r_blind",
    "roi_variance",
    "run_sweep",
    "save_image",
    "select_optimal",
    "subtract",
    "theta",
]
