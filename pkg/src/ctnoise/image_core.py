"""Image container, ROI statistics and bit-exact file I/O.

Images are 2-D scalar fields in Hounsfield units. Pixels are stored as
32-bit floats; all arithmetic on them is done in 64-bit and rounded back
to 32-bit only when an image is constructed or saved.

The on-disk container is a pair of files, ``<name>.json`` + ``<name>.raw``:
the sidecar holds dimensions and acquisition metadata, the payload holds
the raw little-endian binary32 pixels in row-major order with no header.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    IoFailure,
    MissingFile,
    NonFinitePixel,
    RoiOutOfBounds,
    SidecarMismatch,
    UnsupportedMaxval,
)

# CT convention for PGM import: stored value 0 maps to -1024 HU (air).
PGM_HU_OFFSET = 1024


@dataclass(frozen=True)
class ImageMeta:
    mas: float | None = None  # tube current time product, mAs
    slice_id: str | None = None


@dataclass(frozen=True)
class Image:
    """Immutable 2-D image in Hounsfield units."""

    pixels: np.ndarray  # float32, shape (height, width)
    meta: ImageMeta = field(default_factory=ImageMeta)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)):
            raise NonFinitePixel("image contains NaN or Inf pixels")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def with_pixels(self, pixels: np.ndarray) -> "Image":
        """New image with the same metadata and freshly rounded pixels."""
        return Image(np.asarray(pixels, dtype=np.float32), self.meta)

    def as_float64(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


@dataclass(frozen=True)
class Roi:
    """Rectangular region of interest, top-left corner plus extents."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1 or self.w * self.h < 2:
            raise ValueError("ROI must contain at least 2 pixels")
        if self.x < 0 or self.y < 0:
            raise ValueError("ROI origin must be non-negative")

    def validate(self, img: Image) -> None:
        if self.x + self.w > img.width or self.y + self.h > img.height:
            raise RoiOutOfBounds(
                f"ROI {self} exceeds image bounds {img.width}x{img.height}"
            )

    def extract(self, img: Image) -> np.ndarray:
        self.validate(img)
        return img.pixels[self.y : self.y + self.h, self.x : self.x + self.w]


def save_image(img: Image, path: str) -> None:
    """Write ``<path>.json`` + ``<path>.raw``; inverse of load_image, bitwise."""
    sidecar = {
        "width": img.width,
        "height": img.height,
        "dtype": "f32le",
        "order": "row-major",
        "units": "HU",
        "mas": img.meta.mas,
        "slice_id": img.meta.slice_id,
    }
    payload = np.ascontiguousarray(img.pixels, dtype="<f4").tobytes()
    try:
        with open(path + ".json", "w", encoding="utf-8") as f:
            json.dump(sidecar, f)
            f.write("\n")
        with open(path + ".raw", "wb") as f:
            f.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write image container at {path}: {exc}") from exc


def load_image(path: str) -> Image:
    """Read an image container written by save_image."""
    json_path, raw_path = path + ".json", path + ".raw"
    if not os.path.exists(json_path) or not os.path.exists(raw_path):
        raise MissingFile(f"missing {json_path} or {raw_path}")
    try:
        with open(json_path, "r", encoding="utf-8") as f:
            sidecar = json.load(f)
        with open(raw_path, "rb") as f:
            payload = f.read()
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"cannot read image container at {path}: {exc}") from exc
    try:
        width, height = int(sidecar["width"]), int(sidecar["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SidecarMismatch(f"malformed sidecar {json_path}") from exc
    expected = width * height * 4
    if len(payload) != expected:
        raise SidecarMismatch(
            f"{raw_path}: sidecar declares {expected} bytes, payload holds {len(payload)}"
        )
    px = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    if not np.all(np.isfinite(px)):
        raise NonFinitePixel(f"{raw_path} contains non-finite pixels")
    mas = sidecar.get("mas")
    meta = ImageMeta(
        mas=float(mas) if mas is not None else None,
        slice_id=sidecar.get("slice_id"),
    )
    return Image(px.copy(), meta)


def import_pgm(path: str) -> Image:
    """Import a binary 16-bit PGM (magic P5, maxval 65535) as HU.

    HU = raw value - 1024, the usual CT offset convention.
    """
    if not os.path.exists(path):
        raise MissingFile(path)
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    # Parse the whitespace-separated header tokens: magic, width, height, maxval.
    tokens, pos = [], 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval

    if len(tokens) < 4 or tokens[0] != b"P5":
        raise BadMagic(f"{path}: not a binary PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 65535:
        raise UnsupportedMaxval(f"{path}: maxval {maxval}, expected 65535")
    samples = np.frombuffer(data[pos : pos + width * height * 2], dtype=">u2")
    if samples.size != width * height:
        raise SidecarMismatch(f"{path}: truncated pixel payload")
    hu = samples.astype(np.float64).reshape(height, width) - PGM_HU_OFFSET
    return Image(hu.astype(np.float32))


def roi_variance(img: Image, roi: Roi) -> float:
    """Unbiased sample variance (divisor N-1) over the ROI, in HU^2.

    Two-pass accumulation in float64: subtracting the mean first avoids
    catastrophic cancellation at HU magnitudes around 10^3.
    """
    values = roi.extract(img).astype(np.float64)
    mean = np.mean(values)
    dev = values - mean
    return float(np.sum(dev * dev) / (values.size - 1))


def subtract(a: Image, b: Image) -> Image:
    """Pixelwise a - b; metadata copied from a."""
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(
            f"{a.width}x{a.height} vs {b.width}x{b.height}"
        )
    return Image(a.pixels - b.pixels, a.meta)
