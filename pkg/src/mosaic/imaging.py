"""Raster types, grayscale conversion, perspective warping and frame I/O.

Internally every image is a float64 numpy array.  Gray images hold values in
``[0, 1]`` with shape ``(H, W)``; color images carry a trailing channel axis.
Only :class:`Frame` stores 8-bit data, and quantization happens when a frame
is materialized (``Frame.from_float`` / ``write_image``).
"""
from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import SingularHomography

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
_DET_EPS = 1e-12
_EDGE_EPS = 1e-9


@dataclass
class Frame:
    """An indexed 8-bit RGB raster."""

    index: int
    pixels: np.ndarray
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"frame pixels must be (H, W, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("frame must be at least 1x1")
        self.pixels = px.astype(np.uint8, copy=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        """Pixels as float64 in [0, 255]."""
        return self.pixels.astype(np.float64)

    @classmethod
    def from_float(cls, index: int, values: np.ndarray, source=None) -> "Frame":
        """Clamp to [0, 255], round, and wrap as a frame."""
        return cls(index, quantize(values), source)


def quantize(values: np.ndarray) -> np.ndarray:
    """Clamp real intensities in [0, 255] units and round to uint8."""
    return np.rint(np.clip(values, 0.0, 255.0)).astype(np.uint8)


def to_grayscale(f) -> np.ndarray:
    """Luma of a frame (or an (H, W, 3) array in [0, 255]) rescaled to [0, 1]."""
    rgb = f.pixels if isinstance(f, Frame) else np.asarray(f)
    gray = rgb.astype(np.float64) @ LUMA_WEIGHTS / 255.0
    return np.clip(gray, 0.0, 1.0)


def normalize_homography(h) -> np.ndarray:
    """Return ``h`` as a 3x3 float array scaled so that h[2, 2] == 1.

    Raises SingularHomography if the matrix is not invertible.
    """
    h = np.asarray(h, dtype=np.float64).reshape(3, 3)
    if not np.all(np.isfinite(h)):
        raise SingularHomography("homography has non-finite entries")
    if abs(h[2, 2]) > _DET_EPS:
        h = h / h[2, 2]
    if abs(np.linalg.det(h)) <= _DET_EPS:
        raise SingularHomography(f"homography is singular (det={np.linalg.det(h):.3g})")
    return h


def translation(tx: float, ty: float = 0.0) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def apply_homography(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Map an (N, 2) array of points through ``h``."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    hom = pts @ h[:, :2].T + h[:, 2]
    w = hom[:, 2:3]
    with np.errstate(divide="ignore", invalid="ignore"):
        return hom[:, :2] / w


def bilinear_sample(img: np.ndarray, sx: np.ndarray, sy: np.ndarray, fill: float = 0.0):
    """Sample ``img`` at real coordinates with bilinear interpolation.

    Returns ``(values, valid)``.  A sample is valid when every tap that carries
    non-zero weight lies inside the image, so integer coordinates on the last
    row/column are still valid.
    """
    h, w = img.shape[:2]
    valid = (
        np.isfinite(sx) & np.isfinite(sy)
        & (sx >= -_EDGE_EPS) & (sx <= w - 1 + _EDGE_EPS)
        & (sy >= -_EDGE_EPS) & (sy <= h - 1 + _EDGE_EPS)
    )
    sxc = np.clip(np.where(valid, sx, 0.0), 0.0, w - 1)
    syc = np.clip(np.where(valid, sy, 0.0), 0.0, h - 1)
    x0 = np.minimum(np.floor(sxc).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(syc).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sxc - x0
    fy = syc - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    mask = valid if img.ndim == 2 else valid[..., None]
    return np.where(mask, out, fill), valid


def warp_perspective(img, h, canvas: tuple[int, int], fill: float = 0.0):
    """Warp ``img`` onto a ``(width, height)`` canvas through homography ``h``.

    ``h`` maps source coordinates to canvas coordinates; each canvas pixel is
    pulled from ``h^-1 (x, y, 1)`` with bilinear interpolation.  Returns the
    warped float image and a boolean coverage mask.
    """
    if isinstance(img, Frame):
        img = img.as_float()
    img = np.asarray(img, dtype=np.float64)
    width, height = int(canvas[0]), int(canvas[1])
    if width < 1 or height < 1:
        raise ValueError("canvas dimensions must be >= 1")
    h = normalize_homography(h)
    hinv = np.linalg.inv(h)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    den = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / den
        sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / den
    bad = np.abs(den) < _DET_EPS
    sx[bad] = np.nan
    sy[bad] = np.nan
    return bilinear_sample(img, sx, sy, fill)


# -- file I/O -----------------------------------------------------------------

def read_image(path) -> np.ndarray:
    """Read a PNG/PPM (or anything Pillow decodes) as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def write_image(path, values) -> None:
    """Write an image; float arrays are taken to be in [0, 255] and quantized.

    The format follows the extension (``.png``, ``.ppm`` -> binary P6).
    """
    arr = np.asarray(values)
    if arr.dtype != np.uint8:
        arr = quantize(arr)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(arr).save(path)


def list_frame_files(pattern: str) -> list[str]:
    """Resolve a directory or glob to a lexicographically sorted file list."""
    if os.path.isdir(pattern):
        candidates = [
            os.path.join(pattern, name)
            for name in os.listdir(pattern)
            if name.lower().endswith((".png", ".ppm"))
        ]
    else:
        candidates = glob.glob(pattern)
    return sorted(p for p in candidates if os.path.isfile(p))


def load_frames(pattern: str) -> list[Frame]:
    return [Frame(i, read_image(p), source=p) for i, p in enumerate(list_frame_files(pattern))]
