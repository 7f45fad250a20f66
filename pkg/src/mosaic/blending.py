"""Gaussian/Laplacian pyramids and multi-band blending of two images."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, TooManyLevels

KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
MIN_LEVEL_DIM = 2


@dataclass
class Pyramid:
    levels: list
    kind: str  # "gaussian" or "laplacian"

    def __len__(self):
        return len(self.levels)


def _smooth(img: np.ndarray, mode: str = "nearest", cval: float = 0.0) -> np.ndarray:
    out = ndimage.convolve1d(img, KERNEL, axis=0, mode=mode, cval=cval)
    return ndimage.convolve1d(out, KERNEL, axis=1, mode=mode, cval=cval)


def reduce(img: np.ndarray) -> np.ndarray:
    """Binomial smoothing with edge replication, then 2x decimation."""
    return _smooth(img)[::2, ::2]


def expand(img: np.ndarray, shape) -> np.ndarray:
    """Upsample to ``shape[:2]`` by zero insertion and normalized binomial smoothing.

    Dividing by the smoothed sample-indicator keeps constants exact up to the
    border, including odd-sized targets.
    """
    rows, cols = shape[:2]
    up = np.zeros((rows, cols) + img.shape[2:])
    up[::2, ::2] = img
    support = np.zeros((rows, cols))
    support[::2, ::2] = 1.0
    num = _smooth(up, mode="constant")
    den = _smooth(support, mode="constant")
    if img.ndim == 3:
        den = den[..., None]
    return num / den


def level_shape(shape, k: int):
    rows, cols = shape[:2]
    for _ in range(k):
        rows, cols = math.ceil(rows / 2), math.ceil(cols / 2)
    return rows, cols


def max_levels(shape, min_size: int = MIN_LEVEL_DIM) -> int:
    """Largest level count whose coarsest level is at least ``min_size`` on both sides."""
    n = 1
    while min(level_shape(shape, n)) >= min_size:
        n += 1
    return n


def _check_levels(shape, n_levels):
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if min(level_shape(shape, n_levels - 1)) < MIN_LEVEL_DIM:
        raise TooManyLevels(f"{n_levels} levels shrink a {shape[0]}x{shape[1]} image below 2x2")


def build_gaussian_pyramid(img: np.ndarray, n_levels: int) -> Pyramid:
    img = np.asarray(img, dtype=np.float64)
    _check_levels(img.shape, n_levels)
    levels = [img]
    for _ in range(n_levels - 1):
        levels.append(reduce(levels[-1]))
    return Pyramid(levels, "gaussian")


def build_laplacian_pyramid(img: np.ndarray, n_levels: int) -> Pyramid:
    """Band-pass levels ``G_k - expand(G_{k+1})`` followed by the Gaussian residual."""
    gauss = build_gaussian_pyramid(img, n_levels).levels
    levels = [g - expand(g_next, g.shape) for g, g_next in zip(gauss[:-1], gauss[1:])]
    levels.append(gauss[-1])
    return Pyramid(levels, "laplacian")


def collapse(pyr: Pyramid) -> np.ndarray:
    out = pyr.levels[-1]
    for band in reversed(pyr.levels[:-1]):
        out = band + expand(out, band.shape)
    return out


def blend_multiband(img1: np.ndarray, img2: np.ndarray, mask: np.ndarray, n_levels: int) -> np.ndarray:
    """Combine two images band by band under a Gaussian-smoothed mask.

    ``mask`` is 1 where ``img1`` should win.  Each Laplacian level of the
    result is ``P1 * G + P2 * (1 - G)`` with ``G`` the matching level of the
    mask's Gaussian pyramid.  The result is not clamped.
    """
    img1 = np.asarray(img1, dtype=np.float64)
    img2 = np.asarray(img2, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if img1.shape != img2.shape or mask.shape != img1.shape[:2]:
        raise DimensionMismatch(f"shapes {img1.shape}, {img2.shape}, mask {mask.shape} do not agree")
    if mask.size and (mask.min() < 0 or mask.max() > 1):
        raise ValueError("mask weights must lie in [0, 1]")
    lap1 = build_laplacian_pyramid(img1, n_levels).levels
    lap2 = build_laplacian_pyramid(img2, n_levels).levels
    weights = build_gaussian_pyramid(mask, n_levels).levels
    combined = []
    for p1, p2, g in zip(lap1, lap2, weights):
        if p1.ndim == 3:
            g = g[..., None]
        combined.append(p1 * g + p2 * (1.0 - g))
    return collapse(Pyramid(combined, "laplacian"))


def blend_hard(img1: np.ndarray, img2: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Hard-mask composite (no blending), for ablations."""
    sel = np.asarray(mask) >= 0.5
    if np.ndim(img1) == 3:
        sel = sel[..., None]
    return np.where(sel, img1, img2)


def default_levels(overlap_width: int, overlap_height: int) -> int:
    """``floor(log2(min overlap side)) - 2`` clamped to [2, 6]."""
    side = min(overlap_width, overlap_height)
    if side < 1:
        return 2
    return int(min(6, max(2, math.floor(math.log2(side)) - 2)))
