"""Centre-symmetric local binary patterns and the grid histogram descriptor.

Each pixel gets a ``p/2``-bit code: bit ``i`` is set when the sample at angle
``2*pi*i/p`` on a circle of radius ``r`` exceeds its diametrically opposite
sample by more than ``t``.  A keypoint's region is resampled to a canonical
patch, split into an ``m x m`` grid, and the per-cell code histograms are
concatenated into an ``m**2 * 2**(p/2)`` vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .detect import Keypoint
from .errors import OutOfBounds, RegionOutOfBounds
from .imaging import bilinear_sample

CLIP_LEVEL = 0.2


@dataclass(frozen=True)
class CslbpParams:
    radius: float = 1.0
    neighbors: int = 8
    threshold: float = 0.01
    grid: int = 4
    region_scale: float = 12.0
    min_region: float = 24.0
    patch_size: int = 32  # coded pixels per side of the canonical patch
    share_votes: bool = True

    def __post_init__(self):
        if self.neighbors < 4 or self.neighbors % 2:
            raise ValueError("neighbors must be even and >= 4")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.grid < 1:
            raise ValueError("grid must be >= 1")
        if self.patch_size < self.grid:
            raise ValueError("patch_size must be >= grid")

    @property
    def n_codes(self) -> int:
        return 2 ** (self.neighbors // 2)

    @property
    def length(self) -> int:
        return self.grid ** 2 * self.n_codes

    @property
    def margin(self) -> int:
        return int(math.ceil(self.radius))


@dataclass(frozen=True)
class Descriptor:
    values: np.ndarray
    keypoint: Keypoint


def circle_offsets(radius: float, neighbors: int) -> np.ndarray:
    """(p, 2) array of (dx, dy) sample offsets, counter-clockwise from +x."""
    angles = 2.0 * np.pi * np.arange(neighbors) / neighbors
    # round so axis-aligned samples land exactly on pixel centres
    return np.round(np.stack([radius * np.cos(angles), -radius * np.sin(angles)], axis=1), 12)


def _sample_shifted(arr: np.ndarray, dx: float, dy: float, margin: int) -> np.ndarray:
    """``arr`` sampled at (x + dx, y + dy) for every pixel at least ``margin`` from the border.

    Works on the last two axes, so stacks of patches are coded in one call.
    """
    h, w = arr.shape[-2:]
    ix, iy = math.floor(dx), math.floor(dy)
    fx, fy = dx - ix, dy - iy
    out_h, out_w = h - 2 * margin, w - 2 * margin

    def tap(ox, oy):
        return arr[..., margin + oy:margin + oy + out_h, margin + ox:margin + ox + out_w]

    out = (1 - fx) * (1 - fy) * tap(ix, iy)
    if fx:
        out = out + fx * (1 - fy) * tap(ix + 1, iy)
    if fy:
        out = out + (1 - fx) * fy * tap(ix, iy + 1)
    if fx and fy:
        out = out + fx * fy * tap(ix + 1, iy + 1)
    return out


def cslbp_codes(img: np.ndarray, radius: float = 1.0, neighbors: int = 8, threshold: float = 0.01) -> np.ndarray:
    """Codes of every pixel whose sampling circle fits inside ``img``.

    The result is smaller than the input by ``ceil(radius)`` on each side.
    Leading axes are treated as a batch.
    """
    img = np.asarray(img, dtype=np.float64)
    margin = int(math.ceil(radius))
    if min(img.shape[-2:]) <= 2 * margin:
        raise OutOfBounds("image too small for the sampling circle")
    offsets = circle_offsets(radius, neighbors)
    half = neighbors // 2
    codes = np.zeros(img.shape[:-2] + (img.shape[-2] - 2 * margin, img.shape[-1] - 2 * margin), dtype=np.int64)
    for i in range(half):
        g_i = _sample_shifted(img, *offsets[i], margin)
        g_opp = _sample_shifted(img, *offsets[i + half], margin)
        codes |= (g_i - g_opp > threshold).astype(np.int64) << i
    return codes


def cslbp_code(patch: np.ndarray, center: tuple[int, int], params: CslbpParams | None = None) -> int:
    """Code of a single pixel ``center = (x, y)`` of ``patch``."""
    params = params or CslbpParams()
    patch = np.asarray(patch, dtype=np.float64)
    x, y = center
    h, w = patch.shape
    r = params.radius
    if x - r < 0 or y - r < 0 or x + r > w - 1 or y + r > h - 1:
        raise OutOfBounds(f"circle of radius {r} around ({x}, {y}) leaves the {w}x{h} patch")
    offsets = circle_offsets(r, params.neighbors)
    g, _ = bilinear_sample(patch, x + offsets[:, 0], y + offsets[:, 1])
    half = params.neighbors // 2
    return sum(1 << i for i in range(half) if g[i] - g[i + half] > params.threshold)


def cell_histograms(codes: np.ndarray, grid: int, n_codes: int, share_votes: bool = True) -> np.ndarray:
    """Per-cell code histograms, shape ``batch + (grid, grid, n_codes)``.

    With vote sharing each pixel splits its unit vote bilinearly between the
    nearest cell centres; pixels beyond the outermost centres vote fully into
    the border cell, so the total mass equals the number of coded pixels.
    """
    codes = np.asarray(codes)
    batch = codes.shape[:-2]
    rows, cols = codes.shape[-2:]
    flat = codes.reshape(-1, rows, cols)
    n = flat.shape[0]
    hist = np.zeros((n, grid, grid, n_codes))

    def axis_weights(size):
        cell = size / grid
        pos = np.arange(size)
        if not share_votes:
            c0 = np.minimum((pos // cell).astype(np.intp), grid - 1)
            return c0, c0, np.zeros(size)
        cu = np.clip((pos + 0.5) / cell - 0.5, 0.0, grid - 1)
        c0 = np.floor(cu).astype(np.intp)
        c1 = np.minimum(c0 + 1, grid - 1)
        return c0, c1, cu - c0

    r0, r1, wr = axis_weights(rows)
    c0, c1, wc = axis_weights(cols)
    base = np.arange(n)[:, None, None] * (grid * grid * n_codes) + flat
    for ri, rw in ((r0, 1 - wr), (r1, wr)):
        for ci, cw in ((c0, 1 - wc), (c1, wc)):
            index = base + ((ri[:, None] * grid + ci[None, :]) * n_codes)[None]
            weight = np.broadcast_to(rw[:, None] * cw[None, :], flat.shape)
            hist += np.bincount(index.ravel(), weight.ravel(), minlength=hist.size).reshape(hist.shape)
    return hist.reshape(batch + (grid, grid, n_codes))


def normalize_descriptor(raw: np.ndarray) -> np.ndarray:
    """L2-normalize, clip at 0.2, renormalize (row-wise); all-zero rows stay zero."""
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))

    def unit(v):
        norm = np.linalg.norm(v, axis=1, keepdims=True)
        return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)

    return unit(np.minimum(unit(raw), CLIP_LEVEL))


def region_side(kp: Keypoint, params: CslbpParams) -> float:
    return max(params.region_scale * kp.scale, params.min_region)


def _region_fits(kp: Keypoint, params: CslbpParams, shape) -> bool:
    h, w = shape
    step = region_side(kp, params) / params.patch_size
    extent = (params.patch_size + 2 * params.margin - 1) / 2.0 * step
    return extent <= kp.x <= w - 1 - extent and extent <= kp.y <= h - 1 - extent


def sample_patches(img: np.ndarray, keypoints, params: CslbpParams) -> np.ndarray:
    """Axis-aligned canonical patches (``patch_size + 2*margin`` square) per keypoint.

    Large regions are low-pass filtered before resampling; blur levels are
    quantized so one filtered image serves many keypoints.
    """
    img = np.asarray(img, dtype=np.float64)
    side = params.patch_size + 2 * params.margin
    grid = np.arange(side) - (side - 1) / 2.0
    patches = np.empty((len(keypoints), side, side))
    blurred = {}
    for n, kp in enumerate(keypoints):
        step = region_side(kp, params) / params.patch_size
        sigma = round(0.5 * math.sqrt(max(step * step - 1.0, 0.0)) * 4) / 4
        if sigma not in blurred:
            blurred[sigma] = ndimage.gaussian_filter(img, sigma, mode="nearest") if sigma > 0 else img
        sx = kp.x + grid[None, :] * step
        sy = kp.y + grid[:, None] * step
        patches[n], _ = bilinear_sample(blurred[sigma], np.broadcast_to(sx, (side, side)), np.broadcast_to(sy, (side, side)))
    return patches


def describe_keypoints(img: np.ndarray, keypoints, params: CslbpParams | None = None, normalize: bool = True):
    """Descriptors for every keypoint whose region fits inside ``img``.

    Returns ``(kept_keypoints, matrix)`` with one row per kept keypoint.
    Keypoints too close to the border are dropped.
    """
    params = params or CslbpParams()
    img = np.asarray(img, dtype=np.float64)
    kept = [kp for kp in keypoints if _region_fits(kp, params, img.shape)]
    if not kept:
        return [], np.zeros((0, params.length))
    patches = sample_patches(img, kept, params)
    codes = cslbp_codes(patches, params.radius, params.neighbors, params.threshold)
    hist = cell_histograms(codes, params.grid, params.n_codes, params.share_votes)
    raw = hist.reshape(len(kept), -1)
    return kept, normalize_descriptor(raw) if normalize else raw


def describe(img: np.ndarray, kp: Keypoint, params: CslbpParams | None = None) -> Descriptor:
    """Descriptor of one keypoint; RegionOutOfBounds if its region leaves the image."""
    params = params or CslbpParams()
    if not _region_fits(kp, params, np.shape(img)):
        raise RegionOutOfBounds(f"measurement region of keypoint at ({kp.x:.1f}, {kp.y:.1f}) leaves the image")
    _, values = describe_keypoints(img, [kp], params)
    return Descriptor(values[0], kp)
