"""Difference-of-Gaussian keypoint detection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmall

MIN_IMAGE_DIM = 32
_MIN_OCTAVE_DIM = 8
_MAX_REFINE_STEPS = 5


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float
    response: float
    octave: int = 0


@dataclass(frozen=True)
class ScaleSpaceConfig:
    octaves: int | None = None  # None: floor(log2(min_dim)) - 3
    scales_per_octave: int = 3
    base_sigma: float = 1.6
    contrast_threshold: float = 0.03
    edge_ratio_threshold: float = 10.0
    max_keypoints: int = 1000
    assumed_blur: float = 0.5

    def __post_init__(self):
        if self.octaves is not None and self.octaves < 1:
            raise ValueError("octaves must be >= 1")
        if self.scales_per_octave < 1:
            raise ValueError("scales_per_octave must be >= 1")
        if self.base_sigma <= 0 or self.contrast_threshold <= 0 or self.edge_ratio_threshold <= 0:
            raise ValueError("sigma and thresholds must be positive")

    def octave_count(self, shape) -> int:
        if self.octaves is not None:
            return self.octaves
        return max(1, int(math.floor(math.log2(min(shape)))) - 3)


def build_dog_pyramid(img: np.ndarray, cfg: ScaleSpaceConfig) -> list[np.ndarray]:
    """DoG stacks, one ``(s + 2, H_o, W_o)`` array per octave."""
    s = cfg.scales_per_octave
    k = 2.0 ** (1.0 / s)
    sigmas = [cfg.base_sigma * k ** i for i in range(s + 3)]
    increments = [math.sqrt(sigmas[i] ** 2 - sigmas[i - 1] ** 2) for i in range(1, s + 3)]

    initial = math.sqrt(max(cfg.base_sigma ** 2 - cfg.assumed_blur ** 2, 0.01))
    base = ndimage.gaussian_filter(np.asarray(img, dtype=np.float64), initial, mode="nearest")
    dogs = []
    for _ in range(cfg.octave_count(img.shape)):
        if min(base.shape) < _MIN_OCTAVE_DIM:
            break
        gauss = [base]
        for inc in increments:
            gauss.append(ndimage.gaussian_filter(gauss[-1], inc, mode="nearest"))
        gauss = np.stack(gauss)
        dogs.append(gauss[1:] - gauss[:-1])
        base = gauss[s][::2, ::2]
    return dogs


def _derivatives(d, si, y, x):
    dx = 0.5 * (d[si, y, x + 1] - d[si, y, x - 1])
    dy = 0.5 * (d[si, y + 1, x] - d[si, y - 1, x])
    ds = 0.5 * (d[si + 1, y, x] - d[si - 1, y, x])
    c = d[si, y, x]
    dxx = d[si, y, x + 1] + d[si, y, x - 1] - 2 * c
    dyy = d[si, y + 1, x] + d[si, y - 1, x] - 2 * c
    dss = d[si + 1, y, x] + d[si - 1, y, x] - 2 * c
    dxy = 0.25 * (d[si, y + 1, x + 1] - d[si, y + 1, x - 1] - d[si, y - 1, x + 1] + d[si, y - 1, x - 1])
    dxs = 0.25 * (d[si + 1, y, x + 1] - d[si + 1, y, x - 1] - d[si - 1, y, x + 1] + d[si - 1, y, x - 1])
    dys = 0.25 * (d[si + 1, y + 1, x] - d[si + 1, y - 1, x] - d[si - 1, y + 1, x] + d[si - 1, y - 1, x])
    grad = np.array([dx, dy, ds])
    hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
    return grad, hess


def _refine(d, si, y, x, cfg):
    """Quadratic subpixel refinement; None when the candidate is rejected."""
    n_scales, h, w = d.shape
    for _ in range(_MAX_REFINE_STEPS):
        grad, hess = _derivatives(d, si, y, x)
        try:
            offset = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            break
        x += int(round(offset[0]))
        y += int(round(offset[1]))
        si += int(round(offset[2]))
        if not (1 <= x < w - 1 and 1 <= y < h - 1 and 1 <= si < n_scales - 1):
            return None
    else:
        return None

    value = d[si, y, x] + 0.5 * grad @ offset
    if abs(value) < cfg.contrast_threshold:
        return None
    tr = hess[0, 0] + hess[1, 1]
    det = hess[0, 0] * hess[1, 1] - hess[0, 1] ** 2
    r = cfg.edge_ratio_threshold
    if det <= 0 or tr * tr * r >= (r + 1) ** 2 * det:
        return None
    return x + offset[0], y + offset[1], si + offset[2], value


def detect_keypoints(img: np.ndarray, cfg: ScaleSpaceConfig | None = None) -> list[Keypoint]:
    """DoG scale-space extrema, strongest first.

    Candidates are 3x3x3 extrema refined by a quadratic fit, then filtered by
    contrast, edge ratio and a 3-sigma border margin.  The reported scale is the
    geometric centre of the two Gaussian levels whose difference peaked.
    """
    cfg = cfg or ScaleSpaceConfig()
    img = np.asarray(img, dtype=np.float64)
    if min(img.shape) < MIN_IMAGE_DIM:
        raise ImageTooSmall(f"image {img.shape} is smaller than {MIN_IMAGE_DIM} px")
    height, width = img.shape
    s = cfg.scales_per_octave
    k = 2.0 ** (1.0 / s)
    prefilter = 0.5 * cfg.contrast_threshold

    keypoints = []
    for octave, d in enumerate(build_dog_pyramid(img, cfg)):
        maxf = ndimage.maximum_filter(d, size=3, mode="nearest")
        minf = ndimage.minimum_filter(d, size=3, mode="nearest")
        cand = ((d == maxf) | (d == minf)) & (np.abs(d) > prefilter)
        cand[0] = cand[-1] = False
        cand[:, [0, -1], :] = False
        cand[:, :, [0, -1]] = False
        factor = 2.0 ** octave
        for si, y, x in zip(*np.nonzero(cand)):
            refined = _refine(d, int(si), int(y), int(x), cfg)
            if refined is None:
                continue
            rx, ry, rs, value = refined
            scale = cfg.base_sigma * 2.0 ** (octave + rs / s) * math.sqrt(k)
            kx, ky = rx * factor, ry * factor
            margin = 3.0 * scale
            if not (margin <= kx <= width - 1 - margin and margin <= ky <= height - 1 - margin):
                continue
            keypoints.append(Keypoint(float(kx), float(ky), float(scale), float(value), octave))

    keypoints.sort(key=lambda kp: (-abs(kp.response), kp.y, kp.x, kp.scale))
    return keypoints[: cfg.max_keypoints]
