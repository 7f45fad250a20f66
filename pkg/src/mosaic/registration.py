"""Descriptor matching and robust homography estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InsufficientMatches, NoConsensus, SingularHomography
from .imaging import apply_homography, normalize_homography

SAMPLE_SIZE = 4
COLLINEAR_PX = 1.0


@dataclass(frozen=True)
class Match:
    query_idx: int
    train_idx: int
    distance: float
    ratio: float


@dataclass(frozen=True)
class RansacConfig:
    success_prob: float = 0.99
    sample_size: int = SAMPLE_SIZE
    assumed_outlier_ratio: float = 0.5
    inlier_threshold: float = 3.0
    max_iterations: int = 2000
    rng_seed: int = 0
    min_inlier_fraction: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.success_prob < 1.0:
            raise ValueError("success_prob must lie in (0, 1)")
        if not 0.0 <= self.assumed_outlier_ratio < 1.0:
            raise ValueError("assumed_outlier_ratio must lie in [0, 1)")
        if self.sample_size != SAMPLE_SIZE:
            raise ValueError("a homography needs exactly 4 points per sample")
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class RegistrationResult:
    homography: np.ndarray
    inlier_mask: np.ndarray
    iterations_used: int
    mean_reproj_error: float
    inlier_count: int = field(init=False)

    def __post_init__(self):
        self.inlier_count = int(np.count_nonzero(self.inlier_mask))


# -- matching -----------------------------------------------------------------

def match_nndr(query: np.ndarray, train: np.ndarray, ratio_threshold: float = 0.8) -> list[Match]:
    """Nearest-neighbour distance-ratio matches, unique on the train side.

    A query is matched to its nearest train descriptor when ``d1/d2`` is below
    ``ratio_threshold``.  When several queries pick the same train descriptor
    only the closest survives.
    """
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if query.size == 0 or train.size == 0 or len(train) < 2:
        return []
    if query.shape[1] != train.shape[1]:
        raise ValueError(f"descriptor lengths differ: {query.shape[1]} vs {train.shape[1]}")
    dist = cdist(query, train)
    order = np.argsort(dist, axis=1, kind="stable")[:, :2]
    rows = np.arange(len(query))
    d1 = dist[rows, order[:, 0]]
    d2 = dist[rows, order[:, 1]]
    ratio = np.divide(d1, d2, out=np.ones_like(d1), where=d2 > 0)

    best: dict[int, Match] = {}
    for q in np.nonzero(ratio < ratio_threshold)[0]:
        m = Match(int(q), int(order[q, 0]), float(d1[q]), float(ratio[q]))
        prev = best.get(m.train_idx)
        if prev is None or m.distance < prev.distance:
            best[m.train_idx] = m
    return sorted(best.values(), key=lambda m: m.query_idx)


# -- homography fitting -------------------------------------------------------

def ransac_iterations(cfg: RansacConfig, outlier_ratio: float | None = None) -> int:
    """Trials needed so that, with probability ``success_prob``, one sample is outlier-free."""
    v = cfg.assumed_outlier_ratio if outlier_ratio is None else outlier_ratio
    if v <= 0.0:
        return 1
    all_inliers = (1.0 - v) ** cfg.sample_size
    if all_inliers <= 0.0:
        return cfg.max_iterations
    if all_inliers >= 1.0:  # v underflowed: any sample is clean
        return 1
    denom = math.log1p(-all_inliers)
    if denom == 0.0:
        return cfg.max_iterations
    n = math.log(1.0 - cfg.success_prob) / denom
    return min(cfg.max_iterations, max(1, math.ceil(n)))


def _hartley(pts: np.ndarray):
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    scale = math.sqrt(2.0) / mean_dist if mean_dist > 0 else 1.0
    t = np.array([[scale, 0.0, -scale * centroid[0]], [0.0, scale, -scale * centroid[1]], [0.0, 0.0, 1.0]])
    return (pts - centroid) * scale, t


def fit_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized DLT: exact for 4 points, least squares for more."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if len(src) < 4 or len(src) != len(dst):
        raise InsufficientMatches("need at least 4 point pairs")
    ns, ts = _hartley(src)
    nd, td = _hartley(dst)
    n = len(src)
    a = np.zeros((2 * n, 9))
    x, y = ns[:, 0], ns[:, 1]
    u, v = nd[:, 0], nd[:, 1]
    a[0::2, 0:3] = np.stack([x, y, np.ones(n)], axis=1)
    a[0::2, 6:9] = -u[:, None] * np.stack([x, y, np.ones(n)], axis=1)
    a[1::2, 3:6] = np.stack([x, y, np.ones(n)], axis=1)
    a[1::2, 6:9] = -v[:, None] * np.stack([x, y, np.ones(n)], axis=1)
    _, _, vt = np.linalg.svd(a)
    hn = vt[-1].reshape(3, 3)
    return normalize_homography(np.linalg.inv(td) @ hn @ ts)


def has_collinear_triple(pts: np.ndarray, tol: float = COLLINEAR_PX) -> bool:
    """True when any three points lie within ``tol`` px of a common line."""
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            base = pts[j] - pts[i]
            length = math.hypot(*base)
            for k in range(j + 1, n):
                if length == 0.0:
                    return True
                rel = pts[k] - pts[i]
                if abs(base[0] * rel[1] - base[1] * rel[0]) / length < tol:
                    return True
    return False


def transfer_errors(h: np.ndarray, src: np.ndarray, dst: np.ndarray):
    """Forward ``|H src - dst|`` and backward ``|H^-1 dst - src|`` distances."""
    fwd = np.linalg.norm(apply_homography(h, src) - dst, axis=1)
    bwd = np.linalg.norm(apply_homography(np.linalg.inv(h), dst) - src, axis=1)
    return np.nan_to_num(fwd, nan=np.inf), np.nan_to_num(bwd, nan=np.inf)


def symmetric_error(h: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Worse of the two transfer distances per correspondence."""
    fwd, bwd = transfer_errors(h, src, dst)
    return np.maximum(fwd, bwd)


def _consensus(h, src, dst, threshold):
    err = symmetric_error(h, src, dst)
    return err < threshold, err


def estimate_homography(matches, pts_query, pts_train, cfg: RansacConfig | None = None) -> RegistrationResult:
    """RANSAC homography mapping query points onto train points.

    ``pts_query``/``pts_train`` are keypoint coordinate arrays indexed by the
    matches.  The trial budget is re-derived from the best inlier ratio each
    time it improves; the winner is refit on all of its inliers.
    """
    cfg = cfg or RansacConfig()
    src_all = np.asarray(pts_query, dtype=np.float64).reshape(-1, 2)
    dst_all = np.asarray(pts_train, dtype=np.float64).reshape(-1, 2)
    matches = list(matches)
    if len(matches) < SAMPLE_SIZE:
        raise InsufficientMatches(f"{len(matches)} matches, need at least {SAMPLE_SIZE}")
    src = src_all[[m.query_idx for m in matches]]
    dst = dst_all[[m.train_idx for m in matches]]
    n = len(matches)

    rng = np.random.default_rng(cfg.rng_seed)
    samples = np.stack([rng.choice(n, SAMPLE_SIZE, replace=False) for _ in range(cfg.max_iterations)])

    best_mask, best_count, best_h = None, 0, None
    budget = cfg.max_iterations
    used = 0
    while used < budget:
        idx = samples[used]
        used += 1
        if has_collinear_triple(src[idx]) or has_collinear_triple(dst[idx]):
            continue
        try:
            h = fit_homography(src[idx], dst[idx])
        except SingularHomography:
            continue
        mask, _ = _consensus(h, src, dst, cfg.inlier_threshold)
        count = int(mask.sum())
        if count > best_count:
            best_mask, best_count, best_h = mask, count, h
            budget = min(cfg.max_iterations, max(used, ransac_iterations(cfg, 1.0 - count / n)))

    if best_h is None or best_count < SAMPLE_SIZE or best_count < cfg.min_inlier_fraction * n:
        raise NoConsensus(f"best consensus {best_count} of {n} matches after {used} trials")

    h, mask = best_h, best_mask
    for _ in range(5):
        try:
            refit = fit_homography(src[mask], dst[mask])
        except SingularHomography:
            break
        new_mask, _ = _consensus(refit, src, dst, cfg.inlier_threshold)
        if new_mask.sum() < SAMPLE_SIZE:
            break
        h, converged = refit, np.array_equal(new_mask, mask)
        mask = new_mask
        if converged:
            break
    mask, _ = _consensus(h, src, dst, cfg.inlier_threshold)
    fwd, bwd = transfer_errors(h, src[mask], dst[mask])
    mean_err = float(np.mean(0.5 * (fwd + bwd))) if mask.any() else float("inf")
    return RegistrationResult(h, mask, used, mean_err)
