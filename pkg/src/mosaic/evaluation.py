"""Feature-correspondence metrics against a known homography.

Repeatability is ``matches / (left_keypoints + right_keypoints)``; recall and
1-precision follow the usual descriptor-evaluation protocol where a match is
correct when the ground-truth homography carries its left point to within
``tolerance_px`` of its right point.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InsufficientMatches, NoConsensus, ZeroKeypoints
from .imaging import LUMA_WEIGHTS, apply_homography, normalize_homography


@dataclass(frozen=True)
class GroundTruth:
    h_gt: np.ndarray  # left-frame points -> right-frame points
    tolerance_px: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "h_gt", normalize_homography(self.h_gt))
        if self.tolerance_px <= 0:
            raise ValueError("tolerance_px must be positive")


@dataclass
class MetricRow:
    left_keypoints: int
    right_keypoints: int
    matches: int
    repeatability: float
    recall: float
    one_minus_precision: float
    inliers: int = 0
    gt_correspondences: int = 0

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow([f.name for f in fields(self)])
        writer.writerow(list(asdict(self).values()))
        return buf.getvalue()


def _count(x) -> int:
    return x if isinstance(x, (int, np.integer)) else len(x)


def repeatability(left_kps, right_kps, matched: int) -> float:
    """``matched / (left + right)`` rounded to 3 decimals; counts or lists accepted."""
    left, right = _count(left_kps), _count(right_kps)
    if left < 0 or right < 0 or matched < 0:
        raise ValueError("counts must be non-negative")
    if left + right == 0:
        raise ZeroKeypoints("both keypoint sets are empty")
    return round(matched / (left + right), 3)


def correct_matches(left_pts, right_pts, gt: GroundTruth) -> np.ndarray:
    """Boolean per match: does ``h_gt`` land the left point near the right one?"""
    left_pts = np.asarray(left_pts, dtype=np.float64).reshape(-1, 2)
    right_pts = np.asarray(right_pts, dtype=np.float64).reshape(-1, 2)
    if len(left_pts) == 0:
        return np.zeros(0, dtype=bool)
    err = np.linalg.norm(apply_homography(gt.h_gt, left_pts) - right_pts, axis=1)
    return np.nan_to_num(err, nan=np.inf) <= gt.tolerance_px


def recall_precision(left_pts, right_pts, gt: GroundTruth, total_gt_correspondences: int):
    """``(recall, one_minus_precision)`` of a match set given as paired point arrays.

    1-precision is defined as 0 when there are no matches.
    """
    if total_gt_correspondences < 1:
        raise ValueError("total_gt_correspondences must be >= 1")
    ok = correct_matches(left_pts, right_pts, gt)
    correct = int(ok.sum())
    false = len(ok) - correct
    recall = correct / total_gt_correspondences
    one_minus_precision = false / (correct + false) if len(ok) else 0.0
    return recall, one_minus_precision


def gt_correspondence_count(left_pts, right_pts, gt: GroundTruth, right_shape) -> int:
    """Left keypoints that project inside the right image next to a detected right keypoint."""
    left_pts = np.asarray(left_pts, dtype=np.float64).reshape(-1, 2)
    right_pts = np.asarray(right_pts, dtype=np.float64).reshape(-1, 2)
    if len(left_pts) == 0 or len(right_pts) == 0:
        return 0
    h, w = right_shape[:2]
    proj = apply_homography(gt.h_gt, left_pts)
    inside = (proj[:, 0] >= 0) & (proj[:, 0] <= w - 1) & (proj[:, 1] >= 0) & (proj[:, 1] <= h - 1)
    dist = np.linalg.norm(proj[:, None, :] - right_pts[None, :, :], axis=2)
    near = np.nan_to_num(dist, nan=np.inf).min(axis=1) <= gt.tolerance_px
    return int(np.count_nonzero(inside & near))


def evaluate_pair(left_gray, right_gray, gt: GroundTruth, cfg=None) -> MetricRow:
    """Detect, describe and match two gray images, then score against ``gt``."""
    from .pipeline import PipelineConfig, extract_features
    from .registration import estimate_homography, match_nndr

    cfg = cfg or PipelineConfig()
    left = extract_features(left_gray, cfg)
    right = extract_features(right_gray, cfg)
    matches = match_nndr(left.descriptors, right.descriptors, cfg.nndr_ratio)
    lp = left.points[[m.query_idx for m in matches]] if matches else np.zeros((0, 2))
    rp = right.points[[m.train_idx for m in matches]] if matches else np.zeros((0, 2))
    total = gt_correspondence_count(left.points, right.points, gt, np.shape(right_gray))
    if total:
        recall, one_minus_precision = recall_precision(lp, rp, gt, total)
    else:
        ok = correct_matches(lp, rp, gt)
        recall, one_minus_precision = 0.0, (1.0 - ok.mean() if len(ok) else 0.0)
    try:
        inliers = estimate_homography(matches, left.points, right.points, cfg.ransac).inlier_count
    except (InsufficientMatches, NoConsensus):
        inliers = 0
    n_left, n_right = len(left.keypoints), len(right.keypoints)
    rep = repeatability(n_left, n_right, len(matches)) if n_left + n_right else 0.0
    return MetricRow(
        left_keypoints=n_left,
        right_keypoints=n_right,
        matches=len(matches),
        repeatability=rep,
        recall=round(min(recall, 1.0), 3),
        one_minus_precision=round(one_minus_precision, 3),
        inliers=inliers,
        gt_correspondences=total,
    )


def seam_pixels(mask: np.ndarray, cov1: np.ndarray, cov2: np.ndarray) -> np.ndarray:
    """Pixels on either side of a horizontal transition of the seam mask inside the overlap."""
    mask = np.asarray(mask) >= 0.5
    both = np.asarray(cov1) & np.asarray(cov2)
    edge = np.zeros_like(mask)
    edge[:, :-1] = (mask[:, :-1] != mask[:, 1:]) & both[:, :-1] & both[:, 1:]
    out = edge.copy()
    out[:, 1:] |= edge[:, :-1]
    return out


def seam_gradient_peak(image: np.ndarray, seam: np.ndarray, rows=None) -> float:
    """Largest luma gradient magnitude over ``seam`` pixels.

    RGB input is taken on the 0-255 scale; 2-D input is used as is.
    ``rows`` optionally restricts the measurement to a ``(y0, y1)`` band.
    """
    img = np.asarray(image, dtype=np.float64)
    gray = img @ LUMA_WEIGHTS if img.ndim == 3 else img
    gy, gx = np.gradient(gray)
    sel = np.asarray(seam, dtype=bool).copy()
    if rows is not None:
        keep = np.zeros(sel.shape[0], dtype=bool)
        keep[rows[0]:rows[1]] = True
        sel &= keep[:, None]
    if not sel.any():
        raise ValueError("no seam pixels to measure")
    return float(np.hypot(gx, gy)[sel].max())
