"""Keyframe selection from the horizontal mutual offset between frames.

A single reference block is taken from the most recently kept frame and
searched for along the same row of the candidate frame; the displacement with
the smallest sum of absolute differences is the mutual offset.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import PatchOutOfBounds
from .imaging import Frame, to_grayscale

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockMatchConfig:
    block_size: int = 21
    search_range: int | None = None
    patch_center: tuple[int, int] | None = None  # (x, y); None = image center

    def __post_init__(self):
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise ValueError("block_size must be odd and >= 3")
        if self.search_range is not None and self.search_range < 1:
            raise ValueError("search_range must be >= 1")

    def center_for(self, width: int, height: int) -> tuple[int, int]:
        if self.patch_center is not None:
            return int(self.patch_center[0]), int(self.patch_center[1])
        return width // 2, height // 2

    def range_for(self, width: int, height: int) -> int:
        """Configured search range, or the widest one that keeps the block inside."""
        if self.search_range is not None:
            return self.search_range
        cx, _ = self.center_for(width, height)
        half = self.block_size // 2
        return max(1, min(cx - half, width - 1 - cx - half))


@dataclass(frozen=True)
class OffsetMeasurement:
    displacement: int
    sad: float


def sad(block_a: np.ndarray, block_b: np.ndarray) -> float:
    """Sum of absolute differences between two equally sized blocks."""
    return float(np.abs(block_a - block_b).sum())


def sad_block_offset(reference: np.ndarray, target: np.ndarray, cfg: BlockMatchConfig) -> OffsetMeasurement:
    """Horizontal displacement of the reference block inside ``target``.

    Ties go to the smaller ``|d|``, then to the negative displacement.
    """
    reference = np.asarray(reference, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if reference.shape != target.shape:
        raise ValueError(f"image shapes differ: {reference.shape} vs {target.shape}")
    height, width = reference.shape
    cx, cy = cfg.center_for(width, height)
    rng = cfg.range_for(width, height)
    half = cfg.block_size // 2
    if (
        cy - half < 0 or cy + half >= height
        or cx - half - rng < 0 or cx + half + rng >= width
    ):
        raise PatchOutOfBounds(
            f"block {cfg.block_size} at ({cx}, {cy}) with search range {rng} "
            f"leaves the {width}x{height} image"
        )
    ref_block = reference[cy - half:cy + half + 1, cx - half:cx + half + 1]
    rows = target[cy - half:cy + half + 1]
    best = None
    for d in range(-rng, rng + 1):
        x0 = cx - half + d
        score = sad(rows[:, x0:x0 + cfg.block_size], ref_block)
        key = (score, abs(d), d)
        if best is None or key < best:
            best = key
    return OffsetMeasurement(displacement=best[2], sad=best[0])


def select_frame_indices(frames, cfg: BlockMatchConfig, offset_threshold: float | None = None):
    """Positions of the frames to keep, plus the offsets measured while scanning.

    ``frames`` may hold :class:`Frame` objects or gray arrays.  The first frame
    is always kept; a later frame is kept once its offset from the last kept
    frame reaches ``offset_threshold`` (default: a quarter of the frame width)
    or saturates the search range; the final frame is always appended.
    ``measurements`` maps each scanned position to its :class:`OffsetMeasurement`.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("select_frames needs at least one frame")
    grays = [to_grayscale(f) if isinstance(f, Frame) else np.asarray(f, dtype=np.float64) for f in frames]
    height, width = grays[0].shape
    if offset_threshold is None:
        offset_threshold = 0.25 * width
    if offset_threshold < 1:
        raise ValueError("offset_threshold must be >= 1")
    rng = cfg.range_for(width, height)

    kept = [0]
    measurements = {}
    ref = grays[0]
    for i in range(1, len(frames)):
        m = sad_block_offset(ref, grays[i], cfg)
        measurements[i] = m
        if abs(m.displacement) >= offset_threshold or abs(m.displacement) >= rng:
            log.debug("keeping frame %d (offset %d)", i, m.displacement)
            kept.append(i)
            ref = grays[i]
    if kept[-1] != len(frames) - 1:
        kept.append(len(frames) - 1)
    return kept, measurements


def select_frames(frames, cfg: BlockMatchConfig, offset_threshold: float | None = None) -> list:
    """Order-preserving subsequence of ``frames`` worth stitching."""
    frames = list(frames)
    kept, _ = select_frame_indices(frames, cfg, offset_threshold)
    return [frames[i] for i in kept]
