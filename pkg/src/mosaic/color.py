"""Per-channel color alignment by matching mean and standard deviation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSource
from .imaging import Frame

SIGMA_EPS = 1e-6


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    std: float


def channel_stats(values: np.ndarray) -> list[ChannelStats]:
    """Population mean and standard deviation of each channel."""
    values = np.asarray(values, dtype=np.float64)
    flat = values.reshape(-1, values.shape[-1])
    return [ChannelStats(float(c.mean()), float(c.std())) for c in flat.T]


def align_channels(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Map each channel of ``source`` onto the statistics of ``target``.

    Works on real-valued (H, W, C) arrays and returns unclamped real values.
    A channel whose spread is below 1e-6 is set to the target mean.
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.size == 0 or target.size == 0:
        raise ValueError("color alignment needs non-empty images")
    out = np.empty_like(source)
    for c, (s, t) in enumerate(zip(channel_stats(source), channel_stats(target))):
        if s.std < SIGMA_EPS:
            warnings.warn(f"channel {c} of the source is flat; using the target mean", DegenerateSource, stacklevel=2)
            out[..., c] = t.mean
        else:
            out[..., c] = (t.std / s.std) * (source[..., c] - s.mean) + t.mean
    return out


def align_colors(source: Frame, target: Frame) -> Frame:
    """Color-aligned copy of ``source``, clamped and rounded to 8 bits."""
    aligned = align_channels(source.as_float(), target.as_float())
    return Frame.from_float(source.index, aligned, source.source)


def align_chain(images: list[np.ndarray]) -> list[np.ndarray]:
    """Align every image to its (already aligned) predecessor.

    The first image is the palette reference and is returned unchanged.
    Results stay real-valued but are clamped to [0, 255].
    """
    out = []
    for img in images:
        img = np.asarray(img, dtype=np.float64)
        if out:
            img = np.clip(align_channels(img, out[-1]), 0.0, 255.0)
        out.append(img)
    return out
