"""Synthetic frame sequences with exact ground-truth geometry.

A band-limited random RGB texture stands in for the scene.  Each frame is the
scene resampled through a known frame-to-scene homography; a color cast and
sensor noise are applied afterwards.  An optional foreground band drifts by an
extra offset every frame, which no single homography can explain.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .errors import SpecInvalid
from .imaging import Frame, apply_homography, quantize, translation, warp_perspective, write_image

_MOTIONS = ("translation", "affine", "projective")


@dataclass
class SceneSpec:
    seed: int = 0
    frame_width: int = 160
    frame_height: int = 120
    n_frames: int = 12
    shift: tuple[float, float] = (5.0, 0.0)  # camera motion per frame, scene px
    motion: str = "translation"
    jitter: float = 0.0  # strength of the per-frame affine/projective perturbation
    noise_sigma: float = 0.0  # on [0, 1] intensities
    color_casts: dict = field(default_factory=dict)  # frame -> (gains[3], biases[3])
    parallax_offset: float = 0.0  # extra foreground drift per frame, px
    parallax_band: tuple[int, int] | None = None  # frame rows [y0, y1) of the foreground
    texture_sigma: float = 2.0
    foreground_sigma: float = 8.0  # smoothness of the parallax layer's texture
    margin: int = 8

    def validate(self):
        if self.frame_width < 1 or self.frame_height < 1 or self.n_frames < 1:
            raise SpecInvalid("frame size and count must be positive")
        if self.motion not in _MOTIONS:
            raise SpecInvalid(f"motion must be one of {_MOTIONS}")
        if self.noise_sigma < 0 or self.texture_sigma <= 0 or self.foreground_sigma <= 0 or self.margin < 0 or self.jitter < 0:
            raise SpecInvalid("noise, jitter, margin and texture scale must be non-negative")
        for k, cast in self.color_casts.items():
            if not 0 <= int(k) < self.n_frames:
                raise SpecInvalid(f"color cast for missing frame {k}")
            gains, biases = cast
            if len(gains) != 3 or len(biases) != 3:
                raise SpecInvalid("color casts need three gains and three biases")
        if self.parallax_band is not None:
            y0, y1 = self.parallax_band
            if not 0 <= y0 < y1 <= self.frame_height:
                raise SpecInvalid("parallax band must lie inside the frame")

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        data = dict(data)
        if "shift" in data:
            data["shift"] = tuple(data["shift"])
        if data.get("parallax_band") is not None:
            data["parallax_band"] = tuple(data["parallax_band"])
        if "color_casts" in data:
            data["color_casts"] = {int(k): (tuple(v[0]), tuple(v[1])) for k, v in data["color_casts"].items()}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecInvalid(f"unknown scene keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SyntheticSequence:
    frames: list
    pairwise: list  # H_{k <- k-1}: frame k-1 coords -> frame k coords
    global_: list  # frame k coords -> frame 0 coords
    frame_to_scene: list
    scene: np.ndarray  # background raster, float in [0, 255]
    raw: list  # frames before clamping/quantization
    spec: SceneSpec


def _motion(spec: SceneSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    m = translation(k * spec.shift[0], k * spec.shift[1])
    if spec.motion == "translation" or k == 0:
        return m
    j = spec.jitter
    a = np.eye(3)
    angle = j * 0.01 * rng.uniform(-1, 1)
    scale = 1.0 + j * 0.01 * rng.uniform(-1, 1)
    a[:2, :2] = scale * np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    if spec.motion == "projective":
        a[2, :2] = j * 1e-5 * rng.uniform(-1, 1, 2)
    # perturb about the frame centre so windows stay put
    c = translation(spec.frame_width / 2, spec.frame_height / 2)
    return m @ c @ a @ np.linalg.inv(c)


def texture(shape, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Band-limited RGB texture in [0, 255]: smoothed noise plus a slow color field."""
    h, w = shape
    luma = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma)
    luma /= luma.std() or 1.0
    chroma = ndimage.gaussian_filter(rng.standard_normal((h, w, 3)), (4 * sigma, 4 * sigma, 0))
    chroma /= chroma.std() or 1.0
    base = np.array([0.45, 0.55, 0.5])
    img = base + 0.15 * luma[..., None] + 0.05 * chroma
    return np.clip(img, 0.0, 1.0) * 255.0


def generate_sequence(spec: SceneSpec) -> SyntheticSequence:
    """Render the frames described by ``spec``; deterministic in ``spec.seed``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    motion_rng = np.random.default_rng([spec.seed, 1])
    w, h = spec.frame_width, spec.frame_height
    motions = [_motion(spec, k, motion_rng) for k in range(spec.n_frames)]

    corners = np.array([[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]], dtype=float)
    placed = np.concatenate([apply_homography(m, corners) for m in motions])
    lo = np.floor(placed.min(axis=0)) - spec.margin
    hi = np.ceil(placed.max(axis=0)) + spec.margin
    origin = translation(-lo[0], -lo[1])
    frame_to_scene = [origin @ m for m in motions]
    scene_w, scene_h = int(hi[0] - lo[0]) + 1, int(hi[1] - lo[1]) + 1
    scene = texture((scene_h, scene_w), spec.texture_sigma, rng)

    foreground = None
    if spec.parallax_band is not None:
        pad = int(math.ceil(abs(spec.parallax_offset) * spec.n_frames)) + 2
        foreground = texture((scene_h, scene_w + 2 * pad), spec.foreground_sigma, rng)
        fg_origin = translation(pad, 0)

    frames, raw = [], []
    for k, m in enumerate(frame_to_scene):
        values, valid = warp_perspective(scene, np.linalg.inv(m), (w, h))
        if not valid.all():
            raise SpecInvalid(f"frame {k} window leaves the scene raster")
        if foreground is not None:
            y0, y1 = spec.parallax_band
            fg_map = fg_origin @ translation(k * spec.parallax_offset, 0) @ m
            fg, _ = warp_perspective(foreground, np.linalg.inv(fg_map), (w, h))
            values[y0:y1] = fg[y0:y1]
        if k in spec.color_casts:
            gains, biases = spec.color_casts[k]
            values = values * np.asarray(gains, dtype=float) + np.asarray(biases, dtype=float)
        if spec.noise_sigma > 0:
            values = values + rng.normal(0.0, spec.noise_sigma * 255.0, values.shape)
        raw.append(values)
        frames.append(Frame(k, quantize(values)))

    inv = [np.linalg.inv(m) for m in frame_to_scene]
    pairwise = [inv[k] @ frame_to_scene[k - 1] for k in range(1, spec.n_frames)]
    global_ = [inv[0] @ m for m in frame_to_scene]
    pairwise = [p / p[2, 2] for p in pairwise]
    global_ = [g / g[2, 2] for g in global_]
    return SyntheticSequence(frames, pairwise, global_, frame_to_scene, scene, raw, spec)


def write_sequence(seq: SyntheticSequence, out_dir: str) -> str:
    """Write frames, the scene raster and a ground-truth manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for f in seq.frames:
        name = f"frame_{f.index:04d}.png"
        write_image(os.path.join(out_dir, name), f.pixels)
        names.append(name)
    # kept out of the frame directory so globbing the frames never picks it up
    write_image(os.path.join(out_dir, "gt", "scene.png"), seq.scene)
    spec = asdict(seq.spec)
    spec["color_casts"] = {str(k): [list(g), list(b)] for k, (g, b) in seq.spec.color_casts.items()}
    manifest = {
        "spec": spec,
        "frames": names,
        "scene": "gt/scene.png",
        "pairwise_homographies": [p.tolist() for p in seq.pairwise],
        "global_homographies": [g.tolist() for g in seq.global_],
        "frame_to_scene": [m.tolist() for m in seq.frame_to_scene],
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def load_spec(path: str) -> SceneSpec:
    with open(path) as fh:
        return SceneSpec.from_dict(json.load(fh))
