"""End-to-end mosaicing: select, color-align, register, compose, warp, blend."""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .blending import blend_hard, blend_multiband, default_levels, max_levels
from .color import align_chain
from .cslbp import CslbpParams, describe_keypoints
from .detect import ScaleSpaceConfig, detect_keypoints
from .errors import InsufficientMatches, NoConsensus, RegistrationFailed, SingularHomography
from .imaging import Frame, apply_homography, normalize_homography, quantize, to_grayscale, translation, warp_perspective, write_image
from .registration import RansacConfig, estimate_homography, match_nndr
from .selection import BlockMatchConfig, select_frame_indices

log = logging.getLogger(__name__)

# corners are rounded to the nearest pixel so estimation noise cannot grow the canvas
CANVAS_EPS = 0.5


@dataclass
class PipelineConfig:
    block: BlockMatchConfig = field(default_factory=BlockMatchConfig)
    offset_threshold: float | None = None
    color_align: bool = True
    scale_space: ScaleSpaceConfig = field(default_factory=ScaleSpaceConfig)
    cslbp: CslbpParams = field(default_factory=CslbpParams)
    nndr_ratio: float = 0.8
    ransac: RansacConfig = field(default_factory=RansacConfig)
    blend: str = "multiband"
    blend_levels: int | None = None
    reference_frame_policy: str = "first"

    def __post_init__(self):
        if self.blend not in ("multiband", "none"):
            raise ValueError("blend must be 'multiband' or 'none'")
        if self.reference_frame_policy != "first":
            raise ValueError("only the 'first' reference frame policy is supported")
        if not 0 < self.nndr_ratio <= 1:
            raise ValueError("nndr_ratio must lie in (0, 1]")
        if self.blend_levels is not None and self.blend_levels < 1:
            raise ValueError("blend_levels must be >= 1")

    def check_frame_size(self, width: int, height: int):
        rng = self.block.range_for(width, height)
        if rng >= width:
            raise ValueError(f"search range {rng} must be smaller than the frame width {width}")

    def with_overrides(self, **values) -> "PipelineConfig":
        return config_from_mapping(values, base=self)


# flat config key -> (section, field, parser)
_KEYS = {
    "block_size": ("block", "block_size", int),
    "search_range": ("block", "search_range", int),
    "offset_threshold": (None, "offset_threshold", float),
    "color_align": (None, "color_align", None),
    "octaves": ("scale_space", "octaves", int),
    "scales_per_octave": ("scale_space", "scales_per_octave", int),
    "base_sigma": ("scale_space", "base_sigma", float),
    "contrast_threshold": ("scale_space", "contrast_threshold", float),
    "edge_ratio": ("scale_space", "edge_ratio_threshold", float),
    "max_keypoints": ("scale_space", "max_keypoints", int),
    "cslbp_radius": ("cslbp", "radius", float),
    "cslbp_neighbors": ("cslbp", "neighbors", int),
    "cslbp_threshold": ("cslbp", "threshold", float),
    "cslbp_grid": ("cslbp", "grid", int),
    "region_scale": ("cslbp", "region_scale", float),
    "vote_sharing": ("cslbp", "share_votes", None),
    "nndr_ratio": (None, "nndr_ratio", float),
    "ransac_p": ("ransac", "success_prob", float),
    "ransac_outlier_ratio": ("ransac", "assumed_outlier_ratio", float),
    "ransac_inlier_px": ("ransac", "inlier_threshold", float),
    "ransac_max_iter": ("ransac", "max_iterations", int),
    "seed": ("ransac", "rng_seed", int),
    "blend": (None, "blend", str),
    "blend_levels": (None, "blend_levels", int),
}


# keys whose value may be left unset ("auto"/"none" in a config file)
_NULLABLE = {"search_range", "offset_threshold", "octaves", "blend_levels"}


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def config_from_mapping(values: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply flat ``key -> value`` settings on top of ``base`` (or the defaults)."""
    cfg = base or PipelineConfig()
    top, sections = {}, {}
    for key, raw in values.items():
        if raw is None:
            continue
        if key not in _KEYS:
            raise ValueError(f"unknown config key: {key}")
        section, name, parse = _KEYS[key]
        parse = parse or _parse_bool
        if key in _NULLABLE and isinstance(raw, str) and raw.strip().lower() in ("none", "auto", ""):
            value = None
        else:
            value = parse(raw)
        if section is None:
            top[name] = value
        else:
            sections.setdefault(section, {})[name] = value
    for section, changes in sections.items():
        top[section] = dataclasses.replace(getattr(cfg, section), **changes)
    return dataclasses.replace(cfg, **top)


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def load_config(path: str) -> PipelineConfig:
    with open(path) as fh:
        return config_from_mapping(parse_config_text(fh.read()))


# -- report -------------------------------------------------------------------

@dataclass
class PairReport:
    source: int
    target: int
    keypoints_source: int
    keypoints_target: int
    matches: int
    inliers: int = 0
    mean_reproj_error: float | None = None
    iterations: int = 0
    homography: list | None = None
    error: str | None = None


@dataclass
class MosaicReport:
    selected_indices: list = field(default_factory=list)
    pairs: list = field(default_factory=list)
    global_homographies: list = field(default_factory=list)
    canvas: tuple | None = None
    canvas_offset: tuple | None = None
    blend: str = "multiband"
    blend_levels: list = field(default_factory=list)
    status: str = "ok"
    failed_pair: tuple | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        data = dataclasses.asdict(self)
        if not include_timings:
            data.pop("timings")
        return data

    def write(self, path: str):
        """Write the report JSON; timings go to a ``.timings.json`` sidecar so the report stays reproducible."""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        root, _ = os.path.splitext(path)
        with open(root + ".timings.json", "w") as fh:
            json.dump(self.timings, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class MosaicResult:
    image: np.ndarray  # float, [0, 255]
    coverage: np.ndarray
    report: MosaicReport

    def quantized(self) -> np.ndarray:
        return quantize(self.image)


# -- geometry -----------------------------------------------------------------

def compose_transforms(pairwise) -> list[np.ndarray]:
    """Chain ``H_{i <- i-1}`` (frame i-1 -> frame i) into maps from frame i to frame 0."""
    out = [np.eye(3)]
    for h in pairwise:
        h = normalize_homography(h)
        out.append(normalize_homography(out[-1] @ np.linalg.inv(h)))
    return out


def frame_corners(width: int, height: int) -> np.ndarray:
    return np.array([[0, 0], [width - 1, 0], [width - 1, height - 1], [0, height - 1]], dtype=np.float64)


def canvas_bounds(transforms, sizes):
    """Integer bounding box ``(x0, y0, width, height)`` of all warped frame corners."""
    pts = np.concatenate([apply_homography(h, frame_corners(w, ht)) for h, (w, ht) in zip(transforms, sizes)])
    if not np.all(np.isfinite(pts)):
        raise SingularHomography("a frame corner maps to infinity")
    x0, y0 = np.floor(pts.min(axis=0) + CANVAS_EPS)
    x1, y1 = np.ceil(pts.max(axis=0) - CANVAS_EPS)
    return int(x0), int(y0), int(x1 - x0) + 1, int(y1 - y0) + 1


def seam_mask(cov1: np.ndarray, cov2: np.ndarray) -> np.ndarray:
    """1 where image 1 is deeper inside its own footprint than image 2 is in its."""
    d1 = ndimage.distance_transform_edt(np.pad(cov1, 1))[1:-1, 1:-1]
    d2 = ndimage.distance_transform_edt(np.pad(cov2, 1))[1:-1, 1:-1]
    mask = np.where(cov1 & cov2, d1 > d2, cov1)
    return mask.astype(np.float64)


def _overlap_levels(overlap: np.ndarray, shape) -> int:
    rows = np.nonzero(overlap.any(axis=1))[0]
    cols = np.nonzero(overlap.any(axis=0))[0]
    levels = default_levels(cols[-1] - cols[0] + 1, rows[-1] - rows[0] + 1)
    return min(levels, max_levels(shape))


def compose_pair(acc, acc_cov, img, cov, blend="multiband", n_levels=None):
    """Fold ``img`` into the accumulator; returns ``(image, coverage, mask, levels)``.

    Outside the overlap each pixel comes from whichever image covers it: the
    uncovered side is filled with the other image before the pyramids are
    built, so only the overlap is actually mixed.
    """
    overlap = acc_cov & cov
    mask = seam_mask(acc_cov, cov)
    union = acc_cov | cov
    img1 = np.where(acc_cov[..., None], acc, img)
    img2 = np.where(cov[..., None], img, acc)
    levels = 0
    if blend == "none" or not overlap.any():
        out = blend_hard(img1, img2, mask)
    else:
        levels = n_levels or _overlap_levels(overlap, acc.shape)
        levels = min(levels, max_levels(acc.shape))
        out = blend_multiband(img1, img2, mask, levels)
    out = np.where(union[..., None], out, 0.0)
    return out, union, mask, levels


# -- orchestration ------------------------------------------------------------

@dataclass
class FrameFeatures:
    keypoints: list
    descriptors: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return np.array([(k.x, k.y) for k in self.keypoints], dtype=np.float64).reshape(-1, 2)


def extract_features(gray: np.ndarray, cfg: PipelineConfig) -> FrameFeatures:
    kps = detect_keypoints(gray, cfg.scale_space)
    kept, desc = describe_keypoints(gray, kps, cfg.cslbp)
    return FrameFeatures(kept, desc)


def register_pair(src: FrameFeatures, dst: FrameFeatures, cfg: PipelineConfig):
    """Returns ``(matches, RegistrationResult)`` for ``src -> dst``."""
    matches = match_nndr(src.descriptors, dst.descriptors, cfg.nndr_ratio)
    result = estimate_homography(matches, src.points, dst.points, cfg.ransac)
    return matches, result


def build_mosaic(frames, cfg: PipelineConfig | None = None, debug_dir: str | None = None) -> MosaicResult:
    """Run the whole pipeline on an ordered list of frames.

    Raises RegistrationFailed (carrying the partial report) when a consecutive
    pair of kept frames cannot be registered.
    """
    cfg = cfg or PipelineConfig()
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to mosaic")
    report = MosaicReport(blend=cfg.blend)
    height, width = frames[0].height, frames[0].width
    for f in frames:
        if (f.height, f.width) != (height, width):
            raise ValueError("all frames must share one size")
    timings = report.timings

    t = time.perf_counter()
    if len(frames) > 1:
        cfg.check_frame_size(width, height)
        kept, _ = select_frame_indices(frames, cfg.block, cfg.offset_threshold)
    else:
        kept = [0]
    kept_frames = [frames[i] for i in kept]
    report.selected_indices = [f.index for f in kept_frames]
    timings["selection"] = time.perf_counter() - t

    t = time.perf_counter()
    images = [f.as_float() for f in kept_frames]
    if cfg.color_align:
        images = align_chain(images)
    timings["color_alignment"] = time.perf_counter() - t

    t = time.perf_counter()
    features = [extract_features(to_grayscale(img), cfg) for img in images] if len(images) > 1 else []
    timings["features"] = time.perf_counter() - t

    t = time.perf_counter()
    pairwise = []
    for k in range(1, len(images)):
        src, dst = features[k - 1], features[k]
        entry = PairReport(report.selected_indices[k - 1], report.selected_indices[k], len(src.keypoints), len(dst.keypoints), 0)
        report.pairs.append(entry)
        try:
            matches, result = register_pair(src, dst, cfg)
        except (InsufficientMatches, NoConsensus) as exc:
            entry.matches = len(match_nndr(src.descriptors, dst.descriptors, cfg.nndr_ratio))
            entry.error = f"{type(exc).__name__}: {exc}"
            report.status = "failed"
            report.failed_pair = (entry.source, entry.target)
            timings["registration"] = time.perf_counter() - t
            raise RegistrationFailed(
                f"frames {entry.source} -> {entry.target}: {entry.error}", report, report.failed_pair
            ) from exc
        entry.matches = len(matches)
        entry.inliers = result.inlier_count
        entry.mean_reproj_error = result.mean_reproj_error
        entry.iterations = result.iterations_used
        entry.homography = result.homography.tolist()
        pairwise.append(result.homography)
        if debug_dir:
            _dump_pair(debug_dir, entry, matches, result)
    timings["registration"] = time.perf_counter() - t

    t = time.perf_counter()
    transforms = compose_transforms(pairwise)
    report.global_homographies = [h.tolist() for h in transforms]
    x0, y0, cw, ch = canvas_bounds(transforms, [(width, height)] * len(images))
    report.canvas = (cw, ch)
    report.canvas_offset = (-x0, -y0)
    shift = translation(-x0, -y0)
    warped = [warp_perspective(img, shift @ h, (cw, ch)) for img, h in zip(images, transforms)]
    timings["warping"] = time.perf_counter() - t

    t = time.perf_counter()
    acc, acc_cov = warped[0]
    for img, cov in warped[1:]:
        acc, acc_cov, _, levels = compose_pair(acc, acc_cov, img, cov, cfg.blend, cfg.blend_levels)
        report.blend_levels.append(levels)
    timings["blending"] = time.perf_counter() - t

    if debug_dir:
        _dump_debug(debug_dir, kept_frames, images, features, cfg)
    return MosaicResult(acc, acc_cov, report)


def _dump_pair(debug_dir, entry, matches, result):
    os.makedirs(debug_dir, exist_ok=True)
    data = {
        "source": entry.source,
        "target": entry.target,
        "matches": [dataclasses.asdict(m) for m in matches],
        "inlier_mask": result.inlier_mask.tolist(),
        "homography": result.homography.tolist(),
    }
    with open(os.path.join(debug_dir, f"matches_{entry.source:04d}_{entry.target:04d}.json"), "w") as fh:
        json.dump(data, fh)


def write_descriptors(path_stem: str, features: FrameFeatures, params: CslbpParams):
    """Descriptors as a raw little-endian float32 matrix plus a JSON header."""
    mat = np.ascontiguousarray(features.descriptors, dtype="<f4")
    mat.tofile(path_stem + ".bin")
    header = {
        "rows": int(mat.shape[0]),
        "cols": int(mat.shape[1]) if mat.ndim == 2 else 0,
        "dtype": "float32-le",
        "params": dataclasses.asdict(params),
        "keypoints": [dataclasses.asdict(k) for k in features.keypoints],
    }
    with open(path_stem + ".json", "w") as fh:
        json.dump(header, fh)


def read_descriptors(path_stem: str):
    with open(path_stem + ".json") as fh:
        header = json.load(fh)
    mat = np.fromfile(path_stem + ".bin", dtype="<f4").reshape(header["rows"], header["cols"])
    return header, mat


def _overlay(img: np.ndarray, keypoints) -> np.ndarray:
    out = quantize(img).copy()
    h, w = out.shape[:2]
    for kp in keypoints:
        x, y = int(round(kp.x)), int(round(kp.y))
        r = max(2, int(round(kp.scale)))
        out[y, max(0, x - r):min(w, x + r + 1)] = (255, 0, 0)
        out[max(0, y - r):min(h, y + r + 1), x] = (255, 0, 0)
    return out


def _dump_debug(debug_dir, kept_frames, images, features, cfg):
    os.makedirs(debug_dir, exist_ok=True)
    for k, (f, img) in enumerate(zip(kept_frames, images)):
        write_image(os.path.join(debug_dir, f"aligned_{f.index:04d}.png"), img)
        if features:
            write_image(os.path.join(debug_dir, f"keypoints_{f.index:04d}.png"), _overlay(img, features[k].keypoints))
            write_descriptors(os.path.join(debug_dir, f"descriptors_{f.index:04d}"), features[k], cfg.cslbp)


def mean_corner_error(estimated, truth, width: int, height: int) -> float:
    """Mean distance between frame corners mapped by two homographies."""
    corners = frame_corners(width, height)
    a = apply_homography(np.asarray(estimated), corners)
    b = apply_homography(np.asarray(truth), corners)
    return float(np.mean(np.linalg.norm(a - b, axis=1)))

