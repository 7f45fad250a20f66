"""
Keypoints and texture descriptors
=================================

Keypoints come from a difference-of-Gaussians scale space.  Around each one
we code every pixel with a centre-symmetric local binary pattern (CS-LBP):
four comparisons of opposite neighbours give a 4-bit code, so only 16
patterns exist.  Code histograms over a 4x4 grid of cells form a 256-long
descriptor.
"""

import sys

import numpy as np

from mosaic import CslbpParams, ScaleSpaceConfig, SceneSpec, detect_keypoints, generate_sequence, to_grayscale
from mosaic.cslbp import cslbp_codes, describe_keypoints
from mosaic.imaging import write_image
from mosaic.pipeline import _overlay

out_dir = sys.argv[1] if len(sys.argv) > 1 else "demo_output"

# %%
# The 16 possible codes all show up on a noisy image.
codes = cslbp_codes(np.random.default_rng(0).random((64, 64)))
print("distinct codes:", np.unique(codes).size)

# %%
# Detect keypoints on a synthetic frame.
frame = generate_sequence(SceneSpec(seed=2, n_frames=1)).frames[0]
gray = to_grayscale(frame)
kps = detect_keypoints(gray, ScaleSpaceConfig())
print(len(kps), "keypoints; strongest at", (round(kps[0].x, 1), round(kps[0].y, 1)), "scale", round(kps[0].scale, 2))

# %%
# Describe them.  Keypoints whose region leaves the frame are dropped.
kept, desc = describe_keypoints(gray, kps, CslbpParams())
print(desc.shape[0], "descriptors of length", desc.shape[1], "| norms", np.round(np.linalg.norm(desc, axis=1)[:3], 6))

write_image(f"{out_dir}/keypoints.png", _overlay(frame.as_float(), kept))
print("overlay written to", f"{out_dir}/keypoints.png")
