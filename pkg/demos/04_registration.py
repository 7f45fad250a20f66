"""
Matching and robust homography fitting
======================================

Descriptors are matched with the nearest-neighbour distance ratio test, then
RANSAC picks the homography most matches agree with.  The number of RANSAC
trials adapts to the inlier ratio found so far.
"""

import numpy as np

from mosaic import PipelineConfig, RansacConfig, SceneSpec, generate_sequence, ransac_iterations, to_grayscale
from mosaic.pipeline import extract_features, mean_corner_error, register_pair

# %%
# Trials needed for 99% confidence at several outlier ratios.
for v in (0.2, 0.5, 0.7):
    print(f"outlier ratio {v}: {ransac_iterations(RansacConfig(), v)} trials")

# %%
# Register two frames of a synthetic pan with some rotation and scale.
seq = generate_sequence(SceneSpec(seed=5, n_frames=2, shift=(35.0, 4.0), motion="affine", jitter=2.0, noise_sigma=0.01))
cfg = PipelineConfig()
a, b = (extract_features(to_grayscale(f), cfg) for f in seq.frames)
matches, result = register_pair(a, b, cfg)
print(f"{len(matches)} matches, {result.inlier_count} inliers after {result.iterations_used} trials")
print("mean reprojection error:", round(result.mean_reproj_error, 3), "px")

# %%
# Compare with the generator's ground truth through the frame corners.
err = mean_corner_error(np.linalg.inv(result.homography), seq.global_[1], 160, 120)
print("mean corner error vs ground truth:", round(err, 3), "px")
print(np.round(result.homography, 4))
