"""
Scoring feature matches
=======================

Repeatability, recall and 1-precision for an image pair with a known
homography.  Repeatability here is matches / (left keypoints + right
keypoints).
"""

from mosaic import GroundTruth, SceneSpec, evaluate_pair, generate_sequence, repeatability, to_grayscale

# %%
# Published-style rows reproduce from their raw counts.
for row in ((243, 257, 22), (262, 274, 31)):
    print(row, "->", repeatability(*row))

# %%
# A synthetic pair.  The ground truth maps left-frame points to right-frame points.
seq = generate_sequence(SceneSpec(seed=6, n_frames=2, shift=(30.0, 0.0), noise_sigma=0.01))
gt = GroundTruth(seq.pairwise[0], tolerance_px=3.0)
row = evaluate_pair(to_grayscale(seq.frames[0]), to_grayscale(seq.frames[1]), gt)
print(row)
print(row.to_csv(), end="")
