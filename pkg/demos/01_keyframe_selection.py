"""
Picking keyframes by block matching
===================================

A video pan repeats most of each frame in the next one.  We only want frames
that moved far enough from the last one we kept.  The offset between two
frames is measured by sliding a square block horizontally and scoring each
shift with the sum of absolute differences (SAD).
"""

import numpy as np

from mosaic import BlockMatchConfig, SceneSpec, generate_sequence, to_grayscale
from mosaic.selection import sad_block_offset, select_frame_indices

# %%
# A synthetic pan: 40 frames, 3 px of camera motion per frame.
seq = generate_sequence(SceneSpec(seed=4, frame_width=128, frame_height=64, n_frames=40, shift=(3.0, 0.0)))

# %%
# The offset between frame 0 and frame 5 should be 15 px (content moves left).
cfg = BlockMatchConfig(block_size=21, search_range=40)
m = sad_block_offset(to_grayscale(seq.frames[0]), to_grayscale(seq.frames[5]), cfg)
print("offset 0 -> 5:", m.displacement, "px, SAD", round(m.sad, 4))

# %%
# With a 30 px threshold every tenth frame is kept, plus the last one.
kept, measurements = select_frame_indices(seq.frames, cfg, offset_threshold=30)
print("kept frames:", kept)

# %%
# The measured offsets grow linearly until a keyframe resets the reference.
print("offsets:", [measurements[i].displacement for i in range(1, 12)])
assert kept == [0, 10, 20, 30, 39]
