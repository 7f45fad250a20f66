"""
Matching colors between frames
==============================

Underwater footage drifts in color as lighting and depth change.  Each channel
of a frame is shifted and stretched so its mean and standard deviation match
the previous (already corrected) frame.
"""

import numpy as np

from mosaic import SceneSpec, align_colors, generate_sequence
from mosaic.color import channel_stats

seq = generate_sequence(SceneSpec(seed=1, n_frames=2, shift=(10.0, 0.0), color_casts={1: ((1.25, 1.0, 0.8), (-10.0, 0.0, 15.0))}))
ref, cast = seq.frames

# %%
# Channel statistics before correction.
for name, f in (("reference", ref), ("cast", cast)):
    print(name, [(round(s.mean, 1), round(s.std, 1)) for s in channel_stats(f.as_float())])

# %%
# After correction the cast frame carries the reference palette.
fixed = align_colors(cast, ref)
print("aligned  ", [(round(s.mean, 1), round(s.std, 1)) for s in channel_stats(fixed.as_float())])

# %%
# The overlap between the two frames now agrees closely.
before = np.abs(ref.as_float()[:, 10:] - cast.as_float()[:, :-10]).mean()
after = np.abs(ref.as_float()[:, 10:] - fixed.as_float()[:, :-10]).mean()
print(f"mean abs difference in the overlap: {before:.1f} -> {after:.1f}")
