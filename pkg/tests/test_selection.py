import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from conftest import texture_image
from mosaic.errors import PatchOutOfBounds
from mosaic.imaging import Frame
from mosaic.selection import BlockMatchConfig, sad_block_offset, select_frame_indices, select_frames
from mosaic.synthetic import SceneSpec, generate_sequence


def brute_force_offset(reference, target, n, rng, cx, cy):
    """Every shift scored independently; ties -> smaller |d| -> negative d."""
    half = n // 2
    ref = reference[cy - half:cy + half + 1, cx - half:cx + half + 1]
    windows = sliding_window_view(target[cy - half:cy + half + 1], n, axis=1)
    scores = {}
    for d in range(-rng, rng + 1):
        scores[d] = np.abs(windows[:, cx - half + d, :] - ref).sum()
    best = min(scores.values())
    return min((d for d, s in scores.items() if s == best), key=lambda d: (abs(d), d)), best


def test_identical_frames_zero_offset():
    img = texture_image((60, 80), seed=0)
    m = sad_block_offset(img, img, BlockMatchConfig(search_range=10))
    assert (m.displacement, m.sad) == (0, 0.0)


def test_shifted_texture_found_exactly():
    img = texture_image((60, 100), seed=1)
    shifted = np.zeros_like(img)
    shifted[:, 7:] = img[:, :-7]
    cfg = BlockMatchConfig(block_size=15, search_range=12)
    m = sad_block_offset(img, shifted, cfg)
    assert (m.displacement, m.sad) == brute_force_offset(img, shifted, 15, 12, 50, 30)
    assert (m.displacement, m.sad) == (7, 0.0)


def test_flat_frames_tie_break_to_zero():
    flat = np.full((40, 60), 0.4)
    m = sad_block_offset(flat, flat, BlockMatchConfig(search_range=5))
    assert (m.displacement, m.sad) == (0, 0.0)


def test_tie_break_prefers_negative():
    # a periodic row pattern makes d = -4 and d = +4 equally good
    x = np.arange(80)
    img = np.tile(((x // 2) % 4 == 0).astype(float), (30, 1))
    ref = img.copy()
    ref[:, 40] = 0.5  # break the d = 0 solution only
    cfg = BlockMatchConfig(block_size=3, search_range=6, patch_center=(40, 15))
    got = sad_block_offset(ref, img, cfg)
    assert (got.displacement, got.sad) == brute_force_offset(ref, img, 3, 6, 40, 15)


@pytest.mark.parametrize("seed", range(5))
def test_matches_brute_force_on_noisy_pairs(seed):
    rng = np.random.default_rng(seed)
    a = texture_image((50, 90), seed=seed)
    b = np.roll(a, rng.integers(-9, 10), axis=1) + rng.normal(0, 0.02, a.shape)
    cfg = BlockMatchConfig(block_size=9, search_range=10)
    got = sad_block_offset(a, b, cfg)
    want = brute_force_offset(a, b, 9, 10, 45, 25)
    assert got.displacement == want[0]
    assert got.sad == pytest.approx(want[1], abs=1e-9)


def test_patch_out_of_bounds():
    img = np.zeros((30, 40))
    with pytest.raises(PatchOutOfBounds):
        sad_block_offset(img, img, BlockMatchConfig(block_size=21, search_range=15))
    with pytest.raises(PatchOutOfBounds):
        sad_block_offset(img, img, BlockMatchConfig(block_size=5, search_range=2, patch_center=(20, 1)))


def test_config_validation():
    with pytest.raises(ValueError):
        BlockMatchConfig(block_size=4)
    with pytest.raises(ValueError):
        BlockMatchConfig(block_size=1)
    with pytest.raises(ValueError):
        BlockMatchConfig(search_range=0)


def test_identical_sequence_keeps_first_and_last():
    img = (texture_image((40, 64), seed=2)[..., None] * 255).repeat(3, axis=2)
    frames = [Frame(i, img.astype(np.uint8)) for i in range(6)]
    kept = select_frames(frames, BlockMatchConfig(), offset_threshold=10)
    assert [f.index for f in kept] == [0, 5]


def test_single_frame():
    f = Frame(0, np.zeros((40, 40, 3), np.uint8))
    assert select_frames([f], BlockMatchConfig()) == [f]


def simulated_keyframes(shifts, threshold, n_frames):
    """Threshold rule replayed on ground-truth cumulative shifts."""
    kept = [0]
    for i in range(1, n_frames):
        if abs(shifts[i] - shifts[kept[-1]]) >= threshold:
            kept.append(i)
    if kept[-1] != n_frames - 1:
        kept.append(n_frames - 1)
    return kept


def test_linear_pan_keyframes():
    seq = generate_sequence(SceneSpec(seed=4, frame_width=128, frame_height=64, n_frames=40, shift=(3.0, 0.0)))
    cfg = BlockMatchConfig(search_range=40)
    kept, measurements = select_frame_indices(seq.frames, cfg, offset_threshold=30)
    assert kept == simulated_keyframes([3 * i for i in range(40)], 30, 40)
    assert kept == [0, 10, 20, 30, 39]
    # noise-free translation: measured offset equals ground truth
    for i, m in measurements.items():
        ref = max(k for k in kept if k < i)
        assert m.displacement == -3 * (i - ref)
    for i, m in measurements.items():
        if i not in kept:
            assert abs(m.displacement) < 30


def test_saturated_search_range_keeps_frame():
    seq = generate_sequence(SceneSpec(seed=5, frame_width=128, frame_height=64, n_frames=6, shift=(4.0, 0.0)))
    kept, _ = select_frame_indices(seq.frames, BlockMatchConfig(search_range=8), offset_threshold=50)
    assert kept == [0, 2, 4, 5]


def test_output_is_ordered_subsequence():
    seq = generate_sequence(SceneSpec(seed=6, n_frames=15, shift=(6.0, 0.0), noise_sigma=0.01))
    kept, _ = select_frame_indices(seq.frames, BlockMatchConfig())
    assert kept[0] == 0 and kept == sorted(set(kept))
