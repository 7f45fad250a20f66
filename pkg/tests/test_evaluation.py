import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import texture_image
from mosaic.errors import ZeroKeypoints
from mosaic.evaluation import (
    GroundTruth,
    MetricRow,
    evaluate_pair,
    gt_correspondence_count,
    recall_precision,
    repeatability,
    seam_gradient_peak,
    seam_pixels,
)
from mosaic.imaging import translation

SHIFT = GroundTruth(translation(10, 0))


def matched_points(n_correct, n_false, rng):
    left = rng.uniform(0, 100, (n_correct + n_false, 2))
    right = left + [10.0, 0.0]
    right[n_correct:] += rng.uniform(20, 40, (n_false, 2))
    return left, right


@pytest.mark.parametrize("row,expected", [((243, 257, 22), 0.044), ((262, 274, 31), 0.058), ((100, 100, 0), 0.0)])
def test_repeatability_rows(row, expected):
    assert repeatability(*row) == expected


def test_repeatability_accepts_lists():
    assert repeatability([1] * 3, [2] * 5, 2) == 0.25
    with pytest.raises(ZeroKeypoints):
        repeatability([], [], 0)


@pytest.mark.parametrize(
    "n_correct,n_false,total,expected",
    [(40, 0, 50, (0.8, 0.0)), (0, 0, 50, (0.0, 0.0)), (31, 9, 50, (0.62, 0.225))],
)
def test_recall_examples(n_correct, n_false, total, expected, rng):
    left, right = matched_points(n_correct, n_false, rng)
    assert recall_precision(left, right, SHIFT, total) == pytest.approx(expected)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 30), st.integers(0, 20), st.integers(0, 1000))
def test_recall_monotone_and_order_invariant(n_correct, n_false, seed):
    rng = np.random.default_rng(seed)
    left, right = matched_points(n_correct + 1, n_false, rng)
    fewer = recall_precision(left[1:], right[1:], SHIFT, 60)
    more = recall_precision(left, right, SHIFT, 60)
    assert fewer[0] <= more[0]
    perm = rng.permutation(len(left))
    assert recall_precision(left[perm], right[perm], SHIFT, 60) == more


def test_gt_correspondences():
    left = np.array([[5.0, 5.0], [95.0, 5.0], [20.0, 30.0]])
    right = np.array([[15.5, 5.0], [21.0, 21.0]])
    # second projects outside a 100-wide right image; third has no detection nearby
    assert gt_correspondence_count(left, right, SHIFT, (50, 100)) == 1


def test_evaluate_pair_on_shifted_texture():
    big = texture_image((96, 140), seed=9, sigma=2.0)
    left, right = big[:, 20:], big[:, :120]  # right = left moved by +20 px
    row = evaluate_pair(left, right, GroundTruth(translation(20, 0)))
    assert isinstance(row, MetricRow)
    assert row.matches > 10 and row.inliers > 10
    assert 0.0 <= row.repeatability <= 1.0
    assert row.recall > 0.5 and row.one_minus_precision < 0.2
    text = row.to_csv()
    assert text.splitlines()[0].startswith("left_keypoints,right_keypoints,matches,repeatability")


def test_seam_gradient_peak():
    img = np.zeros((10, 10))
    img[:, 5:] = 100.0
    mask = np.zeros((10, 10))
    mask[:, :5] = 1.0
    cov = np.ones((10, 10), bool)
    seam = seam_pixels(mask, cov, cov)
    assert seam[:, 4:6].all() and seam.sum() == 20
    assert seam_gradient_peak(img, seam) == pytest.approx(50.0)
    assert seam_gradient_peak(np.zeros((10, 10)), seam, rows=(2, 4)) == 0.0
