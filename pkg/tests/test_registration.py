import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mosaic.errors import NoConsensus
from mosaic.imaging import apply_homography, normalize_homography
from mosaic.registration import (
    Match,
    RansacConfig,
    estimate_homography,
    fit_homography,
    match_nndr,
    ransac_iterations,
    symmetric_error,
)

H_TRUE = normalize_homography(np.array([[1.02, 0.03, 12.0], [-0.02, 0.98, -4.0], [1e-4, -5e-5, 1.0]]))


def loop_iterations(p, v, s, cap):
    """Smallest N with 1 - (1 - (1-v)^s)^N >= p, by counting."""
    if v <= 0:
        return 1
    miss, n = 1.0, 0
    while n < cap:
        n += 1
        miss *= 1 - (1 - v) ** s
        if 1 - miss >= p:
            return n
    return cap


def test_nndr_examples():
    q = np.array([[0.0, 0.0], [5.0, 5.0]])
    t = np.array([[0.1, 0.0], [3.0, 0.0], [5.0, 5.1], [5.0, 4.88]])  # second query: ratio 0.1/0.12 > 0.8
    m = match_nndr(q, t, 0.8)
    assert [(x.query_idx, x.train_idx) for x in m] == [(0, 0)]
    assert m[0].ratio == pytest.approx(0.1 / 3.0)
    assert match_nndr(q, t[:1]) == []
    assert match_nndr(np.zeros((0, 2)), t) == []


def test_nndr_train_unique(rng):
    t = rng.random((10, 8))
    q = np.vstack([t[3] + 0.001, t[3] + 0.002, t[5]])
    m = match_nndr(q, t, 0.9)
    assert [(x.query_idx, x.train_idx) for x in m] == [(0, 3), (2, 5)]


@pytest.mark.parametrize("v,expected", [(0.5, 72), (0.2, 9), (0.0, 1)])
def test_iteration_count(v, expected):
    cfg = RansacConfig()
    assert ransac_iterations(cfg, v) == expected == loop_iterations(0.99, v, 4, cfg.max_iterations)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.0, 0.9))
def test_iterations_monotone_in_outlier_ratio(a, b):
    cfg = RansacConfig(max_iterations=10**6)
    lo, hi = sorted((a, b))
    assert ransac_iterations(cfg, lo) <= ransac_iterations(cfg, hi)
    assert ransac_iterations(cfg, lo) == loop_iterations(0.99, lo, 4, 10**6)


def _as_matches(n):
    return [Match(i, i, 0.0, 0.0) for i in range(n)]


def _frob(a, b):
    return np.linalg.norm(normalize_homography(a) - normalize_homography(b))


def test_exact_points(rng):
    src = rng.uniform(0, 200, (20, 2))
    dst = apply_homography(H_TRUE, src)
    assert _frob(fit_homography(src, dst), H_TRUE) < 1e-6
    res = estimate_homography(_as_matches(20), src, dst)
    assert _frob(res.homography, H_TRUE) < 1e-6
    assert res.inlier_count == 20


def test_outliers_rejected():
    rng = np.random.default_rng(42)
    src = rng.uniform(0, 300, (100, 2))
    dst = apply_homography(H_TRUE, src) + rng.normal(0, 0.3, (100, 2))
    outliers = rng.choice(100, 30, replace=False)
    dst[outliers] = rng.uniform(0, 300, (30, 2))
    truth = np.ones(100, bool)
    truth[outliers] = False
    res = estimate_homography(_as_matches(100), src, dst)
    assert np.count_nonzero(res.inlier_mask & truth) >= 68
    assert res.mean_reproj_error < 1.0


def test_collinear_has_no_consensus():
    src = np.array([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [5.0, 30.0]])
    with pytest.raises(NoConsensus):
        estimate_homography(_as_matches(4), src, src + 3.0)


def test_seeded_determinism_and_inlier_threshold(rng):
    src = rng.uniform(0, 200, (60, 2))
    dst = apply_homography(H_TRUE, src) + rng.normal(0, 0.5, (60, 2))
    dst[:15] = rng.uniform(0, 200, (15, 2))
    a = estimate_homography(_as_matches(60), src, dst, RansacConfig(rng_seed=7))
    b = estimate_homography(_as_matches(60), src, dst, RansacConfig(rng_seed=7))
    assert np.array_equal(a.homography, b.homography) and np.array_equal(a.inlier_mask, b.inlier_mask)
    assert a.iterations_used == b.iterations_used <= 2000
    err = symmetric_error(a.homography, src, dst)
    assert np.all(err[a.inlier_mask] < 3.0)
    assert math.isfinite(a.mean_reproj_error)


def test_config_validation():
    with pytest.raises(ValueError):
        RansacConfig(success_prob=1.0)
    with pytest.raises(ValueError):
        RansacConfig(sample_size=5)
