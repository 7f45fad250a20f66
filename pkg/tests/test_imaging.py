import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import texture_image
from mosaic.errors import SingularHomography
from mosaic.imaging import (
    Frame, apply_homography, list_frame_files, load_frames, normalize_homography,
    read_image, to_grayscale, translation, warp_perspective, write_image,
)


def solid(rgb, shape=(4, 5)):
    return Frame(0, np.broadcast_to(np.array(rgb, np.uint8), shape + (3,)).copy())


def test_grayscale_white_black_red():
    assert np.all(to_grayscale(solid((255, 255, 255))) == 1.0)
    assert np.all(to_grayscale(solid((0, 0, 0))) == 0.0)
    np.testing.assert_allclose(to_grayscale(solid((255, 0, 0))), 0.299, atol=1e-6)


def test_grayscale_keeps_dimensions():
    g = to_grayscale(solid((10, 20, 30), (7, 3)))
    assert g.shape == (7, 3)


@given(st.integers(0, 255))
def test_grayscale_of_replicated_gray_is_that_gray(v):
    np.testing.assert_allclose(to_grayscale(solid((v, v, v))), v / 255.0, atol=1e-12)


def test_frame_validation():
    with pytest.raises(ValueError):
        Frame(0, np.zeros((4, 4), np.uint8))
    with pytest.raises(ValueError):
        Frame(0, np.zeros((0, 4, 3), np.uint8))


def test_identity_warp_is_exact():
    img = texture_image((40, 50), seed=1)
    out, mask = warp_perspective(img, np.eye(3), (50, 40))
    assert np.array_equal(out, img)
    assert mask.all()


def test_translation_warp_matches_index_shift():
    rng = np.random.default_rng(0)
    img = rng.random((64, 64))
    out, mask = warp_perspective(img, translation(5, 0), (64, 64), fill=-1.0)
    np.testing.assert_array_equal(out[:, 5:], img[:, :-5])
    assert np.all(out[:, :5] == -1.0)
    assert not mask[:, :5].any() and mask[:, 5:].all()


def test_warp_everything_outside():
    img = np.ones((10, 10))
    out, mask = warp_perspective(img, translation(500, 500), (10, 10), fill=0.25)
    assert not mask.any()
    assert np.all(out == 0.25)


def test_warp_color_frame():
    f = solid((10, 200, 30), (8, 8))
    out, mask = warp_perspective(f, translation(2, 1), (12, 12))
    assert out.shape == (12, 12, 3)
    np.testing.assert_allclose(out[mask], np.tile([10.0, 200.0, 30.0], (mask.sum(), 1)))
    assert mask.sum() == 64


def test_singular_homography_rejected():
    with pytest.raises(SingularHomography):
        warp_perspective(np.ones((5, 5)), np.zeros((3, 3)), (5, 5))
    with pytest.raises(SingularHomography):
        normalize_homography([[1, 2, 0], [2, 4, 0], [0, 0, 1]])


def test_round_trip_warp_reproduces_interior():
    img = texture_image((80, 90), seed=3, sigma=8.0)
    h = np.array([[0.98, 0.04, 3.2], [-0.03, 1.01, -2.1], [2e-4, -1e-4, 1.0]])
    fwd, _ = warp_perspective(img, h, (90, 80))
    back, mask = warp_perspective(fwd, np.linalg.inv(h), (90, 80))
    # interior pixels whose forward sample was also valid
    _, fwd_mask = warp_perspective(np.ones_like(img), h, (90, 80))
    valid_back, _ = warp_perspective(fwd_mask.astype(float), np.linalg.inv(h), (90, 80))
    keep = mask & (valid_back > 0.999)
    keep[:2] = keep[-2:] = False
    keep[:, :2] = keep[:, -2:] = False
    assert keep.sum() > 0.7 * img.size
    assert np.abs(back - img)[keep].max() <= 2 / 255


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20), st.floats(-5, 5), st.floats(-5, 5))
def test_enlarging_canvas_keeps_mask(extra_w, extra_h, tx, ty):
    img = np.ones((12, 15))
    h = translation(tx, ty)
    _, small = warp_perspective(img, h, (15, 12))
    _, large = warp_perspective(img, h, (15 + extra_w, 12 + extra_h))
    assert np.array_equal(large[:12, :15], small)


def test_apply_homography():
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    np.testing.assert_allclose(apply_homography(translation(3, -1), pts), [[3, -1], [4, 1]])


def test_png_and_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    px = rng.integers(0, 256, (9, 11, 3), dtype=np.uint8)
    for name in ("a.png", "b.ppm"):
        write_image(tmp_path / name, px)
        assert np.array_equal(read_image(tmp_path / name), px)
    assert (tmp_path / "b.ppm").read_bytes().startswith(b"P6")


def test_frame_ingestion_is_lexicographic(tmp_path):
    for name in ("f_10.png", "f_02.png", "f_01.ppm", "notes.txt"):
        path = tmp_path / name
        if name.endswith("txt"):
            path.write_text("x")
        else:
            write_image(path, np.full((4, 4, 3), len(name), np.uint8))
    names = [p.rsplit("/", 1)[-1] for p in list_frame_files(str(tmp_path))]
    assert names == ["f_01.ppm", "f_02.png", "f_10.png"]
    frames = load_frames(str(tmp_path / "f_*.png"))
    assert [f.index for f in frames] == [0, 1]
    assert frames[0].source.endswith("f_02.png")
