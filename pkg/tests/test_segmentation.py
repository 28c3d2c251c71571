import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dmdseg.errors import EmptySegmentationError, ValidationError
from dmdseg.segmentation import (
    binarize,
    connected_components,
    histogram_bins,
    largest_component,
    normalize01,
    otsu_from_histogram,
    otsu_threshold,
    parse_threshold,
    segment,
    segment_steps,
)
from oracles import area_multiset, flood_fill, otsu_bruteforce, partition


def test_normalize_examples():
    np.testing.assert_allclose(normalize01(np.array([2.0, 6.0, 10.0])), [0, 0.5, 1])
    np.testing.assert_array_equal(normalize01(np.full((3, 3), 4.2)), np.zeros((3, 3)))


@given(arrays(np.float64, (5, 6), elements=st.floats(-1e6, 1e6)))
def test_normalize_range(img):
    out = normalize01(img)
    if img.max() > img.min():
        assert out.min() == 0 and out.max() == 1
    else:
        assert not out.any()


def test_histogram_bin_edges():
    v = np.array([0.0, 1 / 256, 1 / 256 + 1e-12, 0.5, 1.0])
    np.testing.assert_array_equal(histogram_bins(v), [0, 0, 1, 127, 255])


def test_otsu_bimodal_half_half():
    img = np.array([0.1] * 50 + [0.9] * 50)
    thr = otsu_threshold(img)
    assert 0.1 < thr < 0.9
    assert binarize(img, thr).sum() == 50


def test_otsu_constant_image():
    img = np.full((4, 4), 0.3)
    assert otsu_threshold(img) == 0.0
    assert not binarize(normalize01(img), otsu_threshold(normalize01(img))).any()


def test_otsu_rejects_unnormalized():
    with pytest.raises(ValidationError):
        otsu_threshold(np.array([0.0, 2.0]))


def test_otsu_random_bimodal_matches_bruteforce(rng):
    img = np.clip(np.concatenate([rng.normal(0.25, 0.08, 3000), rng.normal(0.7, 0.1, 2000)]), 0, 1)
    hist = np.bincount(histogram_bins(img), minlength=256)
    t = otsu_bruteforce(list(hist))
    assert otsu_threshold(img) == (t + 1) / 256


@given(st.lists(st.integers(0, 50), min_size=256, max_size=256))
@settings(max_examples=40, deadline=None)
def test_otsu_histogram_property(hist):
    assert otsu_from_histogram(hist) == otsu_bruteforce(hist)


def test_otsu_threshold_separates_like_bins(rng):
    # every pixel at or below the threshold is in a background bin
    img = normalize01(rng.random((20, 20)))
    thr = otsu_threshold(img)
    t = round(thr * 256) - 1
    np.testing.assert_array_equal(binarize(img, thr), histogram_bins(img) > t)


def test_binarize_strict():
    img = np.array([0.0, 0.5, 0.50001, 1.0])
    np.testing.assert_array_equal(binarize(img, 0.5), [False, False, True, True])
    np.testing.assert_array_equal(binarize(img, 0.0), [False, True, True, True])
    assert not binarize(img, 1.0).any()


def test_components_hand_example():
    mask = np.zeros((3, 3), bool)
    mask[0, 0] = mask[0, 1] = mask[1, 1] = mask[2, 2] = True
    # (1,1) touches (2,2) diagonally, so under 8-connectivity all four merge
    lc8 = connected_components(mask, 8)
    lc4 = connected_components(mask, 4)
    assert lc4.count == 2 and sorted(lc4.areas) == [1, 3]
    assert lc8.count == 1 and list(lc8.areas) == [4]


def test_components_hand_example_separated():
    # the same shapes with (2,2) moved out of diagonal contact
    mask = np.zeros((3, 4), bool)
    mask[0, 0] = mask[0, 1] = mask[1, 1] = mask[2, 3] = True
    for conn in (4, 8):
        lc = connected_components(mask, conn)
        assert lc.count == 2 and sorted(lc.areas) == [1, 3]


def test_components_diagonal_pair():
    mask = np.eye(2, dtype=bool)
    assert connected_components(mask, 8).count == 1
    assert connected_components(mask, 4).count == 2


def test_components_raster_order_labels():
    mask = np.array([[0, 0, 1], [1, 0, 1], [1, 0, 0]], bool)
    lc = connected_components(mask, 4)
    assert lc.labels[0, 2] == 1 and lc.labels[1, 0] == 2


def test_components_bad_connectivity():
    with pytest.raises(ValidationError):
        connected_components(np.ones((2, 2), bool), 6)


def test_largest_component_examples():
    lc = connected_components(np.array([[1, 1, 0, 1], [0, 1, 0, 0]], bool), 4)
    np.testing.assert_array_equal(largest_component(lc), [[1, 1, 0, 0], [0, 1, 0, 0]])
    tie = connected_components(np.array([[1, 0, 1], [1, 0, 1]], bool), 4)
    np.testing.assert_array_equal(largest_component(tie), [[1, 0, 0], [1, 0, 0]])
    np.testing.assert_array_equal(largest_component(tie, top_k=2), tie.labels > 0)
    with pytest.raises(EmptySegmentationError):
        largest_component(connected_components(np.zeros((3, 3), bool)))
    with pytest.raises(ValidationError):
        largest_component(tie, top_k=0)


def test_segment_rectangle():
    img = np.zeros((12, 10))
    img[3:7, 2:8] = 5.0
    np.testing.assert_array_equal(segment(img), img > 0)


def test_segment_two_blobs_keeps_larger():
    img = np.zeros((16, 16))
    img[1:4, 1:4] = 1.0
    img[8:14, 6:12] = 1.0
    out = segment(img)
    expected = np.zeros_like(out)
    expected[8:14, 6:12] = True
    np.testing.assert_array_equal(out, expected)
    np.testing.assert_array_equal(segment(img, top_k=2), img > 0)


def test_segment_fixed_threshold():
    img = np.array([[0.0, 0.3, 0.6, 1.0]])
    seg = segment_steps(img, threshold="fixed:0.5")
    assert seg.threshold == 0.5
    np.testing.assert_array_equal(seg.template, [[False, False, True, True]])


@pytest.mark.parametrize("spec, value", [("otsu", "otsu"), ("fixed:0.25", 0.25), ("0.7", 0.7), (1, 1.0)])
def test_parse_threshold(spec, value):
    assert parse_threshold(spec) == value


@pytest.mark.parametrize("spec", ["fixed:2", "median", "fixed:"])
def test_parse_threshold_rejects(spec):
    with pytest.raises(ValidationError):
        parse_threshold(spec)


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
@settings(max_examples=60, deadline=None)
def test_segment_affine_invariant(seed, scale, shift):
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 8, size=(12, 12)).astype(np.float64)
    if img.max() == img.min():
        return
    base = segment(img)
    np.testing.assert_array_equal(segment(scale * img + shift), base)


@given(st.integers(0, 2**32 - 1), st.sampled_from([4, 8]), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_template_is_connected_subset(seed, conn, top_k):
    rng = np.random.default_rng(seed)
    img = rng.random((14, 14))
    seg = segment_steps(img, connectivity=conn, top_k=top_k)
    assert not np.any(seg.template & ~seg.binary)
    _, n = flood_fill(seg.template, conn)
    assert n == min(top_k, seg.components.count)


@given(st.integers(0, 2**32 - 1), st.sampled_from([4, 8]))
@settings(max_examples=80, deadline=None)
def test_components_match_flood_fill(seed, conn):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(1, 20, size=2)
    mask = rng.random((h, w)) < rng.uniform(0.2, 0.7)
    lc = connected_components(mask, conn)
    ref, n = flood_fill(mask, conn)
    assert lc.count == n
    # raster first-encounter labeling coincides label for label
    np.testing.assert_array_equal(lc.labels, ref)
    assert partition(lc.labels) == partition(ref)
    assert area_multiset(lc.labels) == area_multiset(ref)
