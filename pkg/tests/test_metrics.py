import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from munet.masks import ObjectMask
from munet.metrics import (
    boundary_f,
    boundary_f_exact,
    boundary_pixels,
    default_tolerance,
    frame_scores,
    jaccard_j,
)
from munet.oracles import boundary_f_bipartite
from munet.tensor_core import ShapeError


def _offset_squares():
    a = np.zeros((16, 16), int)
    b = np.zeros((16, 16), int)
    a[4:12, 2:10] = 1
    b[4:12, 6:14] = 1
    return a, b


def _blob(rng, shape=(32, 32)):
    return (ndimage.gaussian_filter(rng.standard_normal(shape), 3) > 0).astype(int)


class TestJaccard:
    def test_identical(self):
        a, _ = _offset_squares()
        assert jaccard_j(a, a) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), int)
        b = np.zeros((4, 4), int)
        a[0, 0], b[3, 3] = 1, 1
        assert jaccard_j(a, b) == 0.0

    def test_offset_squares_third(self):
        assert jaccard_j(*_offset_squares()) == 1 / 3

    def test_both_empty(self):
        assert jaccard_j(np.zeros((3, 3), int), np.zeros((3, 3), int)) == 1.0

    def test_accepts_object_mask_and_ids(self):
        labels = np.array([[1, 2], [2, 0]])
        m = ObjectMask.from_labels(labels)
        assert jaccard_j(m, labels, 2) == 1.0 and jaccard_j(m, np.zeros_like(labels), 1) == 0.0

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeError):
            jaccard_j(np.zeros((2, 2)), np.zeros((3, 2)))

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.int64, (5, 6), elements=st.integers(0, 1)), arrays(np.int64, (5, 6), elements=st.integers(0, 1)))
    def test_bounded_and_symmetric(self, a, b):
        j = jaccard_j(a, b)
        assert 0.0 <= j <= 1.0 and j == jaccard_j(b, a)


class TestBoundary:
    def test_boundary_of_square(self):
        p = np.zeros((6, 6), bool)
        p[1:5, 1:5] = True
        b = boundary_pixels(p)
        assert b.sum() == 12 and not b[2:4, 2:4].any()

    def test_image_edge_counts_as_outside(self):
        assert boundary_pixels(np.ones((3, 3), bool)).sum() == 8

    def test_identical(self):
        a, _ = _offset_squares()
        assert boundary_f(a, a) == 1.0 and boundary_f_exact(a, a) == 1.0

    def test_both_empty(self):
        z = np.zeros((8, 8), int)
        assert boundary_f(z, z) == 1.0 and boundary_f_exact(z, z) == 1.0

    def test_one_empty(self):
        a, _ = _offset_squares()
        assert boundary_f(a, np.zeros_like(a)) == 0.0

    def test_far_shift_scores_zero(self):
        a = np.zeros((32, 32), int)
        a[4:12, 4:12] = 1
        b = np.roll(a, (15, 15), axis=(0, 1))
        assert boundary_f(a, b, 1, 2.0) == 0.0 == boundary_f_bipartite(a == 1, b == 1, 2.0)

    def test_default_tolerance(self):
        assert default_tolerance((30, 40)) == pytest.approx(0.4)

    def test_scipy_matching_agrees_with_kuhn(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a, b = _blob(rng, (24, 24)), _blob(rng, (24, 24))
            for tol in (1.0, 2.5):
                assert abs(boundary_f_exact(a, b, 1, tol) - boundary_f_bipartite(a == 1, b == 1, tol)) < 1e-12

    @pytest.mark.parametrize("tol", [None, 1.5])
    def test_dilation_close_to_exact(self, tol):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, b = _blob(rng), _blob(rng)
            t = default_tolerance(a.shape) if tol is None else tol
            assert abs(boundary_f(a, b, 1, t) - boundary_f_bipartite(a == 1, b == 1, t)) <= 0.05

    def test_dilation_never_below_exact(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a, b = _blob(rng), _blob(rng)
            assert boundary_f(a, b, 1, 2.0) >= boundary_f_exact(a, b, 1, 2.0) - 1e-12


class TestFrameScores:
    def test_empty_frame(self):
        z = np.zeros((4, 4), int)
        assert frame_scores(z, z) == (1.0, 1.0)

    def test_averages_over_objects(self):
        gt = np.zeros((16, 16), int)
        gt[:8] = 1
        gt[8:] = 2
        pred = gt.copy()
        pred[8:] = 0
        j, f = frame_scores(pred, gt)
        assert j == 0.5 and f == 0.5
