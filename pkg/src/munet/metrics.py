"""Region (J) and boundary (F) accuracy for segmentation masks."""

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .masks import ObjectMask
from .tensor_core import ShapeError

DEFAULT_TOLERANCE_FRACTION = 0.008


def _plane(mask, object_id):
    if isinstance(mask, ObjectMask):
        return mask.labels == object_id
    return np.asarray(mask) == object_id


def _planes(pred, gt, object_id):
    a, b = _plane(pred, object_id), _plane(gt, object_id)
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a, b


def jaccard_j(pred, gt, object_id=1):
    """Intersection over union of one object's region; 1.0 if both are empty."""
    a, b = _planes(pred, gt, object_id)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def boundary_pixels(plane):
    """Object pixels with at least one 4-neighbour outside the object (image edge counts as outside)."""
    plane = np.asarray(plane, dtype=bool)
    padded = np.pad(plane, 1)
    inner = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return plane & ~inner


def default_tolerance(shape, fraction=DEFAULT_TOLERANCE_FRACTION):
    return fraction * float(np.hypot(*shape))


def _f_from_pr(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def boundary_f(pred, gt, object_id=1, tolerance_px=None):
    """Boundary F-measure with disk-dilation matching of boundary pixels.

    A boundary pixel counts as matched when the other mask has a boundary
    pixel within ``tolerance_px`` (Euclidean).  This over-counts compared
    with one-to-one matching; see :func:`boundary_f_exact`.
    """
    a, b = _planes(pred, gt, object_id)
    if tolerance_px is None:
        tolerance_px = default_tolerance(a.shape)
    pb, gb = boundary_pixels(a), boundary_pixels(b)
    n_p, n_g = np.count_nonzero(pb), np.count_nonzero(gb)
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    dist_to_gt = ndimage.distance_transform_edt(~gb)
    dist_to_pred = ndimage.distance_transform_edt(~pb)
    precision = np.count_nonzero(dist_to_gt[pb] <= tolerance_px) / n_p
    recall = np.count_nonzero(dist_to_pred[gb] <= tolerance_px) / n_g
    return _f_from_pr(precision, recall)


def boundary_f_exact(pred, gt, object_id=1, tolerance_px=None):
    """Boundary F-measure from a maximum one-to-one matching of boundary pixels."""
    a, b = _planes(pred, gt, object_id)
    if tolerance_px is None:
        tolerance_px = default_tolerance(a.shape)
    p_pts = np.argwhere(boundary_pixels(a))
    g_pts = np.argwhere(boundary_pixels(b))
    if len(p_pts) == 0 and len(g_pts) == 0:
        return 1.0
    if len(p_pts) == 0 or len(g_pts) == 0:
        return 0.0
    d = np.hypot(p_pts[:, None, 0] - g_pts[None, :, 0], p_pts[:, None, 1] - g_pts[None, :, 1])
    graph = csr_matrix((d <= tolerance_px).astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    matched = np.count_nonzero(match >= 0)
    return _f_from_pr(matched / len(p_pts), matched / len(g_pts))


def object_ids(*masks):
    ids = set()
    for m in masks:
        labels = m.labels if isinstance(m, ObjectMask) else np.asarray(m)
        ids.update(int(i) for i in np.unique(labels) if i > 0)
    return sorted(ids)


def frame_scores(pred, gt, tolerance_fraction=DEFAULT_TOLERANCE_FRACTION):
    """Mean J and F over the objects in either mask; (1, 1) when neither has any."""
    ids = object_ids(gt, pred)
    if not ids:
        return 1.0, 1.0
    shape = pred.labels.shape if isinstance(pred, ObjectMask) else np.shape(pred)
    tol = default_tolerance(shape, tolerance_fraction)
    j = float(np.mean([jaccard_j(pred, gt, i) for i in ids]))
    f = float(np.mean([boundary_f(pred, gt, i, tol) for i in ids]))
    return j, f
