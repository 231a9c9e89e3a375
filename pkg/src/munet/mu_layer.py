"""Motion uncertainty layer: correlation, soft-argmin displacement, confidence.

Offsets follow the (u, v) = (horizontal, vertical) convention.  A cost
volume has layout ``(U, V, H, W)`` where index ``[i, j]`` holds the offset
``u = i - U // 2``, ``v = j - V // 2``, and ``C[i, j, y, x]`` compares the
query feature at ``(x, y)`` with the previous-frame feature at
``(x + u, y + v)``.  Displacement tensors are ``(2, H, W)`` with channel 0
horizontal and channel 1 vertical.
"""

from dataclasses import dataclass

import numpy as np

from .tensor_core import ShapeError, as_tensor, conv2d, l2_normalize_channels, softmax_over

OUT_OF_BOUNDS = -1.0
DEFAULT_WINDOW = (25, 25)


@dataclass(frozen=True)
class CostVolume:
    values: np.ndarray  # (U, V, H, W)

    @property
    def window(self):
        return self.values.shape[0], self.values.shape[1]

    @property
    def radius(self):
        u, v = self.window
        return u // 2, v // 2

    @property
    def height(self):
        return self.values.shape[2]

    @property
    def width(self):
        return self.values.shape[3]

    def offsets(self):
        """Return (du, dv) grids of shape (U, V) holding each slot's offset."""
        ru, rv = self.radius
        du, dv = np.meshgrid(np.arange(-ru, ru + 1), np.arange(-rv, rv + 1), indexing="ij")
        return du.astype(np.float64), dv.astype(np.float64)


@dataclass(frozen=True)
class MotionBundle:
    displacement: np.ndarray  # (2, H, W), feature-grid cells
    uncertainty: np.ndarray  # (1, H, W)
    motion_input: np.ndarray  # (3, H, W)


def _check_window(window):
    u, v = window
    if u < 1 or v < 1 or u % 2 == 0 or v % 2 == 0:
        raise ValueError(f"window extents must be odd and positive, got {window}")
    return int(u), int(v)


def project_features(f, weight, bias=None):
    """Reduce a D-channel feature to D/4 channels with a 1x1 convolution."""
    f = as_tensor(f)
    d = f.shape[0]
    if d % 4:
        raise ShapeError(f"feature dimension {d} is not divisible by 4")
    weight = as_tensor(weight)
    if weight.shape[:2] != (d // 4, d) or weight.shape[2:] != (1, 1):
        raise ShapeError(f"projection weight must be ({d // 4}, {d}, 1, 1), got {weight.shape}")
    return conv2d(f, weight, bias, stride=1, pad=0)


def build_cost_volume(f_t, f_prev, window=DEFAULT_WINDOW, eps=1e-8):
    """Cosine-similarity cost volume between query and previous-frame features.

    Candidates falling outside the image hold ``OUT_OF_BOUNDS`` (-1).
    """
    f_t = as_tensor(f_t)
    f_prev = as_tensor(f_prev)
    if f_t.shape != f_prev.shape or f_t.ndim != 3:
        raise ShapeError(f"feature shapes differ or are not (d,H,W): {f_t.shape} vs {f_prev.shape}")
    nu, nv = _check_window(window)
    ru, rv = nu // 2, nv // 2
    _, h, w = f_t.shape

    a = l2_normalize_channels(f_t, eps)
    b = np.pad(l2_normalize_channels(f_prev, eps), ((0, 0), (rv, rv), (ru, ru)))
    inside = np.pad(np.ones((h, w), dtype=bool), ((rv, rv), (ru, ru)))

    values = np.empty((nu, nv, h, w))
    for i in range(nu):
        for j in range(nv):
            # slot (i, j) holds offset (i - ru, j - rv)
            shifted = b[:, j:j + h, i:i + w]
            dot = np.einsum("chw,chw->hw", a, shifted)
            values[i, j] = np.where(inside[j:j + h, i:i + w], dot, OUT_OF_BOUNDS)
    return CostVolume(values)


def soft_argmin_displacement(cost, sign=1, beta=1.0):
    """Expected offset under a softmax over the displacement window.

    ``p(u) = softmax(sign * beta * C(u, x))`` and the result is
    ``sum_u u * p(u)``.  ``sign=+1`` puts mass on high similarity;
    ``sign=-1`` is the literal negated form.  ``beta`` is an inverse
    temperature.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = softmax_over(sign * beta * cost.values, axes=(0, 1))
    du, dv = cost.offsets()
    disp_u = np.einsum("ij,ijhw->hw", du, p)
    disp_v = np.einsum("ij,ijhw->hw", dv, p)
    return np.stack([disp_u, disp_v])


def soft_argmin_grad(cost, upstream, sign=1, beta=1.0):
    """Backpropagate ``upstream`` (2, H, W) through soft-argmin to the cost volume.

    Uses d(disp)/dC(u) = sign * beta * p(u) * (u - disp) per position.
    """
    upstream = as_tensor(upstream)
    if upstream.shape != (2, cost.height, cost.width):
        raise ShapeError(f"upstream must be (2, {cost.height}, {cost.width}), got {upstream.shape}")
    p = softmax_over(sign * beta * cost.values, axes=(0, 1))
    du, dv = cost.offsets()
    disp = soft_argmin_displacement(cost, sign, beta)
    centred_u = du[:, :, None, None] - disp[0][None, None]
    centred_v = dv[:, :, None, None] - disp[1][None, None]
    return sign * beta * p * (centred_u * upstream[0] + centred_v * upstream[1])


def uncertainty_map(cost):
    """Per-position best matching score (high means a confident match)."""
    return cost.values.max(axis=(0, 1))[None]


def assemble_motion_input(disp, unc, window):
    """Stack radius-normalised displacement with the confidence map -> (3, H, W)."""
    disp = as_tensor(disp)
    unc = as_tensor(unc)
    if disp.ndim != 3 or disp.shape[0] != 2 or unc.shape != (1,) + disp.shape[1:]:
        raise ShapeError(f"expected disp (2,H,W) and unc (1,H,W), got {disp.shape} and {unc.shape}")
    nu, nv = _check_window(window)
    ru, rv = max(nu // 2, 1), max(nv // 2, 1)
    return np.concatenate([disp[:1] / ru, disp[1:2] / rv, unc])


def compute_motion(f_t, f_prev, window=DEFAULT_WINDOW, sign=1, beta=1.0):
    """Cost volume -> displacement, confidence and the 3-channel motion input."""
    cost = build_cost_volume(f_t, f_prev, window)
    disp = soft_argmin_displacement(cost, sign, beta)
    unc = uncertainty_map(cost)
    return MotionBundle(disp, unc, assemble_motion_input(disp, unc, cost.window)), cost
