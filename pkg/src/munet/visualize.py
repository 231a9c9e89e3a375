"""Colour renderings of displacement fields and confidence maps."""

import numpy as np

from .tensor_core import as_tensor, bilinear_resize

FLOW_EPS = 1e-12
COLD = np.array([0.0, 0.0, 1.0])
HOT = np.array([1.0, 0.0, 0.0])


def hsv_to_rgb(h, s, v):
    """Vectorised HSV -> RGB with hue in degrees [0, 360); returns (3, ...)."""
    h = np.mod(h, 360.0) / 60.0
    sector = np.floor(h).astype(int) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(sector, [v, q, p, p, t, v])
    g = np.choose(sector, [t, v, v, q, p, p])
    b = np.choose(sector, [p, p, t, v, v, q])
    return np.stack([r, g, b])


def flow_hue(disp):
    """Hue in degrees [0, 360) of each displacement vector's direction."""
    disp = as_tensor(disp)
    return np.mod(np.degrees(np.arctan2(disp[1], disp[0])), 360.0)


def visualize_flow(disp):
    """Render a (2, H, W) displacement as RGB: hue = direction, value = relative magnitude."""
    disp = as_tensor(disp)
    mag = np.hypot(disp[0], disp[1])
    value = mag / max(float(mag.max(initial=0.0)), FLOW_EPS)
    return hsv_to_rgb(flow_hue(disp), np.ones_like(mag), value)


def heat_colour(t):
    """Blue (t=0) to red (t=1) linear ramp; returns (3, ...)."""
    t = np.clip(as_tensor(t), 0.0, 1.0)
    return COLD.reshape((3,) + (1,) * t.ndim) * (1.0 - t) + HOT.reshape((3,) + (1,) * t.ndim) * t


def visualize_uncertainty(unc, out_h=None, out_w=None):
    """Heat map of a (1, H, W) confidence map over [-1, 1], optionally resized first."""
    unc = as_tensor(unc)
    if out_h is not None or out_w is not None:
        unc = bilinear_resize(unc, out_h or unc.shape[1], out_w or unc.shape[2])
    return heat_colour((unc[0] + 1.0) / 2.0)
