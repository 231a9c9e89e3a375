"""Dense float64 kernels on plain numpy arrays.

Tensors are ``numpy.ndarray`` objects of dtype float64 laid out
channel-first (C x H x W).  Every function here is pure.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """Raised when tensor shapes are incompatible with an operation."""


def as_tensor(x):
    return np.asarray(x, dtype=np.float64)


def conv2d(x, weight, bias=None, stride=1, pad=None):
    """2-D cross-correlation with zero padding.

    Parameters
    ----------
    x : array (C_in, H, W)
    weight : array (C_out, C_in, k, k), k odd
    bias : array (C_out,) or None
    stride : int
    pad : int or None
        Zero padding on every side.  ``None`` means ``k // 2`` ("same" at
        stride 1).

    Returns
    -------
    array (C_out, H_out, W_out) with H_out = (H + 2 pad - k) // stride + 1
    """
    x = as_tensor(x)
    weight = as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects x (C,H,W) and weight (O,C,k,k), got {x.shape} and {weight.shape}")
    c_out, c_in, kh, kw = weight.shape
    if kh != kw or kh % 2 == 0:
        raise ShapeError(f"kernel must be square with odd size, got {kh}x{kw}")
    if c_in != x.shape[0]:
        raise ShapeError(f"weight expects {c_in} input channels, input has {x.shape[0]}")
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise ShapeError(f"bias shape {bias.shape} does not match {c_out} output channels")
    if stride < 1:
        raise ShapeError(f"stride must be positive, got {stride}")
    k = kh
    if pad is None:
        pad = k // 2
    if pad < 0:
        raise ShapeError(f"pad must be non-negative, got {pad}")
    _, h, w = x.shape
    span_h = h + 2 * pad - k
    span_w = w + 2 * pad - k
    if span_h < 0 or span_w < 0:
        raise ShapeError(f"input {h}x{w} with k={k}, pad={pad} is smaller than the kernel")

    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    if k == 1:
        patches = x[:, ::stride, ::stride]
        out = np.einsum("oi,ihw->ohw", weight[:, :, 0, 0], patches, optimize=True)
    else:
        windows = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
        out = np.einsum("oikl,ihwkl->ohw", weight, windows, optimize=True)
    if bias is not None:
        out = out + bias[:, None, None]
    return np.ascontiguousarray(out)


def sigmoid(x):
    x = as_tensor(x)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    return np.maximum(as_tensor(x), 0.0)


def leaky_relu(x, slope=0.1):
    x = as_tensor(x)
    return np.where(x >= 0, x, slope * x)


_POINTWISE = {"sigmoid": sigmoid, "relu": relu, "leaky_relu": leaky_relu}


def pointwise(kind, x):
    """Apply a named elementwise nonlinearity (``sigmoid``, ``relu``, ``leaky_relu``)."""
    try:
        fn = _POINTWISE[kind]
    except KeyError:
        raise ValueError(f"unknown pointwise kind {kind!r}") from None
    return fn(x)


def softmax_over(x, axes):
    """Softmax jointly over ``axes``; each slice over the remaining axes sums to 1."""
    x = as_tensor(x)
    if isinstance(axes, int):
        axes = (axes,)
    axes = tuple(sorted({a % x.ndim for a in axes}))
    if not axes:
        raise ValueError("softmax_over needs at least one axis")
    shifted = x - x.max(axis=axes, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axes, keepdims=True)


def l2_normalize_channels(f, eps=1e-8):
    """Divide each spatial position's channel vector by (its norm + eps)."""
    f = as_tensor(f)
    if eps <= 0:
        raise ValueError("eps must be positive")
    norm = np.sqrt(np.sum(f * f, axis=0, keepdims=True))
    return f / (norm + eps)


def _resize_matrix(n_in, n_out):
    # align_corners=False sampling, source index clamped to the valid range
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(m, (rows, lo), 1.0 - frac)
    np.add.at(m, (rows, hi), frac)
    return m


def bilinear_resize(x, out_h, out_w):
    """Bilinear resampling of a (C, H, W) tensor, align-corners-false convention."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f"bilinear_resize expects (C,H,W), got {x.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    _, h, w = x.shape
    if (h, w) == (out_h, out_w):
        return x.copy()
    ry = _resize_matrix(h, out_h)
    rx = _resize_matrix(w, out_w)
    return np.einsum("yh,chw,xw->cyx", ry, x, rx, optimize=True)


def numeric_jacobian(f, x, eps=1e-5):
    """Central-difference Jacobian of ``f`` at ``x``.

    Returns an array of shape (f(x).size, x.size) with
    ``J[i, j] ~ d f_i / d x_j``.
    """
    x = as_tensor(x)
    if eps <= 0:
        raise ValueError("eps must be positive")
    flat = x.ravel().copy()
    out_size = np.asarray(f(x)).size
    jac = np.empty((out_size, flat.size))
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + eps
        f_plus = np.array(f(flat.reshape(x.shape)), dtype=np.float64).ravel()
        flat[j] = orig - eps
        f_minus = np.array(f(flat.reshape(x.shape)), dtype=np.float64).ravel()
        flat[j] = orig
        jac[:, j] = (f_plus - f_minus) / (2.0 * eps)
    return jac
