"""Lightweight motion feature network and motion-aware spatial attention."""

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import ShapeError, as_tensor, conv2d, leaky_relu, sigmoid

# (C_in, C_out, kernel); all stride 1. The last C_out is the feature dim.
MOTION_NET_LAYERS = (
    (3, 3, 7),
    (3, 16, 1),
    (16, 16, 3),
    (16, 32, 1),
    (32, 32, 3),
    (32, 32, 1),
    (32, 64, 3),
    (64, None, 1),
)
LEAKY_SLOPE = 0.1


@dataclass
class MotionNetParams:
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    @property
    def d_out(self):
        return self.weights[-1].shape[0]

    def layer_shapes(self):
        return [(w.shape[1], w.shape[0], w.shape[2]) for w in self.weights]

    def to_dict(self):
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"motion.{i}.weight"] = w
            out[f"motion.{i}.bias"] = b
        return out

    @classmethod
    def from_dict(cls, tensors):
        weights, biases = [], []
        for i in range(len(MOTION_NET_LAYERS)):
            weights.append(as_tensor(tensors[f"motion.{i}.weight"]))
            biases.append(as_tensor(tensors[f"motion.{i}.bias"]))
        params = cls(weights, biases)
        _check_layer_chain(params)
        return params


@dataclass
class MsamParams:
    weight: np.ndarray  # (1, D, 1, 1)
    bias: np.ndarray  # (1,)

    @classmethod
    def zeros(cls, d):
        return cls(np.zeros((1, d, 1, 1)), np.zeros(1))


def uniform_conv_init(rng, c_in, c_out, k):
    bound = 1.0 / np.sqrt(c_in * k * k)
    w = rng.uniform(-bound, bound, size=(c_out, c_in, k, k))
    b = rng.uniform(-bound, bound, size=c_out)
    return w, b


def motion_net_init(d_out=1024, seed=0):
    if d_out < 1:
        raise ValueError("d_out must be positive")
    rng = np.random.default_rng(seed)
    params = MotionNetParams()
    for c_in, c_out, k in MOTION_NET_LAYERS:
        w, b = uniform_conv_init(rng, c_in, d_out if c_out is None else c_out, k)
        params.weights.append(w)
        params.biases.append(b)
    return params


def _check_layer_chain(p):
    if len(p.weights) != len(MOTION_NET_LAYERS):
        raise ShapeError(f"motion net needs {len(MOTION_NET_LAYERS)} layers, got {len(p.weights)}")
    for (c_in, c_out, k), got in zip(MOTION_NET_LAYERS, p.layer_shapes()):
        if got[0] != c_in or got[2] != k or (c_out is not None and got[1] != c_out):
            raise ShapeError(f"motion net layer {got} does not match ({c_in}, {c_out}, {k})")


def motion_net_forward(p, motion_input):
    """Map the (3, H, W) motion input to (D_out, H, W) motion features.

    Leaky ReLU follows every layer except the last; padding keeps H x W.
    """
    x = as_tensor(motion_input)
    if x.ndim != 3 or x.shape[0] != 3:
        raise ShapeError(f"motion input must have 3 channels, got shape {x.shape}")
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        x = conv2d(x, w, b, stride=1)
        if i < last:
            x = leaky_relu(x, LEAKY_SLOPE)
    return x


def attention_map(f_m, p):
    """One-channel spatial attention sigmoid(conv1x1(f_m)) -> (1, H, W)."""
    f_m = as_tensor(f_m)
    if p.weight.shape[:2] != (1, f_m.shape[0]):
        raise ShapeError(f"MSAM weight {p.weight.shape} does not fit motion feature with {f_m.shape[0]} channels")
    return sigmoid(conv2d(f_m, p.weight, p.bias, pad=0))


def msam_fuse(f_s, f_m, p):
    """Residual attention fusion ``f_s * a + f_s`` with ``a`` broadcast over channels."""
    f_s = as_tensor(f_s)
    f_m = as_tensor(f_m)
    if f_s.ndim != 3 or f_s.shape[1:] != f_m.shape[1:]:
        raise ShapeError(f"semantic {f_s.shape} and motion {f_m.shape} features differ spatially")
    a = attention_map(f_m, p)
    return f_s * a + f_s


def additive_fuse(f_s, f_m):
    f_s = as_tensor(f_s)
    f_m = as_tensor(f_m)
    if f_s.shape != f_m.shape:
        raise ShapeError(f"cannot add features of shapes {f_s.shape} and {f_m.shape}")
    return f_s + f_m
