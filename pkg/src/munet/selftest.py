"""Quick oracle checks runnable from the command line (``munet selftest``)."""

import numpy as np

from . import oracles
from .losses import bootstrap_ce, mask_iou_loss
from .memory import MemoryBank, QueryEmbedding, memory_read, memory_write
from .metrics import boundary_f, boundary_f_exact, default_tolerance, jaccard_j
from .motion_fusion import motion_net_forward, motion_net_init
from .mu_layer import CostVolume, build_cost_volume, soft_argmin_grad, uncertainty_map
from .tensor_core import conv2d, numeric_jacobian


def _check_conv(rng):
    x = rng.standard_normal((2, 5, 5))
    w = rng.standard_normal((3, 2, 3, 3))
    b = rng.standard_normal(3)
    return np.abs(conv2d(x, w, b, pad=1) - oracles.conv2d_loop(x, w, b, 1, 1)).max() < 1e-12


def _check_cost_volume(rng):
    f_t, f_prev = rng.standard_normal((2, 4, 5, 6))
    cost = build_cost_volume(f_t, f_prev, (3, 5))
    ok = np.abs(cost.values - oracles.cosine_cost_volume_loop(f_t, f_prev, (3, 5))).max() < 1e-12
    return ok and np.array_equal(uncertainty_map(cost), oracles.max_over_window_loop(cost.values))


def _check_soft_argmin_grad(rng):
    values = rng.uniform(-1, 1, (3, 3, 4, 4))
    up = rng.standard_normal((2, 4, 4))
    from .mu_layer import soft_argmin_displacement

    def f(v):
        return np.sum(up * soft_argmin_displacement(CostVolume(v)))

    num = numeric_jacobian(f, values).reshape(values.shape)
    ana = soft_argmin_grad(CostVolume(values), up)
    return np.abs(num - ana).max() <= 1e-6 * max(np.abs(num).max(), 1e-12)


def _check_losses(rng):
    pred = rng.uniform(0.05, 0.95, (6, 6))
    target = (rng.uniform(size=(6, 6)) > 0.5).astype(float)
    ok = True
    for fn in (lambda p: bootstrap_ce(p, target), lambda p: mask_iou_loss(p, target)):
        num = numeric_jacobian(lambda p: fn(p).value, pred).reshape(pred.shape)
        ok &= np.abs(num - fn(pred).grad).max() <= 1e-5 * max(np.abs(num).max(), 1e-12)
    return ok


def _check_memory(rng):
    keys = [rng.standard_normal((3, 4, 4)) for _ in range(2)]
    values = [rng.standard_normal((2, 4, 4)) for _ in range(2)]
    bank = MemoryBank()
    for i, (k, v) in enumerate(zip(keys, values)):
        bank = memory_write(bank, i + 1, k, v)
    q = QueryEmbedding(rng.standard_normal((3, 4, 4)), rng.standard_normal((2, 4, 4)))
    expected, _ = oracles.memory_read_loop(keys, values, q.key, q.value)
    return np.abs(memory_read(bank, q) - expected).max() < 1e-12


def _check_motion_net(rng):
    p = motion_net_init(8, seed=3)
    x = rng.standard_normal((3, 4, 4))
    return np.abs(motion_net_forward(p, x) - oracles.motion_net_loop(p.weights, p.biases, x)).max() < 1e-10


def _check_metrics(rng):
    a = np.zeros((16, 16), int)
    b = np.zeros((16, 16), int)
    a[4:12, 2:10] = 1
    b[4:12, 6:14] = 1
    ok = abs(jaccard_j(a, b) - 1 / 3) < 1e-15 and jaccard_j(a, a) == 1.0 and boundary_f(a, a) == 1.0
    tol = default_tolerance((32, 32)) * 4
    for _ in range(3):
        g = np.zeros((32, 32), int)
        y, x, s = rng.integers(4, 16, 3)
        g[y:y + s, x:x + s] = 1
        p = np.roll(g, rng.integers(-2, 3, 2), axis=(0, 1))
        exact = oracles.boundary_f_bipartite(p == 1, g == 1, tol)
        ok &= abs(boundary_f_exact(p, g, 1, tol) - exact) < 1e-12
        ok &= abs(boundary_f(p, g, 1, tol) - exact) <= 0.05
    return ok


CHECKS = (
    ("conv2d vs loop oracle", _check_conv),
    ("cost volume and max map vs loop oracle", _check_cost_volume),
    ("soft-argmin gradient vs finite differences", _check_soft_argmin_grad),
    ("loss gradients vs finite differences", _check_losses),
    ("memory read vs loop oracle", _check_memory),
    ("motion net vs layer oracle", _check_motion_net),
    ("J/F metrics vs counting and bipartite oracles", _check_metrics),
)


def run_selftest(seed=0, out=print):
    """Run every check, print one line each; return True when all pass."""
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, check in CHECKS:
        ok = bool(check(rng))
        all_ok &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all_ok
