"""Slow reference implementations used to cross-check the vectorised kernels.

Everything here is written with explicit Python loops and shares no code
with the production paths beyond numpy scalars.
"""

import math

import numpy as np


def conv2d_loop(x, weight, bias, stride=1, pad=0):
    c_in, h, w = x.shape
    c_out, _, k, _ = weight.shape
    h_out = (h + 2 * pad - k) // stride + 1
    w_out = (w + 2 * pad - k) // stride + 1
    out = np.zeros((c_out, h_out, w_out))
    for o in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                acc = 0.0 if bias is None else float(bias[o])
                for c in range(c_in):
                    for a in range(k):
                        for b in range(k):
                            y = i * stride + a - pad
                            xx = j * stride + b - pad
                            if 0 <= y < h and 0 <= xx < w:
                                acc += weight[o, c, a, b] * x[c, y, xx]
                out[o, i, j] = acc
    return out


def cosine_cost_volume_loop(f_t, f_prev, window, eps=1e-8):
    d, h, w = f_t.shape
    nu, nv = window
    ru, rv = nu // 2, nv // 2
    out = np.empty((nu, nv, h, w))
    for i in range(nu):
        for j in range(nv):
            u, v = i - ru, j - rv
            for y in range(h):
                for x in range(w):
                    ys, xs = y + v, x + u
                    if not (0 <= ys < h and 0 <= xs < w):
                        out[i, j, y, x] = -1.0
                        continue
                    a = f_t[:, y, x]
                    b = f_prev[:, ys, xs]
                    na = math.sqrt(sum(t * t for t in a)) + eps
                    nb = math.sqrt(sum(t * t for t in b)) + eps
                    out[i, j, y, x] = sum(p * q for p, q in zip(a, b)) / (na * nb)
    return out


def max_over_window_loop(values):
    nu, nv, h, w = values.shape
    out = np.empty((1, h, w))
    for y in range(h):
        for x in range(w):
            best = values[0, 0, y, x]
            for i in range(nu):
                for j in range(nv):
                    if values[i, j, y, x] > best:
                        best = values[i, j, y, x]
            out[0, y, x] = best
    return out


def hard_argmax_displacement(values):
    """Offset (u, v) of the best score at each position; first maximum wins."""
    nu, nv, h, w = values.shape
    out = np.empty((2, h, w))
    for y in range(h):
        for x in range(w):
            best, bu, bv = -np.inf, 0, 0
            for i in range(nu):
                for j in range(nv):
                    if values[i, j, y, x] > best:
                        best, bu, bv = values[i, j, y, x], i - nu // 2, j - nv // 2
            out[:, y, x] = bu, bv
    return out


def memory_read_loop(keys, values, q_key, q_value):
    """keys/values: lists of (Dk|Dv, H, W) per stored frame."""
    dk, h, w = q_key.shape
    dv = values[0].shape[0]
    stored = [(k[:, y, x], v[:, y, x]) for k, v in zip(keys, values) for y in range(k.shape[1]) for x in range(k.shape[2])]
    out = np.zeros((dv, h, w))
    weights = np.zeros((h * w, len(stored)))
    for y in range(h):
        for x in range(w):
            q = q_key[:, y, x]
            scores = [sum(q[c] * k[c] for c in range(dk)) for k, _ in stored]
            m = max(scores)
            e = [math.exp(s - m) for s in scores]
            z = sum(e)
            for n, (_, v) in enumerate(stored):
                weights[y * w + x, n] = e[n] / z
                out[:, y, x] += e[n] / z * v
    return np.concatenate([out, q_value]), weights


def motion_net_loop(weights, biases, x, slope=0.1):
    for n, (wt, b) in enumerate(zip(weights, biases)):
        k = wt.shape[2]
        x = conv2d_loop(x, wt, b, 1, k // 2)
        if n < len(weights) - 1:
            x = np.where(x >= 0, x, slope * x)
    return x


def boundary_f_bipartite(pred_plane, gt_plane, tolerance):
    """F from an augmenting-path maximum matching (Kuhn's algorithm)."""

    def boundary(p):
        h, w = p.shape
        pts = []
        for y in range(h):
            for x in range(w):
                if not p[y, x]:
                    continue
                for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    yy, xx = y + dy, x + dx
                    if not (0 <= yy < h and 0 <= xx < w) or not p[yy, xx]:
                        pts.append((y, x))
                        break
        return pts

    pb, gb = boundary(pred_plane), boundary(gt_plane)
    if not pb and not gb:
        return 1.0
    if not pb or not gb:
        return 0.0
    adj = [[j for j, g in enumerate(gb) if math.hypot(p[0] - g[0], p[1] - g[1]) <= tolerance] for p in pb]
    match_g = [-1] * len(gb)

    def augment(i, seen):
        for j in adj[i]:
            if seen[j]:
                continue
            seen[j] = True
            if match_g[j] < 0 or augment(match_g[j], seen):
                match_g[j] = i
                return True
        return False

    matched = sum(augment(i, [False] * len(gb)) for i in range(len(pb)))
    precision, recall = matched / len(pb), matched / len(gb)
    return 0.0 if matched == 0 else 2 * precision * recall / (precision + recall)
