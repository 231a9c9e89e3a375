"""Synthetic sequences and feature maps with known motion."""

import numpy as np


def square_frame(size, top_left, side, colour=(1.0, 1.0, 1.0), background=(0.0, 0.0, 0.0)):
    """Render one square on a flat background; returns (image (3,H,W), labels (H,W))."""
    h, w = (size, size) if np.isscalar(size) else size
    img = np.empty((3, h, w))
    img[:] = np.asarray(background, dtype=np.float64)[:, None, None]
    labels = np.zeros((h, w), dtype=np.int64)
    x0, y0 = top_left
    ys = slice(max(y0, 0), min(y0 + side, h))
    xs = slice(max(x0, 0), min(x0 + side, w))
    img[:, ys, xs] = np.asarray(colour, dtype=np.float64)[:, None, None]
    labels[ys, xs] = 1
    return img, labels


def drifting_square(n_frames=24, size=128, side=48, start=(16, 40), velocity=(2, 0)):
    """A white square moving ``velocity`` pixels per frame over black.

    Returns ``(frames, labels)`` as lists of (3,H,W) images and (H,W) label planes.
    """
    frames, labels = [], []
    for t in range(n_frames):
        pos = (start[0] + velocity[0] * t, start[1] + velocity[1] * t)
        img, lab = square_frame(size, pos, side)
        frames.append(img)
        labels.append(lab)
    return frames, labels


def shifted_features(rng, d, h, w, shift):
    """Random texture pair with ``f_t(x) = f_prev(x + shift)`` wherever both are defined.

    ``shift`` is (horizontal, vertical).  Query positions whose source falls
    outside the map are filled with fresh noise.
    """
    su, sv = shift
    pad = max(abs(su), abs(sv))
    big = rng.standard_normal((d, h + 2 * pad, w + 2 * pad))
    f_prev = big[:, pad:pad + h, pad:pad + w]
    f_t = big[:, pad + sv:pad + sv + h, pad + su:pad + su + w]
    return f_t.copy(), f_prev.copy()


def block_texture(rng, size=128, block=16):
    """Image of random-colour ``block`` x ``block`` tiles, (3, size, size)."""
    n = size // block
    tiles = rng.uniform(0.0, 1.0, size=(3, n, n))
    return np.repeat(np.repeat(tiles, block, axis=1), block, axis=2)


def moving_patch_pair(rng, size=128, patch=64, start=(32, 32), shift=(16, 0)):
    """Frame pair in which a block-textured patch on black moves by ``shift`` pixels.

    Returns ``(frame_prev, frame_next, labels_prev, labels_next)``.
    """
    tex = block_texture(rng, patch)
    frames, labels = [], []
    for dx, dy in ((0, 0), shift):
        img = np.zeros((3, size, size))
        lab = np.zeros((size, size), dtype=np.int64)
        x0, y0 = start[0] + dx, start[1] + dy
        img[:, y0:y0 + patch, x0:x0 + patch] = tex
        lab[y0:y0 + patch, x0:x0 + patch] = 1
        frames.append(img)
        labels.append(lab)
    return frames[0], frames[1], labels[0], labels[1]
