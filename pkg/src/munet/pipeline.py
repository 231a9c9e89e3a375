"""Frame-by-frame semi-supervised segmentation loop.

Two modes share the same dataflow (query encoder on I_{t-1} and I_t ->
motion layer -> attention fusion -> key/value embedding -> memory read ->
decoder):

``learned``
    Stub convolutional encoders/decoder with seeded random weights (or
    weights loaded from a parameter file).
``analytic``
    Hand-set weights: the encoders emit 16x16-pooled colour statistics, the
    reference values carry pooled mask occupancy and colour mass, and the
    decoder turns the retrieved colour models into per-cell object area.
    Memory reads then act as transparent label propagation, which makes
    end-to-end behaviour checkable without training.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .masks import ObjectMask, soft_aggregate
from .memory import MemoryBank, embed_kv, memory_read, memory_write
from .motion_fusion import (
    MotionNetParams,
    MsamParams,
    motion_net_forward,
    motion_net_init,
    msam_fuse,
    uniform_conv_init,
)
from .mu_layer import compute_motion, project_features
from .tensor_core import ShapeError, as_tensor, bilinear_resize, conv2d, l2_normalize_channels, leaky_relu, sigmoid

STRIDE = 16
N_STATS = 4
POSITION_FREQUENCIES = (np.pi / 2, np.pi / 4, np.pi / 8)


@dataclass
class PipelineParams:
    proj_weight: np.ndarray
    proj_bias: np.ndarray
    motion: MotionNetParams
    msam: MsamParams
    key_weight: np.ndarray
    key_bias: np.ndarray
    value_weight: np.ndarray
    value_bias: np.ndarray
    enc_q: list = field(default_factory=list)  # [(w, b)] x 4, learned mode
    enc_r: list = field(default_factory=list)
    dec: list = field(default_factory=list)  # [(w, b)] x 2, learned mode

    def to_dict(self):
        out = {
            "proj.weight": self.proj_weight,
            "proj.bias": self.proj_bias,
            "msam.weight": self.msam.weight,
            "msam.bias": self.msam.bias,
            "key.weight": self.key_weight,
            "key.bias": self.key_bias,
            "value.weight": self.value_weight,
            "value.bias": self.value_bias,
        }
        out.update(self.motion.to_dict())
        for prefix, layers in (("enc_q", self.enc_q), ("enc_r", self.enc_r), ("dec", self.dec)):
            for i, (w, b) in enumerate(layers):
                out[f"{prefix}.{i}.weight"] = w
                out[f"{prefix}.{i}.bias"] = b
        return out

    @classmethod
    def from_dict(cls, t):
        def layers(prefix):
            out, i = [], 0
            while f"{prefix}.{i}.weight" in t:
                out.append((t[f"{prefix}.{i}.weight"], t[f"{prefix}.{i}.bias"]))
                i += 1
            return out

        return cls(
            t["proj.weight"], t["proj.bias"], MotionNetParams.from_dict(t),
            MsamParams(t["msam.weight"], t["msam.bias"]),
            t["key.weight"], t["key.bias"], t["value.weight"], t["value.bias"],
            layers("enc_q"), layers("enc_r"), layers("dec"),
        )


def _encoder_chain(rng, c_in, d):
    chans = [c_in, max(d // 8, 1), max(d // 4, 1), max(d // 2, 1), d]
    return [uniform_conv_init(rng, a, b, 3) for a, b in zip(chans[:-1], chans[1:])]


def init_params(cfg):
    """Build the parameter set for ``cfg.mode`` (seeded for ``learned``)."""
    d, dk, dv = cfg.feature_dim, cfg.key_dim, cfg.value_dim
    rng = np.random.default_rng(cfg.seed)
    motion = motion_net_init(d, seed=cfg.seed)
    msam = MsamParams.zeros(d)
    if cfg.mode == "learned":
        proj_w, proj_b = uniform_conv_init(rng, d, d // 4, 1)
        key_w, key_b = uniform_conv_init(rng, d, dk, 1)
        val_w, val_b = uniform_conv_init(rng, d, dv, 1)
        hidden = max(d // 4, 1)
        return PipelineParams(
            proj_w, proj_b, motion, msam, key_w, key_b, val_w, val_b,
            enc_q=_encoder_chain(rng, 3, d),
            enc_r=_encoder_chain(rng, 4, d),
            dec=[uniform_conv_init(rng, 2 * dv, hidden, 3), uniform_conv_init(rng, hidden, 1, 3)],
        )

    # analytic: channel i of a query feature holds statistic i % 4
    half = d // 2
    proj_w = np.zeros((d // 4, d, 1, 1))
    for c in range(d // 4):
        proj_w[c, [i for i in range(d) if i % N_STATS == c % N_STATS], 0, 0] = 1.0 / (d // N_STATS)
    key_w = np.zeros((dk, d, 1, 1))
    for c in range(dk):
        key_w[c, [i for i in range(half) if i % N_STATS == c % N_STATS], 0, 0] = 1.0 / (half // N_STATS)
    val_w = np.zeros((dv, d, 1, 1))
    for c in range(dv):
        val_w[c, half + c % half, 0, 0] = 1.0
    return PipelineParams(proj_w, np.zeros(d // 4), motion, msam, key_w, np.zeros(dk), val_w, np.zeros(dv))


def _check_image(img, channels):
    img = as_tensor(img)
    if img.ndim != 3 or img.shape[0] != channels:
        raise ShapeError(f"expected a ({channels}, H, W) image, got {img.shape}")
    if img.shape[1] % STRIDE or img.shape[2] % STRIDE:
        raise ShapeError(f"image size {img.shape[1:]} is not divisible by {STRIDE}; pad it first")
    return img


def _avg_pool(x, k=STRIDE):
    c, h, w = x.shape
    return x.reshape(c, h // k, k, w // k, k).mean(axis=(2, 4))


def colour_statistics(img):
    """Pooled centred colour plus a unit channel, (2R-1, 2G-1, 2B-1, 1) -> (4, H/16, W/16)."""
    pooled = _avg_pool(img)
    return np.concatenate([2.0 * pooled - 1.0, np.ones((1,) + pooled.shape[1:])])


def _run_encoder(x, layers):
    for w, b in layers:
        x = leaky_relu(conv2d(x, w, b, stride=2, pad=1))
    return x


def encode_query(img, params, cfg):
    """Query features on the stride-16 grid -> (D, H/16, W/16)."""
    img = _check_image(img, 3)
    if cfg.mode == "analytic":
        return np.tile(colour_statistics(img), (cfg.feature_dim // N_STATS, 1, 1))
    return _run_encoder(img, params.enc_q)


def encode_reference(img, mask, params, cfg):
    """Reference features from an image and its (1, H, W) object mask."""
    img = _check_image(img, 3)
    mask = as_tensor(mask)
    if mask.shape != (1,) + img.shape[1:]:
        raise ShapeError(f"mask {mask.shape} does not match image {img.shape}")
    if cfg.mode == "analytic":
        half = cfg.feature_dim // 2
        stats = np.tile(colour_statistics(img), (half // N_STATS, 1, 1))
        inv = 1.0 - mask
        carried = np.concatenate([_avg_pool(mask), _avg_pool(img * mask), _avg_pool(inv), _avg_pool(img * inv)])
        return np.concatenate([stats, np.tile(carried, (half // N_CARRIED, 1, 1))])
    return _run_encoder(np.concatenate([img, mask]), params.enc_r)


def position_code(h, w):
    """Sinusoidal cell-coordinate code, (4 * len(POSITION_FREQUENCIES), h, w)."""
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    chans = []
    for om in POSITION_FREQUENCIES:
        chans += [np.sin(om * xx), np.cos(om * xx), np.sin(om * yy), np.cos(om * yy)]
    return np.stack(chans)


def with_position(f, weight):
    """Unit-normalise ``f`` and append a weighted position code (analytic mode)."""
    pos = position_code(*f.shape[1:]) / np.sqrt(len(POSITION_FREQUENCIES) * 2)
    return np.concatenate([l2_normalize_channels(f), weight * pos])


def area_threshold(occupancy, out_h, out_w, score=None):
    """Binary full-resolution mask whose per-cell area matches ``occupancy``.

    Inside each stride cell the ``round(occupancy * cell_area)`` pixels with
    the highest ``score`` are set.  Ties fall back to the bilinearly
    upsampled occupancy, then row-major order.
    """
    occupancy = np.clip(as_tensor(occupancy), 0.0, 1.0)
    h, w = occupancy.shape
    sh, sw = out_h // h, out_w // w
    if sh * h != out_h or sw * w != out_w:
        raise ShapeError(f"output {out_h}x{out_w} is not a multiple of the {h}x{w} grid")

    def blocks(x):
        return x.reshape(h, sh, w, sw).transpose(0, 2, 1, 3).reshape(h, w, sh * sw)

    smooth = blocks(bilinear_resize(occupancy[None], out_h, out_w)[0])
    primary = np.zeros_like(smooth) if score is None else blocks(as_tensor(score))
    # lexsort: last key is primary
    order = np.lexsort((-smooth, -primary), axis=-1)
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.broadcast_to(np.arange(sh * sw), order.shape), axis=-1)
    keep = np.floor(occupancy * (sh * sw) + 0.5)[:, :, None]
    out = (rank < keep).astype(np.float64)
    return out.reshape(h, w, sh, sw).transpose(0, 2, 1, 3).reshape(out_h, out_w)


N_CARRIED = 8


def unmix_occupancy(read_feature, image):
    """Per-cell object coverage of the query image from retrieved colour models.

    The retrieved channels hold occupancy ``f``, object colour mass and the
    complementary background occupancy/colour mass.  Their ratios give the
    object and background colours regardless of how the attention weights
    were spread, and the query cell's mean colour is projected onto the
    background->object segment.  Falls back to ``f`` when either model is
    missing or the two colours coincide.
    """
    f, obj_mass, g, bg_mass = read_feature[0], read_feature[1:4], read_feature[4], read_feature[5:8]
    with np.errstate(divide="ignore", invalid="ignore"):
        c_obj = obj_mass / f
        c_bg = bg_mass / g
    mean = _avg_pool(image, image.shape[1] // f.shape[0])
    contrast = c_obj - c_bg
    denom = np.sum(contrast * contrast, axis=0)
    usable = (f > 0) & (g > 0) & (denom > 1e-6)
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = np.sum((mean - c_bg) * contrast, axis=0) / denom
    occupancy = np.where(usable, proj, f)
    c_obj = np.where(usable, np.nan_to_num(c_obj), 0.0)
    c_bg = np.where(usable, np.nan_to_num(c_bg), 0.0)
    return np.clip(np.nan_to_num(occupancy), 0.0, 1.0), c_obj, c_bg


def colour_score(image, c_obj, c_bg):
    """Per-pixel preference for the object colour over the background colour."""
    sh, sw = image.shape[1] // c_obj.shape[1], image.shape[2] // c_obj.shape[2]

    def up(x):
        return np.repeat(np.repeat(x, sh, axis=1), sw, axis=2)

    return np.sum((image - up(c_bg)) ** 2, axis=0) - np.sum((image - up(c_obj)) ** 2, axis=0)


def decode(read_feature, params, cfg, out_h, out_w, skip=None):
    """Memory read-out (2 Dv, H', W') -> object probability (1, out_h, out_w).

    ``skip`` is the (3, out_h, out_w) query image.  The analytic decoder
    uses it to place each cell's retrieved object area on the pixels whose
    colour best matches the retrieved object colour; without it the area is
    placed by upsampled occupancy alone.
    """
    read_feature = as_tensor(read_feature)
    if cfg.mode == "analytic":
        if skip is None:
            mask = area_threshold(read_feature[0], out_h, out_w)
        else:
            skip = as_tensor(skip)
            occupancy, c_obj, c_bg = unmix_occupancy(read_feature, skip)
            mask = area_threshold(occupancy, out_h, out_w, colour_score(skip, c_obj, c_bg))
        return sigmoid(cfg.decode_slope * (mask[None] - 0.5))
    (w1, b1), (w2, b2) = params.dec
    x = leaky_relu(conv2d(read_feature, w1, b1))
    x = bilinear_resize(x, 2 * x.shape[1], 2 * x.shape[2])
    x = conv2d(x, w2, b2)
    x = bilinear_resize(x, 2 * x.shape[1], 2 * x.shape[2])
    return sigmoid(bilinear_resize(x, out_h, out_w))


def pad_to_stride(x):
    h, w = x.shape[-2:]
    ph, pw = -h % STRIDE, -w % STRIDE
    if not (ph or pw):
        return x
    return np.pad(x, [(0, 0)] * (x.ndim - 2) + [(0, ph), (0, pw)])


@dataclass
class PipelineState:
    cfg: RunConfig
    params: PipelineParams
    height: int
    width: int
    num_objects: int
    banks: list
    prev_image: np.ndarray  # padded
    prev_feature: np.ndarray
    prev_mask: ObjectMask
    frame_index: int = 1  # 1-based index of the last processed frame


def _embed(feature, params, cfg):
    q = embed_kv(feature, params.key_weight, params.key_bias, params.value_weight, params.value_bias)
    if cfg.mode == "analytic":
        # both sides carry sqrt(sharpness) so logits are sharpness * cosine
        key = np.sqrt(cfg.key_sharpness) * l2_normalize_channels(with_position(q.key, cfg.key_position_weight))
        q = type(q)(key, q.value)
    return q


def _write_memory(state, img, mask, frame_index):
    for k in range(state.num_objects):
        plane = pad_to_stride((mask.labels == k + 1).astype(np.float64)[None])
        ref = encode_reference(img, plane, state.params, state.cfg)
        emb = _embed(ref, state.params, state.cfg)
        state.banks[k] = memory_write(state.banks[k], frame_index, emb.key, emb.value)


def init_state(first_image, first_mask, cfg=None, params=None):
    """Seed the loop with frame 1 and its ground-truth mask."""
    cfg = cfg or RunConfig()
    first_image = as_tensor(first_image)
    if not isinstance(first_mask, ObjectMask):
        first_mask = ObjectMask.from_labels(first_mask)
    if first_image.ndim != 3 or first_image.shape[0] != 3:
        raise ShapeError(f"expected a (3, H, W) frame, got {first_image.shape}")
    if first_mask.shape != first_image.shape[1:]:
        raise ShapeError(f"first mask {first_mask.shape} does not match frame {first_image.shape[1:]}")
    if first_mask.num_objects < 1:
        raise ValueError("first mask contains no objects")
    params = params or init_params(cfg)
    img = pad_to_stride(first_image)
    state = PipelineState(
        cfg, params, first_image.shape[1], first_image.shape[2], first_mask.num_objects,
        [MemoryBank() for _ in range(first_mask.num_objects)],
        img, encode_query(img, params, cfg), first_mask,
    )
    _write_memory(state, img, first_mask, 1)
    return state


def motion_features(prev_feature, feature, params, cfg):
    """Motion bundle for the (t-1, t) feature pair."""
    a = project_features(feature, params.proj_weight, params.proj_bias)
    b = project_features(prev_feature, params.proj_weight, params.proj_bias)
    if cfg.mode == "analytic":
        a = with_position(a, cfg.match_position_weight)
        b = with_position(b, cfg.match_position_weight)
    bundle, _ = compute_motion(a, b, cfg.window, cfg.softargmin_sign, cfg.softargmin_beta)
    return bundle


def segment_frame(state, image):
    """Segment the next frame; updates ``state`` in place.

    Returns ``(ObjectMask, MotionBundle)``.
    """
    if state is None or not state.banks or not len(state.banks[0]):
        raise RuntimeError("pipeline state is not initialised with a first frame")
    image = as_tensor(image)
    if image.shape != (3, state.height, state.width):
        raise ShapeError(f"frame {image.shape} does not match sequence size {(3, state.height, state.width)}")
    cfg, params = state.cfg, state.params
    img = pad_to_stride(image)
    h_pad, w_pad = img.shape[1:]

    feature = encode_query(img, params, cfg)
    bundle = motion_features(state.prev_feature, feature, params, cfg)
    f_m = motion_net_forward(params.motion, bundle.motion_input)
    fused = msam_fuse(feature, f_m, params.msam)
    query = _embed(fused, params, cfg)

    probs = []
    for bank in state.banks:
        read = memory_read(bank, query)
        probs.append(decode(read, params, cfg, h_pad, w_pad, skip=img)[0, :state.height, :state.width])
    mask = soft_aggregate(np.stack(probs))

    t = state.frame_index + 1
    if (t - 1) % cfg.memory_every == 0:
        _write_memory(state, img, mask, t)
    state.prev_image, state.prev_feature, state.prev_mask, state.frame_index = img, feature, mask, t
    return mask, bundle


def iter_sequence(frames, first_mask, cfg=None, params=None):
    """Yield ``(frame_number, mask, motion)`` for frames 2..T (1-based numbering)."""
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    shape = np.shape(frames[0])
    for i, f in enumerate(frames):
        if np.shape(f) != shape:
            raise ShapeError(f"frame {i + 1} has shape {np.shape(f)}, expected {shape}")
    state = init_state(frames[0], first_mask, cfg, params)
    for frame in frames[1:]:
        mask, bundle = segment_frame(state, frame)
        yield state.frame_index, mask, bundle


def run_sequence(frames, first_mask, cfg=None, params=None):
    """Masks for frames 2..T given frame 1's mask (no online fine-tuning)."""
    return [mask for _, mask, _ in iter_sequence(frames, first_mask, cfg, params)]
