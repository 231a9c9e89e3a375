"""Binary PPM/PGM images and flat little-endian parameter files."""

import struct
from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    """Malformed or unsupported image file; ``offset`` is the failing byte position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(ImageFormatError):
    pass


class TruncatedImageError(ImageFormatError):
    pass


class MaxvalError(ImageFormatError):
    pass


class ParamFormatError(ValueError):
    pass


_MAGIC_CHANNELS = {b"P5": 1, b"P6": 3}


def _next_token(data, pos):
    """Read one whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise TruncatedImageError("header ended early", start)
    return data[start:pos], start, pos


def decode_pnm(data):
    """Decode P5/P6 bytes into a uint8 array of shape (C, H, W)."""
    if len(data) < 2:
        raise TruncatedImageError("file too short for a magic number", len(data))
    magic = bytes(data[:2])
    if magic not in _MAGIC_CHANNELS:
        raise UnsupportedFormatError(f"unsupported magic {magic!r}, expected P5 or P6", 0)
    channels = _MAGIC_CHANNELS[magic]
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, start, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ImageFormatError(f"bad {name} field {tok!r}", start) from None
        if fields[-1] <= 0:
            raise ImageFormatError(f"{name} must be positive", start)
    width, height, maxval = fields
    if maxval != 255:
        raise MaxvalError(f"maxval {maxval} is not 255", start)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise TruncatedImageError("missing whitespace before raster", pos)
    pos += 1
    need = width * height * channels
    if len(data) - pos < need:
        raise TruncatedImageError(f"raster needs {need} bytes, found {len(data) - pos}", len(data))
    raster = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return raster.reshape(height, width, channels).transpose(2, 0, 1).copy()


def encode_pnm(pixels):
    """Encode a uint8 (1|3, H, W) array as P5/P6 bytes."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[0] not in (1, 3):
        raise ValueError(f"expected (1|3, H, W) pixels, got {pixels.shape}")
    c, h, w = pixels.shape
    magic = b"P5" if c == 1 else b"P6"
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(pixels.transpose(1, 2, 0), dtype=np.uint8).tobytes()


def to_bytes(x):
    """Scale [0, 1] reals to 8 bit with round-half-up."""
    return np.clip(np.floor(np.asarray(x, dtype=np.float64) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def load_image(path):
    """Load a PPM/PGM file as float64 in [0, 1], shape (C, H, W)."""
    return decode_pnm(Path(path).read_bytes()).astype(np.float64) / 255.0


def save_image(path, x):
    Path(path).write_bytes(encode_pnm(to_bytes(x)))


def load_labels(path):
    """Load a PGM label plane (gray value = object id) as an int array (H, W)."""
    pixels = decode_pnm(Path(path).read_bytes())
    if pixels.shape[0] != 1:
        raise UnsupportedFormatError("label files must be PGM (P5)", 0)
    return pixels[0].astype(np.int64)


def save_labels(path, labels):
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 255:
        raise ValueError("object ids must fit in 0..255")
    Path(path).write_bytes(encode_pnm(labels.astype(np.uint8)[None]))


# parameter files: magic, u32 version, u32 count, then per tensor
# u16 name length, name (utf-8), u32 ndim, u32 dims..., float64 payload
PARAM_MAGIC = b"MUNP"
PARAM_VERSION = 1


def save_params(path, tensors):
    chunks = [PARAM_MAGIC, struct.pack("<II", PARAM_VERSION, len(tensors))]
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype="<f8")
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)) + raw)
        chunks.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_params(path):
    data = Path(path).read_bytes()
    if data[:4] != PARAM_MAGIC:
        raise ParamFormatError(f"bad parameter file magic {data[:4]!r}")
    try:
        version, count = struct.unpack_from("<II", data, 4)
        if version != PARAM_VERSION:
            raise ParamFormatError(f"unsupported parameter file version {version}")
        pos = 12
        out = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, pos)
            name = data[pos + 2:pos + 2 + n].decode("utf-8")
            pos += 2 + n
            (ndim,) = struct.unpack_from("<I", data, pos)
            shape = struct.unpack_from(f"<{ndim}I", data, pos + 4)
            pos += 4 + 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            if pos + 8 * size > len(data):
                raise ParamFormatError(f"tensor {name!r} payload is truncated")
            out[name] = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
            pos += 8 * size
    except struct.error as exc:
        raise ParamFormatError(f"truncated parameter file: {exc}") from None
    return out
