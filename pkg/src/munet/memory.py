"""Key/value embedding and the space-time memory read/write loop."""

from dataclasses import dataclass

import numpy as np

from .tensor_core import ShapeError, as_tensor, conv2d, softmax_over


class NoReferenceError(RuntimeError):
    """Raised when reading from a memory bank that holds no frames."""


@dataclass(frozen=True)
class MemoryEntry:
    frame_index: int
    key: np.ndarray  # (Dk, H, W)
    value: np.ndarray  # (Dv, H, W)


@dataclass(frozen=True)
class MemoryBank:
    entries: tuple = ()

    def __len__(self):
        return len(self.entries)

    @property
    def frame_indices(self):
        return [e.frame_index for e in self.entries]

    @property
    def dk(self):
        return self.entries[0].key.shape[0] if self.entries else None

    @property
    def dv(self):
        return self.entries[0].value.shape[0] if self.entries else None


@dataclass(frozen=True)
class QueryEmbedding:
    key: np.ndarray
    value: np.ndarray


def embed_kv(feature, key_weight, key_bias, value_weight, value_bias):
    """Two parallel 1x1 convolutions producing key and value maps."""
    feature = as_tensor(feature)
    for name, w in (("key", key_weight), ("value", value_weight)):
        if np.shape(w)[1:] != (feature.shape[0], 1, 1):
            raise ShapeError(f"{name} projection {np.shape(w)} does not fit a {feature.shape[0]}-channel feature")
    key = conv2d(feature, key_weight, key_bias, pad=0)
    value = conv2d(feature, value_weight, value_bias, pad=0)
    return QueryEmbedding(key, value)


def memory_write(bank, frame_index, key, value):
    """Return a new bank with ``(frame_index, key, value)`` appended."""
    key = as_tensor(key)
    value = as_tensor(value)
    if key.ndim != 3 or value.ndim != 3 or key.shape[1:] != value.shape[1:]:
        raise ShapeError(f"key {key.shape} and value {value.shape} must be (C,H,W) on one grid")
    if bank.entries:
        last = bank.entries[-1]
        if frame_index <= last.frame_index:
            raise ValueError(f"frame index {frame_index} is not after the last stored index {last.frame_index}")
        if key.shape != last.key.shape or value.shape != last.value.shape:
            raise ShapeError(
                f"entry shapes {key.shape}/{value.shape} differ from stored {last.key.shape}/{last.value.shape}"
            )
    return MemoryBank(bank.entries + (MemoryEntry(int(frame_index), key, value),))


def _stacked(bank):
    keys = np.concatenate([e.key.reshape(e.key.shape[0], -1) for e in bank.entries], axis=1)
    values = np.concatenate([e.value.reshape(e.value.shape[0], -1) for e in bank.entries], axis=1)
    return keys, values


def memory_attention(bank, query_key):
    """Softmax attention weights (H*W query positions, N stored positions)."""
    if not bank.entries:
        raise NoReferenceError("memory bank is empty: no reference frame to read from")
    query_key = as_tensor(query_key)
    if query_key.shape[0] != bank.dk or query_key.shape[1:] != bank.entries[0].key.shape[1:]:
        raise ShapeError(f"query key {query_key.shape} does not match bank keys {bank.entries[0].key.shape}")
    keys, _ = _stacked(bank)
    q = query_key.reshape(query_key.shape[0], -1)
    return softmax_over(q.T @ keys, axes=1)


def memory_read(bank, query):
    """Retrieve memory values for every query position and append the query value.

    Returns (2 * Dv, H, W): retrieved values first, then ``query.value``.
    """
    weights = memory_attention(bank, query.key)
    _, values = _stacked(bank)
    h, w = query.key.shape[1:]
    retrieved = (values @ weights.T).reshape(values.shape[0], h, w)
    return np.concatenate([retrieved, as_tensor(query.value)])
