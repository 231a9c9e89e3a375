"""Per-object masks and the soft aggregation that merges them."""

from dataclasses import dataclass

import numpy as np

from .tensor_core import as_tensor

AGG_CLAMP = 1e-7


@dataclass(frozen=True)
class ObjectMask:
    labels: np.ndarray  # (H, W) int, 0 = background
    probs: np.ndarray  # (K, H, W) per-object probabilities

    @property
    def num_objects(self):
        return self.probs.shape[0]

    @property
    def shape(self):
        return self.labels.shape

    def binary(self, object_id):
        return self.labels == object_id

    @classmethod
    def from_labels(cls, labels, num_objects=None):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 2:
            raise ValueError(f"label plane must be 2-D, got {labels.shape}")
        k = int(labels.max(initial=0)) if num_objects is None else num_objects
        probs = np.stack([(labels == i).astype(np.float64) for i in range(1, k + 1)]) if k else np.zeros((0,) + labels.shape)
        return cls(labels, probs)


def soft_aggregate(per_object_probs):
    """Merge (K, H, W) independent object probabilities into one labelling.

    Background probability is the product of (1 - p_i); every class is then
    turned into odds and renormalised.  Ties resolve to the lower label.
    """
    p = np.clip(as_tensor(per_object_probs), AGG_CLAMP, 1.0 - AGG_CLAMP)
    if p.ndim != 3 or p.shape[0] < 1:
        raise ValueError(f"expected (K, H, W) probabilities with K >= 1, got {p.shape}")
    bg = np.clip(np.prod(1.0 - p, axis=0, keepdims=True), AGG_CLAMP, 1.0 - AGG_CLAMP)
    full = np.concatenate([bg, p])
    odds = full / (1.0 - full)
    norm = odds / odds.sum(axis=0, keepdims=True)
    labels = np.argmax(norm, axis=0).astype(np.int64)
    return ObjectMask(labels, norm[1:])
