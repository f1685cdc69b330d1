"""Nearest-neighbor propagation of sparse point labels over a feature field.

Every pixel is assigned the majority class among its k most-cosine-similar
labeled embeddings (k defaults to 1, which reduces to a plain nearest
neighbor in embedding space).  Search is exact: dot products against every
labeled embedding, computed in float64, streamed over row blocks to bound
working memory.

Tie rules, in order: equal similarity prefers the label with the smaller
labeling-order index; a tied majority falls back to the class of the single
nearest neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import FeatureField
from .errors import (
    DimensionMismatchError,
    DuplicatePointError,
    EmptyLabelSetError,
    OutOfBoundsError,
)

DEFAULT_BLOCK_ROWS = 64
_NORM_TOLERANCE = 1e-3


@dataclass(frozen=True)
class LabeledPoint:
    x: int
    y: int
    class_id: int
    embedding: np.ndarray


class LabeledPointSet:
    """Ordered labeled pixels with coordinates, class ids and embeddings.

    Order is labeling order and drives every tie rule.  Exact duplicates
    (same pixel, class and embedding) are ignored; a re-label of an existing
    pixel with a different payload is rejected.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self._points: list[LabeledPoint] = []
        self._by_coord: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(self._points)

    def __getitem__(self, i: int) -> LabeledPoint:
        return self._points[i]

    def add(self, x: int, y: int, class_id: int, embedding: np.ndarray) -> bool:
        """Append a labeled point; returns False for an ignored exact duplicate."""
        embedding = np.asarray(embedding, dtype=np.float32)
        if embedding.shape != (self.dim,):
            raise DimensionMismatchError(
                f"embedding shape {embedding.shape} != ({self.dim},)"
            )
        norm = float(np.linalg.norm(embedding.astype(np.float64)))
        if norm > 1e-12 and abs(norm - 1.0) > _NORM_TOLERANCE:
            raise DimensionMismatchError(f"embedding not normalized (norm {norm:.6f})")
        key = (int(x), int(y))
        existing = self._by_coord.get(key)
        if existing is not None:
            prior = self._points[existing]
            if prior.class_id == class_id and np.array_equal(prior.embedding, embedding):
                return False
            raise DuplicatePointError(f"pixel {key} already labeled")
        self._by_coord[key] = len(self._points)
        self._points.append(LabeledPoint(int(x), int(y), int(class_id), embedding))
        return True

    def has_coord(self, x: int, y: int) -> bool:
        return (int(x), int(y)) in self._by_coord

    @classmethod
    def from_points(
        cls, field: FeatureField, points: list[tuple[int, int, int]]
    ) -> "LabeledPointSet":
        """Build a point set by sampling embeddings from a field."""
        labels = cls(field.dim)
        for x, y, class_id in points:
            labels.add(x, y, class_id, field.vector_at(x, y))
        return labels

    def embedding_matrix(self) -> np.ndarray:
        return np.stack([p.embedding for p in self._points]).astype(np.float64)

    def class_ids(self) -> np.ndarray:
        return np.array([p.class_id for p in self._points], dtype=np.int64)

    def coords(self) -> list[tuple[int, int]]:
        return [(p.x, p.y) for p in self._points]

    def as_rows(self) -> list[tuple[int, int, int]]:
        return [(p.x, p.y, p.class_id) for p in self._points]


class SimilarityAccessor:
    """Per-pixel, per-label cosine similarity over a field and a label set."""

    def __init__(self, field: FeatureField, labels: LabeledPointSet):
        if labels.dim != field.dim:
            raise DimensionMismatchError(
                f"label dim {labels.dim} != field dim {field.dim}"
            )
        self.field = field
        self.labels = labels
        self._emb_t = labels.embedding_matrix().T  # (d, L)

    def sim(self, x: int, y: int, label_index: int) -> float:
        if not (0 <= label_index < len(self.labels)):
            raise OutOfBoundsError(f"label index {label_index} out of range")
        pixel = self.field.vector_at(x, y).astype(np.float64)
        return float(pixel @ self._emb_t[:, label_index])

    def label_map(self, label_index: int) -> np.ndarray:
        """Similarity of every pixel to one labeled embedding, as (h, w) float64."""
        if not (0 <= label_index < len(self.labels)):
            raise OutOfBoundsError(f"label index {label_index} out of range")
        h, w, d = self.field.data.shape
        flat = self.field.data.reshape(h * w, d).astype(np.float64)
        return (flat @ self._emb_t[:, label_index]).reshape(h, w)

    def block(self, y0: int, y1: int) -> np.ndarray:
        """Similarities of rows [y0, y1) to all labels, as (rows, w, L) float64."""
        rows = self.field.data[y0:y1].astype(np.float64)
        return rows @ self._emb_t


def propagate(
    field: FeatureField,
    labels: LabeledPointSet,
    k: int = 1,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> np.ndarray:
    """Propagate a label set to every pixel, producing a uint8 class mask.

    Labeled pixels always retain their given class.  Labels with degenerate
    (zero) embeddings are excluded from neighbor candidacy but still pin
    their own pixel.
    """
    if len(labels) == 0:
        raise EmptyLabelSetError("cannot propagate an empty label set")
    for p in labels:
        if not (0 <= p.x < field.width and 0 <= p.y < field.height):
            raise OutOfBoundsError(
                f"label at ({p.x}, {p.y}) outside {field.width}x{field.height}"
            )

    usable = [
        i
        for i, p in enumerate(labels)
        if float(np.linalg.norm(p.embedding)) > 1e-12
    ]
    if not usable:
        raise EmptyLabelSetError("all labeled embeddings are degenerate")
    if not (1 <= k <= len(usable)):
        raise ValueError(f"k={k} outside 1..{len(usable)}")

    class_ids = labels.class_ids()[usable]
    sub = LabeledPointSet(labels.dim)
    for i in usable:
        p = labels[i]
        sub.add(p.x, p.y, p.class_id, p.embedding)
    access = SimilarityAccessor(field, sub)

    h, w = field.height, field.width
    mask = np.empty((h, w), dtype=np.uint8)
    for y0 in range(0, h, block_rows):
        y1 = min(y0 + block_rows, h)
        sims = access.block(y0, y1).reshape(-1, len(usable))
        if k == 1:
            # argmax returns the first maximum: the smaller labeling-order
            # index wins exact ties.
            nearest = np.argmax(sims, axis=1)
            mask[y0:y1] = class_ids[nearest].reshape(y1 - y0, w).astype(np.uint8)
        else:
            mask[y0:y1] = _majority_vote(sims, class_ids, k).reshape(y1 - y0, w)
    for p in labels:
        mask[p.y, p.x] = p.class_id
    return mask


def _majority_vote(sims: np.ndarray, class_ids: np.ndarray, k: int) -> np.ndarray:
    # Stable sort on negated similarity keeps labeling order within ties.
    order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    votes = class_ids[order]  # (n, k)
    n = sims.shape[0]
    counts = np.zeros((n, 256), dtype=np.int32)
    rows = np.repeat(np.arange(n), k)
    np.add.at(counts, (rows, votes.reshape(-1)), 1)
    top = counts.max(axis=1)
    tied = (counts == top[:, None]).sum(axis=1) > 1
    winner = counts.argmax(axis=1)
    # A tied majority degrades to k=1: the nearest neighbor's class.
    winner[tied] = votes[tied, 0]
    return winner.astype(np.uint8)
