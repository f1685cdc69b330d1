"""Iterative proposal of the next most-informative pixel to label.

The selection map blends two per-pixel terms:

* uncertainty ``C = 1 - max_sim``, where ``max_sim`` is the running maximum
  cosine similarity to any labeled embedding — low similarity to every
  label means the embedding neighborhood is unexplored;
* spatial exploration ``D_smooth = 1 - exp(-D^2 / (2 sigma^2))``, a
  smoothed version of the Euclidean distance to the nearest labeled pixel.

These combine into ``M = (D_smooth + weight * C) / (weight + 1)`` and the
next proposal is the argmax of M over unlabeled pixels (ties resolve to the
smallest row, then column).  Both terms vanish at labeled pixels, so a
labeled pixel is never re-proposed; the explicit exclusion is kept as
defense in depth.

Similarities may be negative, so C can exceed 1 while D_smooth stays in
[0, 1); M is intentionally not clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Protocol

import numpy as np

from . import edt
from .embedding import FeatureField
from .errors import (
    AllPixelsLabeledError,
    DimensionMismatchError,
    DuplicatePointError,
    EmptyLabelSetError,
    LabelDeclinedError,
)
from .propagation import LabeledPoint, LabeledPointSet, SimilarityAccessor, propagate

DEFAULT_SIMILARITY_WEIGHT = 2.2
DEFAULT_SIGMA = 50.0
DEFAULT_INITIAL_POINTS = 10


@dataclass(frozen=True)
class HilConfig:
    """Knobs for a labeling session.

    ``initial_points`` may exceed ``budget``; a session then takes
    min(initial_points, budget) seed labels and never proposes.
    """

    budget: int
    similarity_weight: float = DEFAULT_SIMILARITY_WEIGHT
    sigma: float = DEFAULT_SIGMA
    initial_points: int = DEFAULT_INITIAL_POINTS
    k: int = 1

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.similarity_weight <= 0:
            raise ValueError(f"similarity weight must be > 0, got {self.similarity_weight}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.initial_points < 1:
            raise ValueError(f"initial_points must be >= 1, got {self.initial_points}")

    @property
    def seed_count(self) -> int:
        return min(self.initial_points, self.budget)


@dataclass
class ProposalState:
    """Per-pixel maps maintained across a session.

    ``max_sim`` starts at -1 (the cosine floor) so the uncertainty map is
    well defined before the first similarity update.
    """

    max_sim: np.ndarray  # (h, w) float64 running max similarity
    dist: np.ndarray | None = None  # (h, w) float64, None until a pixel is labeled
    labeled: np.ndarray = dataclass_field(default=None)  # (h, w) bool
    excluded: np.ndarray = dataclass_field(default=None)  # declined proposals
    smooth_dist: np.ndarray | None = None
    selection: np.ndarray | None = None  # combined map M

    @classmethod
    def blank(cls, height: int, width: int) -> "ProposalState":
        return cls(
            max_sim=np.full((height, width), -1.0, dtype=np.float64),
            labeled=np.zeros((height, width), dtype=bool),
            excluded=np.zeros((height, width), dtype=bool),
        )

    @property
    def uncertainty(self) -> np.ndarray:
        return 1.0 - self.max_sim

    @property
    def shape(self) -> tuple[int, int]:
        return self.max_sim.shape


def update_similarity(
    state: ProposalState, field: FeatureField, new_label: LabeledPoint
) -> ProposalState:
    """Fold one new labeled embedding into the running max-similarity map."""
    if field.data.shape[:2] != state.shape:
        raise DimensionMismatchError(
            f"field {field.data.shape[:2]} vs state {state.shape}"
        )
    labels = LabeledPointSet(field.dim)
    labels.add(new_label.x, new_label.y, new_label.class_id, new_label.embedding)
    sim = SimilarityAccessor(field, labels).label_map(0)
    np.maximum(state.max_sim, sim, out=state.max_sim)
    return state


def smooth_distance(dist: np.ndarray, sigma: float) -> np.ndarray:
    """Elementwise 1 - exp(-D^2 / (2 sigma^2)); zero where D is zero."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    d = np.asarray(dist, dtype=np.float64)
    return 1.0 - np.exp(-(d * d) / (2.0 * sigma * sigma))


def combine(
    uncertainty: np.ndarray, smooth_dist: np.ndarray, weight: float
) -> np.ndarray:
    """Weighted average (D_smooth + weight * C) / (weight + 1)."""
    if weight <= 0:
        raise ValueError(f"weight must be > 0, got {weight}")
    c = np.asarray(uncertainty, dtype=np.float64)
    d = np.asarray(smooth_dist, dtype=np.float64)
    if c.shape != d.shape:
        raise DimensionMismatchError(f"map shapes differ: {c.shape} vs {d.shape}")
    return (d + weight * c) / (weight + 1.0)


def refresh_maps(state: ProposalState, cfg: HilConfig) -> ProposalState:
    """Recompute the smoothed-distance and combined selection maps."""
    if state.dist is None:
        raise EmptyLabelSetError("no labeled pixel yet; distance map undefined")
    state.smooth_dist = smooth_distance(state.dist, cfg.sigma)
    state.selection = combine(
        state.uncertainty, state.smooth_dist, cfg.similarity_weight
    )
    return state


def add_label_to_state(
    state: ProposalState,
    field: FeatureField,
    label: LabeledPoint,
    cfg: HilConfig,
) -> ProposalState:
    """Incorporate one label: similarity, distance (incremental min) and maps."""
    update_similarity(state, field, label)
    # Self-similarity of a unit vector is exactly 1 and no true cosine can
    # exceed it; pin the labeled pixel so its uncertainty (and hence M) is
    # exactly zero despite float32 rounding of the stored embedding.
    state.max_sim[label.y, label.x] = 1.0
    point_dist = edt.point_distance_grid(
        label.x, label.y, state.shape[0], state.shape[1]
    )
    if state.dist is None:
        state.dist = point_dist
    else:
        np.minimum(state.dist, point_dist, out=state.dist)
    state.labeled[label.y, label.x] = True
    return refresh_maps(state, cfg)


def propose_next(state: ProposalState) -> tuple[int, int]:
    """Coordinates of the maximal selection value among unlabeled pixels."""
    if state.selection is None:
        raise EmptyLabelSetError("selection map not initialized")
    blocked = state.labeled | state.excluded
    if blocked.all():
        raise AllPixelsLabeledError("every pixel is already labeled")
    masked = np.where(blocked, -np.inf, state.selection)
    flat = int(np.argmax(masked))  # first max in row-major order: smallest (y, x)
    y, x = divmod(flat, state.shape[1])
    return x, y


class Expert(Protocol):
    """Labeling oracle: provides seed labels and answers point queries."""

    def seed_labels(self, n: int) -> list[tuple[int, int, int]]:
        ...

    def label_at(self, x: int, y: int) -> int:
        ...


class HilSession:
    """Single-owner interactive session over one feature field.

    Drives the same incremental state whether the expert is a callback
    (``run_hil_session``) or an HTTP client (the session service); the two
    paths produce identical label sequences by construction.
    """

    def __init__(self, field: FeatureField, cfg: HilConfig):
        self.field = field
        self.cfg = cfg
        self.labels = LabeledPointSet(field.dim)
        self.state = ProposalState.blank(field.height, field.width)

    @property
    def phase(self) -> str:
        n = len(self.labels)
        if n >= self.cfg.budget:
            return "complete"
        if n >= self.cfg.initial_points:
            return "proposing"
        return "seeding"

    def add_label(self, x: int, y: int, class_id: int) -> LabeledPoint:
        if self.phase == "complete":
            raise ValueError("session already holds its full budget of labels")
        if self.labels.has_coord(x, y):
            raise DuplicatePointError(f"pixel ({x}, {y}) already labeled")
        embedding = self.field.vector_at(x, y)
        self.labels.add(x, y, class_id, embedding)
        label = self.labels[len(self.labels) - 1]
        add_label_to_state(self.state, self.field, label, self.cfg)
        return label

    def decline(self, x: int, y: int) -> None:
        """Mark a proposed pixel as unlabelable so it is never re-proposed."""
        self.state.excluded[y, x] = True

    def next_proposal(self) -> tuple[int, int, float]:
        if self.phase != "proposing":
            raise ValueError(f"no proposal in phase {self.phase!r}")
        x, y = propose_next(self.state)
        return x, y, float(self.state.selection[y, x])

    def augmented_mask(self) -> np.ndarray:
        return propagate(self.field, self.labels, k=self.cfg.k)


def run_hil_session(
    field: FeatureField, expert: Expert, cfg: HilConfig
) -> LabeledPointSet:
    """Run a full session: seed labels from the expert, then propose/label
    one point at a time until the budget is spent."""
    session = HilSession(field, cfg)
    for x, y, class_id in expert.seed_labels(cfg.seed_count):
        session.add_label(x, y, class_id)
    while session.phase == "proposing":
        x, y, _ = session.next_proposal()
        try:
            class_id = expert.label_at(x, y)
        except LabelDeclinedError:
            session.decline(x, y)
            continue
        session.add_label(x, y, class_id)
    return session.labels
