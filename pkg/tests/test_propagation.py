"""Nearest-neighbor propagation against exhaustive oracles."""

import numpy as np
import pytest

from pointprop.embedding import FeatureField, l2_normalize
from pointprop.errors import (
    DimensionMismatchError,
    DuplicatePointError,
    EmptyLabelSetError,
    OutOfBoundsError,
)
from pointprop.propagation import LabeledPointSet, SimilarityAccessor, propagate


def random_field(rng, h, w, d):
    data, _ = l2_normalize(rng.normal(size=(h, w, d)).astype(np.float32))
    return FeatureField(data=data)


def random_labels(rng, field, n, classes=6):
    coords = set()
    while len(coords) < n:
        coords.add((int(rng.integers(0, field.width)), int(rng.integers(0, field.height))))
    points = [(x, y, int(rng.integers(0, classes))) for x, y in sorted(coords)]
    return LabeledPointSet.from_points(field, points)


def oracle_propagate(field, labels):
    """Per-pixel scan: argmax similarity with first-max ties, labels pinned."""
    emb = labels.embedding_matrix()  # (L, d) float64
    class_ids = labels.class_ids()
    out = np.empty((field.height, field.width), dtype=np.uint8)
    for y in range(field.height):
        for x in range(field.width):
            sims = emb @ field.data[y, x].astype(np.float64)
            best = 0
            for i in range(1, sims.shape[0]):
                if sims[i] > sims[best]:
                    best = i
            out[y, x] = class_ids[best]
    for p in labels:
        out[p.y, p.x] = p.class_id
    return out


def test_single_label_uniform():
    rng = np.random.default_rng(0)
    field = random_field(rng, 5, 4, 3)
    labels = LabeledPointSet.from_points(field, [(2, 3, 9)])
    assert np.all(propagate(field, labels) == 9)


def test_orthogonal_prototypes():
    a = np.array([1.0, 0.0], dtype=np.float32)
    b = np.array([0.0, 1.0], dtype=np.float32)
    data = np.zeros((4, 4, 2), dtype=np.float32)
    data[:2] = a
    data[2:] = b
    field = FeatureField(data=data)
    labels = LabeledPointSet.from_points(field, [(0, 0, 1), (0, 3, 2)])
    mask = propagate(field, labels)
    assert np.all(mask[:2] == 1)
    assert np.all(mask[2:] == 2)


def test_matches_oracle_random_instance():
    rng = np.random.default_rng(42)
    field = random_field(rng, 32, 32, 8)
    labels = random_labels(rng, field, 25)
    assert np.array_equal(propagate(field, labels), oracle_propagate(field, labels))


def test_block_size_irrelevant():
    rng = np.random.default_rng(7)
    field = random_field(rng, 20, 13, 4)
    labels = random_labels(rng, field, 9)
    full = propagate(field, labels, block_rows=64)
    assert np.array_equal(full, propagate(field, labels, block_rows=3))
    assert np.array_equal(full, propagate(field, labels, block_rows=1))


def test_label_order_invariance_generic():
    rng = np.random.default_rng(11)
    field = random_field(rng, 16, 16, 6)
    points = [
        (x, y, int(rng.integers(0, 4)))
        for x, y in {(int(rng.integers(0, 16)), int(rng.integers(0, 16))) for _ in range(12)}
    ]
    base = propagate(field, LabeledPointSet.from_points(field, points))
    for seed in range(3):
        perm = list(points)
        np.random.default_rng(seed).shuffle(perm)
        assert np.array_equal(
            base, propagate(field, LabeledPointSet.from_points(field, perm))
        )


def test_output_classes_subset_of_labels():
    rng = np.random.default_rng(13)
    field = random_field(rng, 12, 12, 4)
    labels = random_labels(rng, field, 7, classes=40)
    mask = propagate(field, labels)
    assert set(np.unique(mask)) <= {p.class_id for p in labels}


def test_duplicate_label_is_noop():
    rng = np.random.default_rng(19)
    field = random_field(rng, 10, 10, 4)
    points = [(1, 1, 2), (8, 3, 5), (4, 7, 2)]
    base = propagate(field, LabeledPointSet.from_points(field, points))
    dup = LabeledPointSet.from_points(field, points + [points[1]])
    assert len(dup) == len(points)
    assert np.array_equal(base, propagate(field, dup))


def test_conflicting_duplicate_rejected():
    rng = np.random.default_rng(19)
    field = random_field(rng, 4, 4, 4)
    with pytest.raises(DuplicatePointError):
        LabeledPointSet.from_points(field, [(1, 1, 2), (1, 1, 3)])


def test_labeled_pixels_keep_their_class():
    # Two identical embeddings, different classes: the tie rule favors the
    # first label, but the second labeled pixel must keep its own class.
    v = np.array([1.0, 0.0], dtype=np.float32)
    data = np.tile(v, (3, 3, 1))
    field = FeatureField(data=data)
    labels = LabeledPointSet.from_points(field, [(0, 0, 1), (2, 2, 2)])
    mask = propagate(field, labels)
    assert mask[0, 0] == 1
    assert mask[2, 2] == 2
    assert mask[1, 1] == 1  # tie falls to the earlier label


def test_empty_and_bounds_errors():
    rng = np.random.default_rng(3)
    field = random_field(rng, 4, 4, 2)
    with pytest.raises(EmptyLabelSetError):
        propagate(field, LabeledPointSet(2))
    labels = LabeledPointSet(2)
    labels.add(9, 9, 0, np.array([1.0, 0.0], dtype=np.float32))
    with pytest.raises(OutOfBoundsError):
        propagate(field, labels)


def test_degenerate_labels_excluded_from_candidacy():
    data = np.zeros((3, 3, 2), dtype=np.float32)
    data[:, :, 0] = 1.0
    data[1, 1] = 0.0  # degenerate pixel
    field = FeatureField(data=data, degenerate=(np.linalg.norm(data, axis=-1) == 0))
    labels = LabeledPointSet.from_points(field, [(1, 1, 7), (0, 0, 3)])
    mask = propagate(field, labels)
    assert mask[1, 1] == 7  # pinned
    others = np.delete(mask.ravel(), 4)
    assert np.all(others == 3)


def test_k_bounds_validated():
    rng = np.random.default_rng(3)
    field = random_field(rng, 4, 4, 2)
    labels = random_labels(rng, field, 3)
    with pytest.raises(ValueError):
        propagate(field, labels, k=4)
    with pytest.raises(ValueError):
        propagate(field, labels, k=0)


def _three_label_field():
    a = np.array([1.0, 0.0], dtype=np.float32)
    b = np.array([0.0, 1.0], dtype=np.float32)
    mix = np.array([1.0, 1.0], dtype=np.float32) / np.sqrt(2)
    data = np.zeros((1, 4, 2), dtype=np.float32)
    data[0, 0] = a
    data[0, 1] = b
    data[0, 2] = mix
    data[0, 3] = a  # unlabeled query pixel, nearest to label 0
    return FeatureField(data=data)


def test_k3_majority_outvotes_nearest():
    field = _three_label_field()
    # Labels 1 and 2 share a class; at the query pixel the nearest label is
    # 0 (sim 1.0) but the 2-vs-1 majority must win under k=3.
    labels = LabeledPointSet.from_points(field, [(0, 0, 5), (1, 0, 6), (2, 0, 6)])
    mask = propagate(field, labels, k=3)
    assert mask[0, 3] == 6
    assert propagate(field, labels, k=1)[0, 3] == 5


def test_k3_tied_majority_falls_back_to_nearest():
    field = _three_label_field()
    # Three distinct classes vote 1-1-1; the tie degrades to the k=1 answer.
    labels = LabeledPointSet.from_points(field, [(0, 0, 5), (1, 0, 6), (2, 0, 7)])
    mask = propagate(field, labels, k=3)
    assert mask[0, 3] == 5


def test_similarity_accessor_identity_and_spots():
    rng = np.random.default_rng(23)
    field = random_field(rng, 10, 10, 5)
    labels = random_labels(rng, field, 6)
    access = SimilarityAccessor(field, labels)
    for i, p in enumerate(labels):
        assert access.sim(p.x, p.y, i) == pytest.approx(1.0, abs=1e-6)
    for _ in range(10):
        x = int(rng.integers(0, 10))
        y = int(rng.integers(0, 10))
        i = int(rng.integers(0, len(labels)))
        expected = float(
            field.data[y, x].astype(np.float64)
            @ labels[i].embedding.astype(np.float64)
        )
        assert access.sim(x, y, i) == pytest.approx(expected, abs=1e-12)


def test_similarity_accessor_symmetric_fixture():
    a = np.array([1.0, 0.0], dtype=np.float32)
    b = np.array([0.0, 1.0], dtype=np.float32)
    data = np.stack([[a, b]])  # (1, 2, 2)
    field = FeatureField(data=data)
    labels = LabeledPointSet.from_points(field, [(0, 0, 0), (1, 0, 1)])
    access = SimilarityAccessor(field, labels)
    # Swapped prototypes give mirrored similarity rows.
    assert access.sim(0, 0, 0) == pytest.approx(access.sim(1, 0, 1))
    assert access.sim(0, 0, 1) == pytest.approx(access.sim(1, 0, 0))


def test_similarity_accessor_bounds():
    rng = np.random.default_rng(29)
    field = random_field(rng, 4, 4, 3)
    labels = random_labels(rng, field, 2)
    access = SimilarityAccessor(field, labels)
    with pytest.raises(OutOfBoundsError):
        access.sim(0, 0, 5)
    with pytest.raises(OutOfBoundsError):
        access.sim(4, 0, 0)


def test_dimension_mismatch():
    rng = np.random.default_rng(31)
    field = random_field(rng, 4, 4, 3)
    labels = LabeledPointSet(2)
    labels.add(0, 0, 1, np.array([1.0, 0.0], dtype=np.float32))
    with pytest.raises(DimensionMismatchError):
        SimilarityAccessor(field, labels)
