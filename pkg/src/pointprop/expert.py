"""Expert simulation backed by a ground-truth mask.

Seeding picks the central pixel of the largest instances: connected
components of the mask (4-connectivity, row-major discovery) ranked by
area, each contributing its pole of inaccessibility — the pixel farthest
from the component boundary, with the image border counting as boundary.
Point queries simply return the ground-truth class under the pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import edt
from .errors import EmptyMaskError, LabelDeclinedError, OutOfBoundsError
from .tensor_io import RESERVED_ID


def connected_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 4-connected same-class regions of a mask.

    Returns (labels, count): labels is int32 with component ids assigned in
    row-major discovery order and -1 on reserved (255) pixels.
    """
    mask = np.asarray(mask)
    h, w = mask.shape
    label_rows: list[list[int]] = []
    parent: list[int] = []

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:  # path compression
            parent[a], a = root, parent[a]
        return root

    prev_vals: list[int] = []
    prev_labs: list[int] = []
    for y in range(h):
        vals = mask[y].tolist()
        labs = [-1] * w
        for x in range(w):
            value = vals[x]
            if value == RESERVED_ID:
                continue
            left = labs[x - 1] if x > 0 and vals[x - 1] == value else -1
            up = prev_labs[x] if y > 0 and prev_vals[x] == value else -1
            if left >= 0 and up >= 0:
                labs[x] = left
                ra, rb = find(left), find(up)
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
            elif left >= 0:
                labs[x] = left
            elif up >= 0:
                labs[x] = up
            else:
                labs[x] = len(parent)
                parent.append(len(parent))
        label_rows.append(labs)
        prev_vals, prev_labs = vals, labs

    # Renumber roots in first-encounter (row-major) order.
    remap: dict[int, int] = {}
    for labs in label_rows:
        for x in range(w):
            v = labs[x]
            if v < 0:
                continue
            root = find(v)
            new = remap.get(root)
            if new is None:
                new = len(remap)
                remap[root] = new
            labs[x] = new
    return np.array(label_rows, dtype=np.int32), len(remap)


@dataclass(frozen=True)
class Instance:
    component_id: int
    class_id: int
    area: int
    central: tuple[int, int]  # (x, y) pole of inaccessibility
    first_pixel: tuple[int, int]  # (y, x) of the row-major first pixel


class InstanceIndex:
    """Connected components of a mask, ranked largest-first."""

    def __init__(self, mask: np.ndarray):
        mask = np.asarray(mask, dtype=np.uint8)
        if mask.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
        if not (mask != RESERVED_ID).any():
            raise EmptyMaskError("mask has no non-reserved pixel")
        self.mask = mask
        self.labels, self.count = connected_components(mask)
        self._interior: dict[int, np.ndarray] = {}
        self.instances = self._build()

    def _build(self) -> list[Instance]:
        instances = []
        flat = self.labels.ravel()
        order = np.argsort(flat, kind="stable")
        start = np.searchsorted(flat[order], np.arange(self.count))
        end = np.append(start[1:], flat.shape[0])
        w = self.mask.shape[1]
        for comp in range(self.count):
            idx = order[start[comp]:end[comp]]
            ys, xs = np.divmod(idx, w)
            area = idx.shape[0]
            first = (int(ys[0]), int(xs[0]))  # row-major order within comp
            dist = self._boundary_distance(comp, ys, xs)
            best = np.lexsort((xs, ys, -dist))[0]
            central = (int(xs[best]), int(ys[best]))
            class_id = int(self.mask[ys[0], xs[0]])
            instances.append(Instance(comp, class_id, area, central, first))
        # Largest first; ties by the smaller first-encountered (y, x).
        instances.sort(key=lambda inst: (-inst.area, inst.first_pixel))
        return instances

    def _boundary_distance(
        self, comp: int, ys: np.ndarray, xs: np.ndarray
    ) -> np.ndarray:
        """Distance to the nearest non-component pixel for each member pixel.

        Computed on the component's bounding box padded by one cell so the
        image border acts as boundary.
        """
        y0, y1 = int(ys.min()), int(ys.max())
        x0, x1 = int(xs.min()), int(xs.max())
        box = self.labels[y0:y1 + 1, x0:x1 + 1] == comp
        outside = np.ones((box.shape[0] + 2, box.shape[1] + 2), dtype=bool)
        outside[1:-1, 1:-1] = ~box
        dist = edt.distance_to_nearest(outside)
        return dist[ys - y0 + 1, xs - x0 + 1]

    def ranked_pixels(self, instance: Instance) -> list[tuple[int, int]]:
        """Component pixels ordered most-central first (ties: smaller y, x)."""
        idx = np.flatnonzero(self.labels.ravel() == instance.component_id)
        ys, xs = np.divmod(idx, self.mask.shape[1])
        dist = self._boundary_distance(instance.component_id, ys, xs)
        order = np.lexsort((xs, ys, -dist))
        return [(int(xs[i]), int(ys[i])) for i in order]


def seed_points(gt: np.ndarray, n: int) -> list[tuple[int, int, int]]:
    """Choose n seed labels at the central pixels of the largest instances.

    The top-n components each contribute their most central pixel.  When
    fewer components exist, remaining picks round-robin through the
    components (largest first), taking each one's next-most-central unused
    pixel, until n points are placed or pixels run out.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    index = InstanceIndex(gt)
    picks: list[tuple[int, int, int]] = []
    taken: set[tuple[int, int]] = set()
    for inst in index.instances[:n]:
        x, y = inst.central
        picks.append((x, y, inst.class_id))
        taken.add((x, y))
    if len(picks) >= n:
        return picks

    pools = [(inst, index.ranked_pixels(inst)) for inst in index.instances]
    cursors = [0] * len(pools)
    while len(picks) < n:
        progressed = False
        for i, (inst, pixels) in enumerate(pools):
            while cursors[i] < len(pixels) and pixels[cursors[i]] in taken:
                cursors[i] += 1
            if cursors[i] >= len(pixels):
                continue
            x, y = pixels[cursors[i]]
            picks.append((x, y, inst.class_id))
            taken.add((x, y))
            progressed = True
            if len(picks) == n:
                break
        if not progressed:
            break  # mask exhausted; fewer than n labelable pixels
    return picks


def query(gt: np.ndarray, x: int, y: int) -> int:
    """Ground-truth class at (x, y); may be the reserved id."""
    h, w = gt.shape
    if not (0 <= x < w and 0 <= y < h):
        raise OutOfBoundsError(f"query ({x}, {y}) outside {w}x{h}")
    return int(gt[y, x])


class SimulatedExpert:
    """Expert callback that answers from a ground-truth mask.

    ``reserved_policy`` controls what happens when a proposed pixel is
    unlabeled (255) in the ground truth: ``"label"`` records the reserved
    id (keeps budgets exact; the id is excluded from metrics), ``"decline"``
    refuses so the session re-proposes its next-best location.
    """

    def __init__(self, gt: np.ndarray, reserved_policy: str = "label"):
        if reserved_policy not in ("label", "decline"):
            raise ValueError(f"unknown reserved policy {reserved_policy!r}")
        self.gt = np.asarray(gt, dtype=np.uint8)
        self.reserved_policy = reserved_policy

    def seed_labels(self, n: int) -> list[tuple[int, int, int]]:
        return seed_points(self.gt, n)

    def label_at(self, x: int, y: int) -> int:
        class_id = query(self.gt, x, y)
        if class_id == RESERVED_ID and self.reserved_policy == "decline":
            raise LabelDeclinedError(x, y)
        return class_id
