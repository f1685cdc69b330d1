"""Random and grid point layouts for the non-interactive labeling baselines."""

from __future__ import annotations

import math

import numpy as np

from .errors import TooManyPointsError


def random_points(
    h: int, w: int, n: int, seed: int
) -> list[tuple[int, int]]:
    """n distinct uniformly random pixel coordinates, deterministic per seed.

    Uses numpy's default PCG64 generator; layouts are reproducible across
    runs of this build (cross-implementation identity is not promised).
    """
    if n > h * w:
        raise TooManyPointsError(f"{n} points requested for {h * w} pixels")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(h * w, size=n, replace=False)
    return [(int(i % w), int(i // w)) for i in flat]


def _row_coords(count: int, extent: int) -> list[int]:
    # Half-cell centers: (j + 0.5) / count of the extent, rounded and clamped.
    return [
        min(extent - 1, max(0, round((j + 0.5) * extent / count)))
        for j in range(count)
    ]


def grid_points(h: int, w: int, n: int) -> list[tuple[int, int]]:
    """Evenly spaced grid layout for n points.

    General rule: r = round(sqrt(n)) rows, c = ceil(n / r) columns, points at
    half-cell centers, the final row centering any shortfall.  Two layouts
    are special-cased to match the published arrangements: n=5 is a 2x2
    quarter-position grid plus the exact center, and n=10 uses three rows of
    3, 4 and 3 points at row fractions 1/6, 1/2 and 5/6.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > h * w:
        raise TooManyPointsError(f"{n} points requested for {h * w} pixels")

    if n == 5:
        ys = _row_coords(2, h)
        xs = _row_coords(2, w)
        points = [(x, y) for y in ys for x in xs]
        points.append((min(w - 1, round(w / 2)), min(h - 1, round(h / 2))))
    elif n == 10:
        row_counts = [3, 4, 3]
        ys = _row_coords(3, h)
        points = [
            (x, y)
            for y, count in zip(ys, row_counts)
            for x in _row_coords(count, w)
        ]
    else:
        r = max(1, round(math.sqrt(n)))
        c = math.ceil(n / r)
        ys = _row_coords(r, h)
        points = []
        for i, y in enumerate(ys):
            count = c if i < r - 1 else n - c * (r - 1)
            points.extend((x, y) for x in _row_coords(count, w))

    return _ensure_distinct(points, h, w, n)


def _ensure_distinct(
    points: list[tuple[int, int]], h: int, w: int, n: int
) -> list[tuple[int, int]]:
    # Rounding can collide on tiny grids; dedupe and backfill row-major.
    seen: set[tuple[int, int]] = set()
    out = []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    if len(out) < n:
        for flat in range(h * w):
            p = (flat % w, flat // w)
            if p not in seen:
                seen.add(p)
                out.append(p)
                if len(out) == n:
                    break
    return out
