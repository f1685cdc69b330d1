"""Exact Euclidean distance transform via the two-pass separable algorithm.

Pass one scans each column for the vertical distance to the nearest seed;
pass two sweeps the lower envelope of parabolas along each row.  Squared
distances stay integral throughout, so the result is exact up to the final
square root.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyLabelSetError, OutOfBoundsError

_FAR = 1e12  # sentinel squared distance; dominates any real grid distance


def distance_to_nearest(seeds: np.ndarray) -> np.ndarray:
    """Distance from every cell of a 2-D grid to the nearest True cell."""
    seeds = np.asarray(seeds, dtype=bool)
    if seeds.ndim != 2:
        raise ValueError(f"seed mask must be 2-D, got shape {seeds.shape}")
    if not seeds.any():
        raise EmptyLabelSetError("seed mask has no True cell")
    h, w = seeds.shape

    # Vertical pass: per-column distance (in rows) to the nearest seed,
    # computed with forward/backward min sweeps vectorized across columns.
    g = np.where(seeds, 0.0, _FAR)
    for y in range(1, h):
        np.minimum(g[y], g[y - 1] + 1.0, out=g[y])
    for y in range(h - 2, -1, -1):
        np.minimum(g[y], g[y + 1] + 1.0, out=g[y])

    gsq = g * g
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        out[y] = _envelope_1d(gsq[y])
    return np.sqrt(out)


def _envelope_1d(f: np.ndarray) -> np.ndarray:
    """1-D squared distance transform of sampled function f (Felzenszwalb)."""
    n = f.shape[0]
    d = np.empty(n, dtype=np.float64)
    v = np.empty(n, dtype=np.intp)  # parabola apexes in the envelope
    z = np.empty(n + 1, dtype=np.float64)  # envelope segment boundaries
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) ** 2 + f[v[k]]
    return d


def distance_map(
    coords: list[tuple[int, int]] | np.ndarray, height: int, width: int
) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest (x, y) in coords."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.intp))
    if coords.size == 0:
        raise EmptyLabelSetError("no labeled coordinates")
    xs, ys = coords[:, 0], coords[:, 1]
    if (xs < 0).any() or (xs >= width).any() or (ys < 0).any() or (ys >= height).any():
        raise OutOfBoundsError(f"coordinate outside {width}x{height}")
    seeds = np.zeros((height, width), dtype=bool)
    seeds[ys, xs] = True
    return distance_to_nearest(seeds)


def point_distance_grid(x: int, y: int, height: int, width: int) -> np.ndarray:
    """Distance from every pixel to a single point; used for incremental updates."""
    yy = (np.arange(height, dtype=np.float64) - y) ** 2
    xx = (np.arange(width, dtype=np.float64) - x) ** 2
    return np.sqrt(yy[:, None] + xx[None, :])
