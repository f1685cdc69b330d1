"""Positional-artifact inspection: PCA renderings of token grids.

Feature grids from raw ViTs carry a grid-like pattern inherited from the
positional encoding; the denoised checkpoints attenuate it.  These helpers
project tokens onto their first three principal components for a visual
side-by-side, and report a scalar spatial-variance score so the
attenuation can be compared numerically.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def pca_rgb(tokens: np.ndarray) -> np.ndarray:
    """(Hp, Wp, D) tokens to an (Hp, Wp, 3) uint8 PCA rendering."""
    hp, wp, d = tokens.shape
    flat = tokens.reshape(-1, d).astype(np.float64)
    centered = flat - flat.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    projected = centered @ vt[:3].T
    lo = projected.min(axis=0)
    hi = projected.max(axis=0)
    scaled = (projected - lo) / np.maximum(hi - lo, 1e-12)
    return (scaled.reshape(hp, wp, 3) * 255).astype(np.uint8)


def spatial_variance(tokens: np.ndarray) -> float:
    """Variance of per-patch token values across the grid; for a constant
    input image this is pure positional artifact."""
    flat = tokens.reshape(-1, tokens.shape[2]).astype(np.float64)
    return float(flat.var(axis=0).mean())


def save_comparison(
    renders: dict[str, np.ndarray], out_path: str | Path
) -> None:
    """Write labeled PCA renderings side by side (one column per variant)."""
    tiles = [Image.fromarray(r, mode="RGB") for r in renders.values()]
    width = sum(t.width for t in tiles) + 4 * (len(tiles) - 1)
    height = max(t.height for t in tiles)
    sheet = Image.new("RGB", (width, height), (255, 255, 255))
    x = 0
    for tile in tiles:
        sheet.paste(tile, (x, 0))
        x += tile.width + 4
    sheet.save(out_path)
