"""Per-pixel embedding fields built from patch-level feature tensors.

A patch tensor of shape (Hp, Wp, D) is bilinearly upsampled to the target
image size and then L2-normalized per pixel, yielding a field of unit
vectors whose pairwise cosine similarity is a plain dot product.
Normalization happens after upsampling, in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, OutOfBoundsError

DEGENERATE_NORM = 1e-12


@dataclass
class FeatureField:
    """Dense (h, w, d) float32 field of unit vectors.

    Pixels whose source vector had near-zero norm are kept as zero vectors
    and flagged in ``degenerate``; they never win similarity comparisons
    and are excluded from neighbor candidacy when labeled.
    """

    data: np.ndarray
    degenerate: np.ndarray = field(default=None)  # (h, w) bool

    def __post_init__(self):
        if self.data.ndim != 3:
            raise DimensionMismatchError(
                f"field data must be (h, w, d), got shape {self.data.shape}"
            )
        if self.degenerate is None:
            self.degenerate = np.zeros(self.data.shape[:2], dtype=bool)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def vector_at(self, x: int, y: int) -> np.ndarray:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise OutOfBoundsError(
                f"pixel ({x}, {y}) outside {self.width}x{self.height}"
            )
        return self.data[y, x]


def _axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel centers: output index i samples source coordinate
    # (i + 0.5) * n_in / n_out - 0.5, clamped to the border.
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def upsample_bilinear(patch: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Channelwise bilinear interpolation of (Hp, Wp, D) to (out_h, out_w, D).

    Uses half-pixel-center alignment with sample coordinates clamped at the
    borders; a 1x1 patch grid therefore broadcasts to a constant field.
    """
    if patch.ndim != 3:
        raise DimensionMismatchError(
            f"patch tensor must be (Hp, Wp, D), got shape {patch.shape}"
        )
    if out_h < 1 or out_w < 1:
        raise DimensionMismatchError(f"output size {out_h}x{out_w} invalid")
    src = patch.astype(np.float64, copy=False)
    ylo, yhi, yfrac = _axis_weights(patch.shape[0], out_h)
    xlo, xhi, xfrac = _axis_weights(patch.shape[1], out_w)

    rows = src[ylo] * (1.0 - yfrac)[:, None, None] + src[yhi] * yfrac[:, None, None]
    out = (
        rows[:, xlo] * (1.0 - xfrac)[None, :, None]
        + rows[:, xhi] * xfrac[None, :, None]
    )
    return out.astype(np.float32)


def l2_normalize(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divide each pixel vector by its L2 norm.

    Returns (normalized float32 array, degenerate flags).  Vectors with
    norm below ``DEGENERATE_NORM`` become zero vectors and are flagged
    rather than producing NaNs.
    """
    norms = np.linalg.norm(data.astype(np.float64, copy=False), axis=-1)
    degenerate = norms < DEGENERATE_NORM
    safe = np.where(degenerate, 1.0, norms)
    out = (data / safe[..., None]).astype(np.float32)
    out[degenerate] = 0.0
    return out, degenerate


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors; the cosine similarity."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"vector shapes differ: {a.shape} vs {b.shape}")
    return float(np.dot(a.astype(np.float64), b.astype(np.float64)))


def build_field(
    patch: np.ndarray, out_h: int, out_w: int, normalize_first: bool = False
) -> FeatureField:
    """Upsample a patch tensor to pixel resolution and L2-normalize.

    The default order is upsample-then-normalize; ``normalize_first``
    flips it (normalize at patch resolution, renormalize after
    interpolation) for comparison runs.
    """
    if normalize_first:
        patch, _ = l2_normalize(patch)
    upsampled = upsample_bilinear(patch, out_h, out_w)
    data, degenerate = l2_normalize(upsampled)
    return FeatureField(data=data, degenerate=degenerate)
