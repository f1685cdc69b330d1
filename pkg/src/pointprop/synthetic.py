"""Desk-scale synthetic scenes: blob masks with matching embedding fields.

Each scene partitions the image into random class blobs (nearest random
site wins) and synthesizes a per-pixel feature field from one unit
prototype per class.  Near blob boundaries the feature is a blend of the
neighboring prototypes, mimicking how patch-level features smear across
instance boundaries when upsampled; the blend keeps the pixel's own class
weight strictly dominant, so with zero noise the nearest-prototype
classification of the field reproduces the mask exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import tensor_io
from .embedding import l2_normalize


@dataclass(frozen=True)
class SceneParams:
    height: int = 64
    width: int = 64
    classes: int = 5
    dim: int = 8
    sites_per_class: int = 3
    noise: float = 0.2
    boundary_blur: int = 4  # half-width of the prototype blend, in pixels
    own_class_floor: float = 0.6  # blend weight kept on the pixel's own class

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if self.dim < 2:
            raise ValueError("need dimension >= 2")
        if not (0.5 < self.own_class_floor <= 1.0):
            raise ValueError("own-class floor must be in (0.5, 1] to keep the "
                             "zero-noise field consistent with the mask")


def _prototypes(classes: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    raw = rng.normal(size=(dim, max(classes, 1)))
    if classes <= dim:
        q, r = np.linalg.qr(raw[:, :classes])
        q *= np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
        return q.T.astype(np.float64)
    norms = np.linalg.norm(raw[:, :classes], axis=0)
    return (raw[:, :classes] / norms).T.astype(np.float64)


def _box_blur(stack: np.ndarray, radius: int) -> np.ndarray:
    """Edge-aware separable box blur over the leading two axes."""
    if radius <= 0:
        return stack
    out = stack
    for axis in (0, 1):
        n = out.shape[axis]
        padded = np.concatenate(
            [np.zeros_like(np.take(out, [0] * radius, axis=axis)), out,
             np.zeros_like(np.take(out, [0] * radius, axis=axis))], axis=axis)
        csum = np.cumsum(padded, axis=axis)
        csum = np.concatenate(
            [np.zeros_like(np.take(csum, [0], axis=axis)), csum], axis=axis)
        hi = np.take(csum, np.arange(n) + 2 * radius + 1, axis=axis)
        lo = np.take(csum, np.arange(n), axis=axis)
        window = np.minimum(np.arange(n) + radius, n - 1) - np.maximum(
            np.arange(n) - radius, 0) + 1
        shape = [1, 1, 1]
        shape[axis] = n
        out = (hi - lo) / window.reshape(shape)
    return out


@dataclass(frozen=True)
class Scene:
    features: np.ndarray  # (h, w, d) float32 unit vectors
    mask: np.ndarray  # (h, w) uint8
    prototypes: np.ndarray  # (classes, d) float64 unit vectors


def generate_scene(params: SceneParams, rng: np.random.Generator) -> Scene:
    """One synthetic scene; deterministic given the generator state."""
    h, w, k = params.height, params.width, params.classes
    n_sites = k * params.sites_per_class
    flat = rng.choice(h * w, size=min(n_sites, h * w), replace=False)
    site_y, site_x = np.divmod(flat, w)
    site_class = np.arange(flat.shape[0]) % k

    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    d2 = (yy[..., None] - site_y) ** 2 + (xx[..., None] - site_x) ** 2
    mask = site_class[np.argmin(d2, axis=-1)].astype(np.uint8)

    onehot = np.zeros((h, w, k), dtype=np.float64)
    onehot[yy, xx, mask] = 1.0
    blurred = _box_blur(onehot, params.boundary_blur)
    blurred /= np.maximum(blurred.sum(axis=-1, keepdims=True), 1e-12)
    alpha = params.own_class_floor
    weights = alpha * onehot + (1.0 - alpha) * blurred

    protos = _prototypes(k, params.dim, rng)
    feats = weights @ protos
    if params.noise > 0:
        feats = feats + params.noise * rng.normal(size=feats.shape) / np.sqrt(params.dim)
    data, _ = l2_normalize(feats)
    return Scene(features=data, mask=mask, prototypes=protos)


def nearest_prototype_classes(
    features: np.ndarray, protos: np.ndarray
) -> np.ndarray:
    """Classify each pixel by its most similar prototype (test oracle)."""
    sims = features.astype(np.float64) @ protos.T
    return np.argmax(sims, axis=-1).astype(np.uint8)


_PALETTE = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
    (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
]


def class_color(class_id: int) -> tuple[int, int, int]:
    return _PALETTE[class_id % len(_PALETTE)]


def render_preview(mask: np.ndarray) -> np.ndarray:
    """RGB rendering of a class mask for the service/UI demo image."""
    out = np.zeros(mask.shape + (3,), dtype=np.uint8)
    for class_id in np.unique(mask):
        if class_id == tensor_io.RESERVED_ID:
            continue
        out[mask == class_id] = class_color(int(class_id))
    return out


def generate_dataset(
    out_dir: str | Path, scenes: int, seed: int, params: SceneParams | None = None
) -> dict:
    """Write a dataset tree (features/, masks/, images/, legend.json).

    Scene i is generated from an rng seeded with (seed, i), so any prefix of
    a dataset is byte-identical across runs and dataset sizes.
    """
    params = params or SceneParams()
    out_dir = Path(out_dir)
    from PIL import Image

    for sub in ("features", "masks", "images"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    for i in range(scenes):
        rng = np.random.default_rng([seed, i])
        scene = generate_scene(params, rng)
        stem = f"scene_{i:04d}"
        tensor_io.write_tensor(scene.features, out_dir / "features" / f"{stem}.ftns")
        tensor_io.write_mask(scene.mask, out_dir / "masks" / f"{stem}.png")
        Image.fromarray(render_preview(scene.mask), mode="RGB").save(
            out_dir / "images" / f"{stem}.png")
    legend = [
        {"id": c, "name": f"class-{c}", "color": "#%02x%02x%02x" % class_color(c)}
        for c in range(params.classes)
    ]
    manifest = {
        "scenes": scenes,
        "seed": seed,
        "params": asdict(params),
    }
    (out_dir / "legend.json").write_text(json.dumps(legend, indent=2))
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest
