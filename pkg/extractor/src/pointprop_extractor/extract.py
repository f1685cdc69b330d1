"""Batch extraction: images in, FTNS tensors plus sidecar JSON out."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from PIL import Image

from pointprop import tensor_io

from .backends import PatchEmbedder
from .preprocess import prepare

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def extract_image(image_u8: np.ndarray, embedder: PatchEmbedder) -> tuple[np.ndarray, dict]:
    """Tokens for one image: (ceil(H/14), ceil(W/14), 768) plus sidecar data."""
    pixels, pad = prepare(image_u8)
    tokens = embedder.embed(pixels)
    sidecar = {
        "checkpoint": embedder.checkpoint,
        "image_height": int(image_u8.shape[0]),
        "image_width": int(image_u8.shape[1]),
        "grid_rows": int(tokens.shape[0]),
        "grid_cols": int(tokens.shape[1]),
        "token_dim": int(tokens.shape[2]),
        "padding": pad,
    }
    return tokens, sidecar


def extract_directory(
    image_dir: str | Path,
    out_dir: str | Path,
    embedder: PatchEmbedder,
    variant: str,
) -> dict:
    """Extract every image in a directory; decode failures are skipped and
    logged, never fatal."""
    image_dir = Path(image_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written, skipped = [], []
    for path in sorted(image_dir.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        try:
            image = load_rgb(path)
        except Exception as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            skipped.append(path.name)
            continue
        tokens, sidecar = extract_image(image, embedder)
        sidecar["variant"] = variant
        sidecar["source"] = path.name
        stem = path.stem
        tensor_io.write_tensor(tokens, out_dir / f"{stem}.ftns")
        (out_dir / f"{stem}.json").write_text(json.dumps(sidecar, indent=2))
        written.append(stem)
    summary = {"written": written, "skipped": skipped, "variant": variant}
    (out_dir / "extraction.json").write_text(json.dumps(summary, indent=2))
    return summary
