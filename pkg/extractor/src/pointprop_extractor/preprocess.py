"""Image preprocessing: normalization and padding to the patch grid."""

from __future__ import annotations

import numpy as np

from .backends import PATCH_SIZE

# Normalization constants published with the pretrained checkpoints.
MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def pad_to_patch_multiple(image: np.ndarray) -> tuple[np.ndarray, dict]:
    """Zero-pad bottom/right so both extents are multiples of the patch size.

    No resizing happens when the input already fits the grid.  The padding
    amounts go into the sidecar so the engine can align features to pixels.
    """
    h, w = image.shape[:2]
    pad_bottom = (-h) % PATCH_SIZE
    pad_right = (-w) % PATCH_SIZE
    if pad_bottom or pad_right:
        image = np.pad(
            image, ((0, pad_bottom), (0, pad_right), (0, 0)), mode="edge"
        )
    pad = {
        "top": 0,
        "left": 0,
        "bottom": int(pad_bottom),
        "right": int(pad_right),
        "patch_size": PATCH_SIZE,
    }
    return image, pad


def normalize(image_u8: np.ndarray) -> np.ndarray:
    """uint8 RGB to float32 channels normalized with the published constants."""
    if image_u8.ndim != 3 or image_u8.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB, got shape {image_u8.shape}")
    return (image_u8.astype(np.float32) / 255.0 - MEAN) / STD


def prepare(image_u8: np.ndarray) -> tuple[np.ndarray, dict]:
    padded, pad = pad_to_patch_multiple(image_u8)
    return normalize(padded), pad
