"""Offline adapter from pretrained ViT patch tokens to FTNS feature files."""

from .backends import CHECKPOINTS, PATCH_SIZE, TOKEN_DIM, VARIANTS, load_embedder
from .extract import extract_directory, extract_image

__all__ = [
    "CHECKPOINTS",
    "PATCH_SIZE",
    "TOKEN_DIM",
    "VARIANTS",
    "load_embedder",
    "extract_directory",
    "extract_image",
]
