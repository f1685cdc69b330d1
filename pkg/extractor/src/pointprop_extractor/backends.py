"""Patch-token embedders.

An embedder turns a preprocessed image batch into per-patch tokens of
shape (Hp, Wp, 768), with the whole-image summary token discarded.  The
production backends load published pretrained checkpoints through torch
hub (downloaded on first use); anything implementing :class:`PatchEmbedder`
can be injected instead, which is how the test suite runs without weights.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

PATCH_SIZE = 14
TOKEN_DIM = 768

VARIANTS = ("raw", "denoised", "registers", "denoised+registers")

# Published checkpoint identifiers, recorded verbatim in every sidecar.
CHECKPOINTS = {
    "raw": "facebookresearch/dinov2:dinov2_vitb14",
    "registers": "facebookresearch/dinov2:dinov2_vitb14_reg",
    "denoised": "jiawei-yang/Denoising-ViT:vit_base_patch14_dinov2.lvd142m",
    "denoised+registers":
        "jiawei-yang/Denoising-ViT:vit_base_patch14_reg4_dinov2.lvd142m",
}


class PatchEmbedder(Protocol):
    """Maps a normalized (H, W, 3) float32 image, H and W multiples of the
    patch size, to an (H/14, W/14, 768) float32 token grid."""

    checkpoint: str

    def embed(self, pixels: np.ndarray) -> np.ndarray:
        ...


class WeightLoadError(RuntimeError):
    """A pretrained checkpoint could not be retrieved or instantiated."""


class TorchHubEmbedder:
    """Wraps a DINOv2-family model loaded from torch hub, eval mode.

    The denoised variants additionally require the Denoising ViT release;
    install it (or vendor its hubconf) before selecting them.
    """

    def __init__(self, variant: str, device: str = "cpu"):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; pick from {VARIANTS}")
        self.variant = variant
        self.checkpoint = CHECKPOINTS[variant]
        self.device = device
        self._model = None

    def _load(self):
        if self._model is not None:
            return self._model
        try:
            import torch
        except ImportError as exc:
            raise WeightLoadError("torch is not installed") from exc
        repo, name = self.checkpoint.split(":")
        try:
            if self.variant in ("raw", "registers"):
                model = torch.hub.load(repo, name)
            else:
                # The denoiser release wraps a frozen DINOv2 trunk; its hub
                # entry point returns the denoised-token module directly.
                model = torch.hub.load(repo, "denoised_vit", backbone=name)
        except Exception as exc:
            raise WeightLoadError(
                f"failed to load {self.checkpoint}: {exc}"
            ) from exc
        model.eval()
        self._model = model.to(self.device)
        return self._model

    def embed(self, pixels: np.ndarray) -> np.ndarray:
        import torch

        model = self._load()
        h, w, _ = pixels.shape
        hp, wp = h // PATCH_SIZE, w // PATCH_SIZE
        batch = torch.from_numpy(pixels.transpose(2, 0, 1)[None]).to(self.device)
        with torch.no_grad():
            out = model.forward_features(batch)
        tokens = out["x_norm_patchtokens"] if isinstance(out, dict) else out
        tokens = tokens.reshape(1, hp, wp, -1)[0].cpu().numpy()
        return np.ascontiguousarray(tokens, dtype=np.float32)


def load_embedder(variant: str, device: str = "cpu") -> TorchHubEmbedder:
    embedder = TorchHubEmbedder(variant, device=device)
    embedder._load()  # fail fast on missing weights
    return embedder
