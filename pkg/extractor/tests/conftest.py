import numpy as np
import pytest

from pointprop_extractor.backends import PATCH_SIZE, TOKEN_DIM


class StubEmbedder:
    """Deterministic ViT stand-in for tests.

    Token = fixed projection of the patch's mean color, plus a grid-like
    positional pattern whose amplitude mimics raw (1.0) or denoised (0.05)
    checkpoints.  No weights, fully reproducible.
    """

    def __init__(self, positional_scale: float = 1.0):
        self.positional_scale = positional_scale
        self.checkpoint = f"stub:deterministic-v1(pos={positional_scale})"
        rng = np.random.default_rng(2024)
        self._color_proj = rng.normal(size=(3, TOKEN_DIM)).astype(np.float32)
        self._pos_basis = rng.normal(size=(4, TOKEN_DIM)).astype(np.float32)

    def embed(self, pixels: np.ndarray) -> np.ndarray:
        h, w, _ = pixels.shape
        hp, wp = h // PATCH_SIZE, w // PATCH_SIZE
        patches = pixels.reshape(hp, PATCH_SIZE, wp, PATCH_SIZE, 3)
        mean_color = patches.mean(axis=(1, 3))  # (hp, wp, 3)
        content = mean_color @ self._color_proj
        ii, jj = np.meshgrid(np.arange(hp), np.arange(wp), indexing="ij")
        phases = np.stack([
            np.sin(ii * 2.3), np.cos(jj * 1.7),
            ((ii + jj) % 2).astype(np.float64), np.sin(ii * jj * 0.13),
        ], axis=-1).astype(np.float32)  # (hp, wp, 4)
        positional = phases @ self._pos_basis
        return (content + self.positional_scale * positional).astype(np.float32)


@pytest.fixture()
def raw_stub():
    return StubEmbedder(positional_scale=1.0)


@pytest.fixture()
def denoised_stub():
    return StubEmbedder(positional_scale=0.05)
