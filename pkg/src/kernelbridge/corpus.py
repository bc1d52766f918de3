"""Deterministic synthetic test images.

Four textures at any square size: piecewise-constant blocks, a linear ramp,
a sinusoidal texture, and a seeded-noise texture. All are reproducible
bit-for-bit; intensities live in [0, 255].
"""

import numpy as np

from .noise import NoiseSpec, add_gaussian_noise

__all__ = ["CORPUS_NAMES", "corpus_image", "corpus"]

CORPUS_NAMES = ("blocks", "ramp", "sine", "noise")


def corpus_image(name: str, size: int = 64, seed: int = 1) -> np.ndarray:
    """One synthetic image by name, shape (size, size), float64 in [0, 255]."""
    if size <= 0:
        raise ValueError("size must be positive")
    i = np.arange(size, dtype=np.float64)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    if name == "blocks":
        # 4x4 grid of constant blocks with interleaved levels.
        bi = (ii // max(size // 4, 1)).astype(np.int64)
        bj = (jj // max(size // 4, 1)).astype(np.int64)
        levels = np.array([30.0, 90.0, 160.0, 220.0])
        img = levels[(bi * 2 + bj * 3) % 4]
    elif name == "ramp":
        denom = max(2 * (size - 1), 1)
        img = 255.0 * (ii + jj) / denom
    elif name == "sine":
        img = 127.5 + 100.0 * np.sin(2.0 * np.pi * 3.0 * ii / size) * np.cos(
            2.0 * np.pi * 2.0 * jj / size
        )
    elif name == "noise":
        flat = np.full((size, size), 127.5)
        img = add_gaussian_noise(flat, NoiseSpec(sigma=30.0, seed=seed))
        img = np.clip(img, 0.0, 255.0)
    else:
        raise ValueError(f"unknown corpus image {name!r} (choose from {CORPUS_NAMES})")
    return img


def corpus(size: int = 64, seed: int = 1):
    """Dict of all corpus images at the given size."""
    return {name: corpus_image(name, size=size, seed=seed) for name in CORPUS_NAMES}
