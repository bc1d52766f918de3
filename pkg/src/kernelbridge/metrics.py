"""Image quality and filter distance metrics."""

import math

import numpy as np

__all__ = ["mse", "psnr", "l1_filter_distance"]


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the images are identical.

    The peak defaults to 255 regardless of dtype, matching the 8-bit
    convention used throughout.
    """
    if peak <= 0:
        raise ValueError("peak must be positive")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / err)


def l1_filter_distance(w1, w2) -> float:
    """Sum of absolute tap differences between two impulse responses."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ValueError(f"length mismatch: {w1.shape} vs {w2.shape}")
    return float(np.sum(np.abs(w1 - w2)))
