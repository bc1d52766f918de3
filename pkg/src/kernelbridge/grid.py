"""Neighbor indexing on 2D grids with symmetric (half-sample) reflection."""

import numpy as np

__all__ = ["reflect_indices", "shift_reflect", "neighbor_index_map", "patch_distance_map"]


def reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Map integer indices onto [0, n) by half-sample symmetric reflection.

    -1 maps to 0, n maps to n-1. Valid for offsets up to n.
    """
    idx = np.where(idx < 0, -1 - idx, idx)
    idx = np.where(idx >= n, 2 * n - 1 - idx, idx)
    if np.any(idx < 0) or np.any(idx >= n):
        raise ValueError("offset too large for image size")
    return idx


def shift_reflect(x: np.ndarray, di: int, dj: int) -> np.ndarray:
    """x evaluated at (i + di, j + dj) with reflected out-of-range indices."""
    h, w = x.shape
    rows = reflect_indices(np.arange(h) + di, h)
    cols = reflect_indices(np.arange(w) + dj, w)
    return x[np.ix_(rows, cols)]


def neighbor_index_map(shape, di: int, dj: int) -> np.ndarray:
    """Flat index of the reflected neighbor (i + di, j + dj) for every pixel."""
    h, w = shape
    rows = reflect_indices(np.arange(h) + di, h)
    cols = reflect_indices(np.arange(w) + dj, w)
    return (rows[:, None] * w + cols[None, :]).ravel()


def patch_distance_map(x: np.ndarray, di: int, dj: int, patch_radius: int) -> np.ndarray:
    """Euclidean distance between the patch at each pixel and at its neighbor.

    Patches are (2*patch_radius+1)^2 windows read from a symmetric-padded
    copy of the image. patch_radius 0 reduces to |x_i - x_j|.
    """
    if patch_radius == 0:
        return np.abs(x - shift_reflect(x, di, dj))
    p = patch_radius
    r = max(abs(di), abs(dj))
    padded = np.pad(x, r + p, mode="symmetric")
    h, w = x.shape
    base = padded[r : r + h + 2 * p, r : r + w + 2 * p]
    moved = padded[r + di : r + di + h + 2 * p, r + dj : r + dj + w + 2 * p]
    sq = (base - moved) ** 2
    # Sliding-window sum over the (2p+1)^2 patch via 2D cumulative sums.
    c = np.cumsum(np.cumsum(sq, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    side = 2 * p + 1
    total = (
        c[side:, side:]
        - c[:-side, side:]
        - c[side:, :-side]
        + c[:-side, :-side]
    )
    return np.sqrt(np.maximum(total, 0.0))
