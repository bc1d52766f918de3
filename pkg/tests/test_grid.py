import numpy as np
import pytest

from kernelbridge.grid import (
    neighbor_index_map,
    patch_distance_map,
    reflect_indices,
    shift_reflect,
)


def test_reflect_indices_half_sample():
    idx = reflect_indices(np.array([-2, -1, 0, 3, 4, 5]), 4)
    np.testing.assert_array_equal(idx, [1, 0, 0, 3, 3, 2])


def test_reflect_indices_too_large():
    with pytest.raises(ValueError):
        reflect_indices(np.array([10]), 4)


def test_shift_reflect_matches_np_pad():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((6, 7))
    for di, dj in [(1, 0), (-1, 2), (2, -2), (0, -1)]:
        r = max(abs(di), abs(dj))
        padded = np.pad(x, r, mode="symmetric")
        expected = padded[r + di : r + di + 6, r + dj : r + dj + 7]
        np.testing.assert_array_equal(shift_reflect(x, di, dj), expected)


def test_neighbor_index_map_consistent_with_shift():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((5, 4))
    for di, dj in [(1, 1), (-2, 0), (0, 3)]:
        idx = neighbor_index_map(x.shape, di, dj)
        np.testing.assert_array_equal(x.ravel()[idx].reshape(x.shape), shift_reflect(x, di, dj))


def test_patch_distance_zero_radius():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 5))
    d = patch_distance_map(x, 1, -1, 0)
    np.testing.assert_allclose(d, np.abs(x - shift_reflect(x, 1, -1)))


def test_patch_distance_brute_force():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((6, 6))
    di, dj, p = 1, 1, 1
    d = patch_distance_map(x, di, dj, p)
    padded = np.pad(x, p + 1, mode="symmetric")
    for i in range(6):
        for j in range(6):
            a = padded[1 + i : 1 + i + 2 * p + 1, 1 + j : 1 + j + 2 * p + 1]
            b = padded[1 + i + di : 1 + i + di + 2 * p + 1, 1 + j + dj : 1 + j + dj + 2 * p + 1]
            assert d[i, j] == pytest.approx(np.linalg.norm(a - b), abs=1e-12)


def test_patch_distance_symmetric_in_sign():
    # dist(i -> i+o) at pixel i equals dist(j -> j-o) at pixel j = i+o for
    # interior pixels.
    rng = np.random.default_rng(4)
    x = rng.standard_normal((8, 8))
    d_pos = patch_distance_map(x, 0, 1, 1)
    d_neg = patch_distance_map(x, 0, -1, 1)
    np.testing.assert_allclose(d_pos[:, :-1], d_neg[:, 1:], atol=1e-12)
