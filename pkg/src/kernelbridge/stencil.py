"""Spatial stencils: symmetric non-negative weights over a square offset window."""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Stencil", "make_box_stencil", "make_gaussian_stencil"]


@dataclass(frozen=True)
class Stencil:
    """Weights h(di, dj) for integer offsets |di|, |dj| <= radius.

    ``weights`` has shape (2*radius+1, 2*radius+1) with the (0, 0) offset at
    the center. Weights must be symmetric under offset negation. The center
    weight exists (it is used as the self-term of normalized filters) but is
    excluded from all difference sums.
    """

    radius: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        side = 2 * self.radius + 1
        if w.shape != (side, side):
            raise ValueError(f"weights must have shape ({side}, {side})")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if not np.array_equal(w, w[::-1, ::-1]):
            raise ValueError("weights must satisfy h(di, dj) = h(-di, -dj)")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def weight(self, di: int, dj: int) -> float:
        """Weight at offset (di, dj); zero outside the window."""
        if abs(di) > self.radius or abs(dj) > self.radius:
            return 0.0
        return float(self.weights[di + self.radius, dj + self.radius])

    def offsets(self):
        """Yield (di, dj, h) for all nonzero off-center weights."""
        r = self.radius
        for di in range(-r, r + 1):
            for dj in range(-r, r + 1):
                if di == 0 and dj == 0:
                    continue
                h = self.weights[di + r, dj + r]
                if h > 0.0:
                    yield di, dj, float(h)

    def scaled(self, factor: float) -> "Stencil":
        """Stencil with all weights multiplied by ``factor``."""
        return Stencil(self.radius, self.weights * float(factor))


def make_box_stencil(radius: int) -> Stencil:
    """Unit weights in a (2r+1) x (2r+1) window (11x11 for radius 5)."""
    side = 2 * radius + 1
    return Stencil(radius, np.ones((side, side)))


def make_gaussian_stencil(radius: int, spatial_sigma: float) -> Stencil:
    """h(di, dj) = exp(-(di^2 + dj^2) / (2 spatial_sigma^2)) within the window."""
    if spatial_sigma <= 0:
        raise ValueError("spatial_sigma must be positive")
    d = np.arange(-radius, radius + 1, dtype=np.float64)
    sq = d[:, None] ** 2 + d[None, :] ** 2
    return Stencil(radius, np.exp(-sq / (2.0 * spatial_sigma**2)))
