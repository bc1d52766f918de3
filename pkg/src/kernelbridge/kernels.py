"""Scalar affinity kernels and the two-way kernel/loss translation.

The first-order bridge maps a loss to the kernel k(t) = c * rho'(t)/t and,
inversely, a kernel to the loss rho(t) = integral of tau k(tau) on [0, t].
The second-order bridge uses rho''(t) = k(t) instead, with the double
integral normalized so that rho(0) = rho'(0) = 0. Closed forms are used for
the four named kernel families; anything else goes through adaptive Simpson
quadrature memoized on a grid with cubic Hermite interpolation.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .losses import (
    ClippedQuadratic,
    Huber,
    Lorentzian,
    ScalarLoss,
    Welsch,
)
from .quadrature import QuadratureError, adaptive_simpson

__all__ = [
    "ScalarKernel",
    "Boxcar",
    "GaussianKernel",
    "CauchyKernel",
    "ExponentialKernel",
    "FromLossFirstOrder",
    "FromLossSecondOrder",
    "TranslationScale",
    "kernel_from_loss_first_order",
    "kernel_from_loss_second_order",
    "loss_from_kernel_first_order",
    "loss_from_kernel_second_order",
    "roundtrip_check",
    "parse_kernel",
    "NumericLoss",
]


class ScalarKernel:
    """Radial affinity function k(t) = k(-t) with smoothing parameter gamma."""

    name = "kernel"
    gamma = None

    def __call__(self, t):
        raise NotImplementedError

    def deriv(self, t):
        """dk/dt; central finite difference unless overridden."""
        t = np.asarray(t, dtype=np.float64)
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        return (self(t + h) - self(t - h)) / (2.0 * h)

    def kinks(self):
        """Non-smooth points on t >= 0, used to split integration grids."""
        return ()

    def params(self):
        return {"gamma": self.gamma}

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class _GammaKernel(ScalarKernel):
    def __init__(self, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)


class Boxcar(_GammaKernel):
    """Equal weight for |t| <= gamma (closed boundary), zero outside."""

    name = "boxcar"

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.where(t <= self.gamma, 1.0, 0.0)

    def deriv(self, t):
        return np.zeros_like(np.asarray(t, dtype=np.float64))

    def kinks(self):
        return (self.gamma,)


class GaussianKernel(_GammaKernel):
    """k(t) = exp(-t^2 / 2 gamma^2)."""

    name = "gaussian"

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-t * t / (2.0 * self.gamma**2))

    def deriv(self, t):
        t = np.asarray(t, dtype=np.float64)
        return -t / self.gamma**2 * self(t)


class CauchyKernel(_GammaKernel):
    """k(t) = 1 / (1 + t^2 / 2 gamma^2)."""

    name = "cauchy"

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 1.0 / (1.0 + t * t / (2.0 * self.gamma**2))

    def deriv(self, t):
        t = np.asarray(t, dtype=np.float64)
        k = self(t)
        return -t / self.gamma**2 * k * k


class ExponentialKernel(_GammaKernel):
    """k(t) = exp(-|t| / (sqrt(2) gamma))."""

    name = "exponential"

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.exp(-t / (math.sqrt(2.0) * self.gamma))

    def deriv(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = math.sqrt(2.0) * self.gamma
        return -np.sign(t) / s * self(t)


@dataclass(frozen=True)
class TranslationScale:
    """Scale factors of the bridge: the kernel carries 2 sigma^2 / alpha * h."""

    sigma: float
    alpha: float
    h_weight: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0 or self.alpha <= 0:
            raise ValueError("sigma and alpha must be positive")
        if self.h_weight < 0:
            raise ValueError("h_weight must be non-negative")

    @property
    def coeff(self) -> float:
        return 2.0 * self.sigma**2 / self.alpha * self.h_weight


class FromLossFirstOrder(ScalarKernel):
    """k(t) = coeff * rho'(t)/t for a source loss."""

    name = "from-loss-first-order"

    def __init__(self, loss: ScalarLoss, coeff: float = 1.0):
        self.loss = loss
        self.coeff = float(coeff)
        self.gamma = getattr(loss, "gamma", None)

    def __call__(self, t):
        return self.coeff * self.loss.influence(t)

    def kinks(self):
        return self.loss.kinks()

    def params(self):
        return {"loss": self.loss, "coeff": self.coeff}


class FromLossSecondOrder(ScalarKernel):
    """k(t) = coeff * rho''(t); may be negative for non-convex losses."""

    name = "from-loss-second-order"

    def __init__(self, loss: ScalarLoss, coeff: float = 1.0):
        self.loss = loss
        self.coeff = float(coeff)
        self.gamma = getattr(loss, "gamma", None)
        probe = np.linspace(0.0, 32.0 * (self.gamma or 1.0), 257)
        self.non_psd = bool(np.any(np.asarray(loss.rho_second(probe)) < 0.0))
        if self.non_psd:
            warnings.warn(
                f"second-order kernel from {loss!r} takes negative values",
                stacklevel=2,
            )

    def __call__(self, t):
        return self.coeff * self.loss.rho_second(t)

    def kinks(self):
        return self.loss.kinks()

    def params(self):
        return {"loss": self.loss, "coeff": self.coeff}


def kernel_from_loss_first_order(loss: ScalarLoss, scale: TranslationScale) -> ScalarKernel:
    """First-order bridge: kernel is the scaled influence function of the loss."""
    return FromLossFirstOrder(loss, scale.coeff)


def kernel_from_loss_second_order(loss: ScalarLoss, scale: TranslationScale) -> ScalarKernel:
    """Second-order bridge: kernel is the scaled curvature of the loss."""
    return FromLossSecondOrder(loss, scale.coeff)


# Losses induced by double integration of the named kernels. Defined for
# t >= 0 and extended evenly; rho' is odd.


class GaussianSecondOrderLoss(ScalarLoss):
    """rho'' equals the Gaussian kernel; rho' is an erf ramp."""

    name = "gaussian-second-order"

    def __init__(self, gamma):
        self.gamma = float(gamma)

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        g = self.gamma
        a = g * math.sqrt(math.pi / 2.0)
        return t * a * erf(t / (math.sqrt(2.0) * g)) + g * g * (
            np.exp(-t * t / (2.0 * g * g)) - 1.0
        )

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        a = self.gamma * math.sqrt(math.pi / 2.0)
        return a * erf(t / (math.sqrt(2.0) * self.gamma))

    def rho_second(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-t * t / (2.0 * self.gamma**2))

    def params(self):
        return {"gamma": self.gamma}


class CauchySecondOrderLoss(ScalarLoss):
    """rho'' equals the Cauchy kernel; rho' is an arctangent ramp."""

    name = "cauchy-second-order"

    def __init__(self, gamma):
        self.gamma = float(gamma)
        self.a = math.sqrt(2.0) * self.gamma

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        a = self.a
        return a * (t * np.arctan(t / a) - 0.5 * a * np.log(1.0 + (t / a) ** 2))

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.a * np.arctan(t / self.a)

    def rho_second(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 1.0 / (1.0 + (t / self.a) ** 2)

    def params(self):
        return {"gamma": self.gamma}


class ExponentialSecondOrderLoss(ScalarLoss):
    """rho'' equals the exponential kernel; Huber-like, linear for large |t|."""

    name = "exponential-second-order"

    def __init__(self, gamma):
        self.gamma = float(gamma)
        self.s = math.sqrt(2.0) * self.gamma

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        s = self.s
        return s * t - s * s * (1.0 - np.exp(-t / s))

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.sign(t) * self.s * (1.0 - np.exp(-np.abs(t) / self.s))

    def rho_second(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.exp(-t / self.s)

    def params(self):
        return {"gamma": self.gamma}


class ExponentialFirstOrderLoss(ScalarLoss):
    """Integral of tau k(tau) for the exponential kernel.

    rho(t) = s^2 - (s|t| + s^2) exp(-|t|/s) with s = sqrt(2) gamma; quadratic
    near zero, saturating for large |t|.
    """

    name = "exponential-first-order"

    def __init__(self, gamma):
        self.gamma = float(gamma)
        self.s = math.sqrt(2.0) * self.gamma

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        s = self.s
        return s * s - (s * t + s * s) * np.exp(-t / s)

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return t * np.exp(-np.abs(t) / self.s)

    def rho_second(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return (1.0 - t / self.s) * np.exp(-t / self.s)

    def influence(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.exp(-t / self.s)

    def is_redescending(self):
        return True

    def params(self):
        return {"gamma": self.gamma}


class NumericLoss(ScalarLoss):
    """Loss built from a kernel by quadrature, memoized on a uniform grid.

    First order: rho(t) = int_0^t tau k(tau) dtau, rho'(t) = t k(t).
    Second order: rho''(t) = k(t), rho'(t) = int_0^t k, rho the double
    integral; rho(0) = rho'(0) = 0 in both cases.

    Values off the grid use cubic Hermite interpolation with the analytic
    slope, keeping interpolation error far below the quadrature tolerance.
    Beyond t_max the loss continues linearly.
    """

    name = "numeric-from-kernel"

    def __init__(self, kernel: ScalarKernel, order: int = 1, t_max=None, grid_n: int = 4096,
                 tol: float = 1e-10):
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        self.kernel = kernel
        self.order = order
        self.gamma = kernel.gamma
        if t_max is None:
            t_max = 32.0 * (self.gamma or 1.0)
        self.t_max = float(t_max)
        # Kinks of the kernel become exact grid nodes, so both the adaptive
        # quadrature and the Hermite interpolation only ever see a smooth
        # integrand inside any one interval.
        cuts = [0.0]
        cuts += sorted({float(c) for c in kernel.kinks() if 0.0 < c < self.t_max})
        cuts.append(self.t_max)
        pieces = [np.linspace(0.0, 0.0, 1)]
        for a, b in zip(cuts[:-1], cuts[1:]):
            m = max(8, int(round(grid_n * (b - a) / self.t_max)))
            pieces.append(np.linspace(a, b, m + 1)[1:])
        self.grid = np.concatenate(pieces)
        self.widths = np.diff(self.grid)
        per_interval_tol = tol / len(self.widths)
        try:
            if order == 1:
                f = lambda tau: float(tau * kernel(tau))
                pieces = [
                    adaptive_simpson(f, a, b, tol=per_interval_tol)
                    for a, b in zip(self.grid[:-1], self.grid[1:])
                ]
                self.rho_grid = np.concatenate([[0.0], np.cumsum(pieces)])
                self.rho_prime_grid = self.grid * np.asarray(kernel(self.grid))
            else:
                f = lambda tau: float(kernel(tau))
                pieces = [
                    adaptive_simpson(f, a, b, tol=per_interval_tol)
                    for a, b in zip(self.grid[:-1], self.grid[1:])
                ]
                self.rho_prime_grid = np.concatenate([[0.0], np.cumsum(pieces)])
                # Simpson over each interval; the midpoint value of rho' is
                # integrated rather than interpolated, because a kernel kink
                # at a node makes the node slope one-sided and Hermite would
                # pick the wrong side.
                mid = 0.5 * (self.grid[:-1] + self.grid[1:])
                rp_mid = self.rho_prime_grid[:-1] + np.array(
                    [
                        adaptive_simpson(f, a, m, tol=per_interval_tol)
                        for a, m in zip(self.grid[:-1], mid)
                    ]
                )
                seg = self.widths / 6.0 * (
                    self.rho_prime_grid[:-1] + 4.0 * rp_mid + self.rho_prime_grid[1:]
                )
                self.rho_grid = np.concatenate([[0.0], np.cumsum(seg)])
        except QuadratureError as exc:
            raise QuadratureError(f"kernel {kernel!r} is not integrable: {exc}") from exc
        if not np.all(np.isfinite(self.rho_grid)):
            raise QuadratureError(f"kernel {kernel!r} produced non-finite integrals")

    def _hermite(self, t, values, slopes):
        """Cubic Hermite interpolation of a grid function at |t| (t already >= 0)."""
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, len(self.grid) - 2)
        dt = self.widths[idx]
        t0 = self.grid[idx]
        s = (t - t0) / dt
        v0, v1 = values[idx], values[idx + 1]
        d0, d1 = slopes[idx] * dt, slopes[idx + 1] * dt
        h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
        h10 = s * (1.0 - s) ** 2
        h01 = s * s * (3.0 - 2.0 * s)
        h11 = s * s * (s - 1.0)
        return h00 * v0 + h10 * d0 + h01 * v1 + h11 * d1

    def _slopes_for_rho(self):
        if self.order == 1:
            return self.rho_prime_grid
        return self.rho_prime_grid

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        inside = np.minimum(t, self.t_max)
        val = self._hermite(inside, self.rho_grid, self.rho_prime_grid)
        tail = t > self.t_max
        if np.any(tail):
            val = val + tail * (t - inside) * self.rho_prime_grid[-1]
        return val if val.ndim else float(val)

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        a = np.minimum(np.abs(t), self.t_max)
        if self.order == 1:
            val = a * np.asarray(self.kernel(a))
        else:
            slopes = np.asarray(self.kernel(self.grid))
            val = self._hermite(a, self.rho_prime_grid, slopes)
        out = np.sign(t) * val
        return out if out.ndim else float(out)

    def rho_second(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        if self.order == 2:
            out = np.asarray(self.kernel(t), dtype=np.float64)
        else:
            # d/dt (t k(t)) = k + t k'.
            out = np.asarray(self.kernel(t)) + t * np.asarray(self.kernel.deriv(t))
        return out if out.ndim else float(out)

    def influence(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.order == 1:
            out = np.asarray(self.kernel(t), dtype=np.float64)
            return out if out.ndim else float(out)
        return super().influence(t)

    def params(self):
        return {"kernel": self.kernel, "order": self.order}


def loss_from_kernel_first_order(k: ScalarKernel) -> ScalarLoss:
    """Integrate tau k(tau) into a loss; closed forms for the named families."""
    if isinstance(k, Boxcar):
        return ClippedQuadratic(k.gamma)
    if isinstance(k, GaussianKernel):
        return Welsch(k.gamma)
    if isinstance(k, CauchyKernel):
        return Lorentzian(k.gamma)
    if isinstance(k, ExponentialKernel):
        return ExponentialFirstOrderLoss(k.gamma)
    return NumericLoss(k, order=1)


def loss_from_kernel_second_order(k: ScalarKernel) -> ScalarLoss:
    """Double-integrate the kernel into a loss; closed forms where known."""
    if isinstance(k, Boxcar):
        # The indicator kernel double-integrates to exactly the Huber loss.
        return Huber(k.gamma)
    if isinstance(k, GaussianKernel):
        return GaussianSecondOrderLoss(k.gamma)
    if isinstance(k, CauchyKernel):
        return CauchySecondOrderLoss(k.gamma)
    if isinstance(k, ExponentialKernel):
        return ExponentialSecondOrderLoss(k.gamma)
    return NumericLoss(k, order=2)


def roundtrip_check(loss: ScalarLoss, scale: TranslationScale, t_grid=None) -> float:
    """Max deviation of loss -> kernel -> loss (numeric route) from the original.

    The returned loss is rescaled by 1/coeff before comparison.
    """
    gamma = getattr(loss, "gamma", None) or 1.0
    if t_grid is None:
        t_grid = np.linspace(0.0, 20.0 * gamma, 201)
    kernel = kernel_from_loss_first_order(loss, scale)
    recovered = NumericLoss(kernel, order=1, t_max=float(np.max(t_grid)) * 1.25)
    back = np.asarray(recovered.rho(t_grid)) / scale.coeff
    ref = np.asarray(loss.rho(t_grid))
    return float(np.max(np.abs(back - ref)))


_KERNELS = {
    "boxcar": Boxcar,
    "gaussian": GaussianKernel,
    "cauchy": CauchyKernel,
    "exponential": ExponentialKernel,
}


def parse_kernel(text: str) -> ScalarKernel:
    """Build a kernel from a CLI string like ``gaussian:gamma=30``."""
    head, _, tail = text.strip().partition(":")
    family = head.lower()
    if family not in _KERNELS:
        raise ValueError(f"unknown kernel family {family!r} (choose from {sorted(_KERNELS)})")
    kwargs = {}
    if tail:
        for item in tail.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"malformed kernel parameter {item!r} (expected key=value)")
            kwargs[key.strip()] = float(val)
    if "gamma" not in kwargs:
        raise ValueError(f"kernel family {family!r} requires gamma")
    return _KERNELS[family](**kwargs)
