"""Scalar robust loss families with analytic first and second derivatives.

Every loss is an even, non-negative function with rho(0) = 0, stored in
"natural" form: scale prefactors coming from the kernel/loss translation live
in :mod:`kernelbridge.kernels`, not here. All evaluation methods accept
scalars or numpy arrays and are vectorized.

Conventions at non-smooth points:

* ``rho_second`` at a kink (Huber t = +/-gamma, TV t = 0) returns the right
  limit in |t|; kink locations are reported by :meth:`ScalarLoss.kinks`.
* TV's influence rho'(t)/t = 1/|t| is clamped below at ``eps_tv`` (default
  1e-4 intensity units), so influence never exceeds 1/eps_tv.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScalarLoss",
    "Quadratic",
    "TV",
    "Huber",
    "Welsch",
    "Lorentzian",
    "ClippedQuadratic",
    "ExponentialInduced",
    "Barron",
    "ScaledLoss",
    "RescaledLoss",
    "parse_loss",
]

DEFAULT_EPS_TV = 1e-4


class ScalarLoss:
    """Base class. Subclasses implement rho, rho_prime, rho_second."""

    name = "loss"

    def rho(self, t):
        raise NotImplementedError

    def rho_prime(self, t):
        raise NotImplementedError

    def rho_second(self, t):
        raise NotImplementedError

    def influence(self, t):
        """rho'(t)/t, with the removable singularity at 0 filled by rho''(0+)."""
        t = np.asarray(t, dtype=np.float64)
        small = np.abs(t) < 1e-12
        safe = np.where(small, 1.0, t)
        out = np.where(small, self.curvature_at_zero(), self.rho_prime(safe) / safe)
        return out if out.ndim else float(out)

    def curvature_at_zero(self):
        """lim_{t->0} rho'(t)/t for C^2-at-zero families."""
        return float(self.rho_second(0.0))

    def kinks(self):
        """Non-smooth points on t >= 0 where rho_second uses a right limit."""
        return ()

    def is_redescending(self):
        """True iff rho'' -> 0 and rho'(t)/t -> 0 as t -> inf (monotone-rho'
        families like Huber and TV are excluded)."""
        return False

    def params(self):
        return {}

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Quadratic(ScalarLoss):
    """rho(t) = t^2 / 2."""

    name = "quadratic"

    def rho(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 0.5 * t * t

    def rho_prime(self, t):
        return np.asarray(t, dtype=np.float64) + 0.0

    def rho_second(self, t):
        return np.ones_like(np.asarray(t, dtype=np.float64))

    def influence(self, t):
        return np.ones_like(np.asarray(t, dtype=np.float64))


class TV(ScalarLoss):
    """rho(t) = |t| (total variation). Influence is clamped near zero."""

    name = "tv"

    def __init__(self, eps_tv=DEFAULT_EPS_TV):
        if eps_tv <= 0:
            raise ValueError("eps_tv must be positive")
        self.eps_tv = float(eps_tv)

    def rho(self, t):
        return np.abs(np.asarray(t, dtype=np.float64))

    def rho_prime(self, t):
        # Subgradient convention: sign(t), 0 at the kink.
        return np.sign(np.asarray(t, dtype=np.float64))

    def rho_second(self, t):
        return np.zeros_like(np.asarray(t, dtype=np.float64))

    def influence(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 1.0 / np.maximum(np.abs(t), self.eps_tv)

    def kinks(self):
        return (0.0,)

    def params(self):
        return {"eps_tv": self.eps_tv}


class Huber(ScalarLoss):
    """Quadratic inside |t| <= gamma, linear with slope gamma outside."""

    name = "huber"

    def __init__(self, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        g = self.gamma
        return np.where(t <= g, 0.5 * t * t, g * t - 0.5 * g * g)

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        g = self.gamma
        return np.where(np.abs(t) <= g, t, g * np.sign(t))

    def rho_second(self, t):
        # Right limit at |t| = gamma is 0.
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.where(t < self.gamma, 1.0, 0.0)

    def influence(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        g = self.gamma
        return np.where(t <= g, 1.0, g / np.maximum(t, g))

    def curvature_at_zero(self):
        return 1.0

    def kinks(self):
        return (self.gamma,)

    def params(self):
        return {"gamma": self.gamma}


class Welsch(ScalarLoss):
    """rho(t) = gamma^2 (1 - exp(-t^2 / 2 gamma^2)); induced by the Gaussian kernel."""

    name = "welsch"

    def __init__(self, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)

    def _e(self, t):
        return np.exp(-t * t / (2.0 * self.gamma**2))

    def rho(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.gamma**2 * (1.0 - self._e(t))

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return t * self._e(t)

    def rho_second(self, t):
        t = np.asarray(t, dtype=np.float64)
        return (1.0 - t * t / self.gamma**2) * self._e(t)

    def influence(self, t):
        return self._e(np.asarray(t, dtype=np.float64))

    def is_redescending(self):
        return True

    def params(self):
        return {"gamma": self.gamma}


class Lorentzian(ScalarLoss):
    """rho(t) = gamma^2 log(1 + t^2 / 2 gamma^2); induced by the Cauchy kernel."""

    name = "lorentzian"

    def __init__(self, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)

    def _den(self, t):
        return 1.0 + t * t / (2.0 * self.gamma**2)

    def rho(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.gamma**2 * np.log(self._den(t))

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return t / self._den(t)

    def rho_second(self, t):
        t = np.asarray(t, dtype=np.float64)
        d = self._den(t)
        return (1.0 - t * t / (2.0 * self.gamma**2)) / (d * d)

    def influence(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 1.0 / self._den(t)

    def is_redescending(self):
        return True

    def params(self):
        return {"gamma": self.gamma}


class ClippedQuadratic(ScalarLoss):
    """rho(t) = t^2/2 for |t| <= gamma, gamma^2/2 beyond; induced by the boxcar."""

    name = "clipped-quadratic"

    def __init__(self, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        g = self.gamma
        return np.where(t <= g, 0.5 * t * t, 0.5 * g * g)

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(np.abs(t) <= self.gamma, t, 0.0)

    def rho_second(self, t):
        # Right limit at |t| = gamma is 0 (the boundary point t = gamma stays
        # on the quadratic branch for rho and rho', matching the closed boxcar).
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.where(t < self.gamma, 1.0, 0.0)

    def influence(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.where(t <= self.gamma, 1.0, 0.0)

    def curvature_at_zero(self):
        return 1.0

    def kinks(self):
        return (self.gamma,)

    def is_redescending(self):
        return True

    def params(self):
        return {"gamma": self.gamma}


class ExponentialInduced(ScalarLoss):
    """rho(t) = s (1 - exp(-|t|/s)) with s = sqrt(2) gamma.

    Bounded loss with an l1-like kink at the origin; its influence is
    therefore clamped near zero like TV's.
    """

    name = "exponential"

    def __init__(self, gamma, eps_tv=DEFAULT_EPS_TV):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)
        self.eps_tv = float(eps_tv)

    @property
    def scale(self):
        return math.sqrt(2.0) * self.gamma

    def rho(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        s = self.scale
        return s * (1.0 - np.exp(-t / s))

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.sign(t) * np.exp(-np.abs(t) / self.scale)

    def rho_second(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return -np.exp(-t / self.scale) / self.scale

    def influence(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return np.exp(-t / self.scale) / np.maximum(t, self.eps_tv)

    def kinks(self):
        return (0.0,)

    def is_redescending(self):
        return True

    def params(self):
        return {"gamma": self.gamma}


class Barron(ScalarLoss):
    """General robust loss with order beta and strength gamma.

    rho(t) = (z/beta) ((q/z + 1)^{beta/2} - 1) with q = (t/gamma)^2 and
    z = max(1, 2 - beta); dedicated branches at beta = 0 (Lorentzian-like)
    and beta = -inf (Welsch-like). beta = 2 is exactly t^2 / (2 gamma^2).
    """

    name = "barron"

    def __init__(self, beta, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.z = max(1.0, 2.0 - self.beta) if math.isfinite(self.beta) else math.inf

    def _q(self, t):
        return (t / self.gamma) ** 2

    def rho(self, t):
        t = np.asarray(t, dtype=np.float64)
        q = self._q(t)
        b = self.beta
        if b == 0.0:
            return np.log(0.5 * q + 1.0)
        if b == -math.inf:
            return 1.0 - np.exp(-0.5 * q)
        z = self.z
        # expm1/log1p keep full precision as beta -> 0 (the naive power
        # form loses eps/beta digits and returns nan for subnormal beta).
        # Dividing the expm1 value (which is O(b)) by b before multiplying
        # by z avoids overflow of z/b for tiny b.
        return (np.expm1((b / 2.0) * np.log1p(q / z)) / b) * z

    def rho_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        g2 = self.gamma**2
        q = self._q(t)
        b = self.beta
        if b == 0.0:
            return (t / g2) / (0.5 * q + 1.0)
        if b == -math.inf:
            return (t / g2) * np.exp(-0.5 * q)
        return (t / g2) * (q / self.z + 1.0) ** (b / 2.0 - 1.0)

    def rho_second(self, t):
        t = np.asarray(t, dtype=np.float64)
        g2 = self.gamma**2
        q = self._q(t)
        b = self.beta
        if b == 0.0:
            d = 0.5 * q + 1.0
            return (1.0 - 0.5 * q) / (g2 * d * d)
        if b == -math.inf:
            return (1.0 - q) * np.exp(-0.5 * q) / g2
        z = self.z
        base = q / z + 1.0
        return (base ** (b / 2.0 - 1.0) + (b - 2.0) * (q / z) * base ** (b / 2.0 - 2.0)) / g2

    def influence(self, t):
        t = np.asarray(t, dtype=np.float64)
        g2 = self.gamma**2
        q = self._q(t)
        b = self.beta
        if b == 0.0:
            return 1.0 / (g2 * (0.5 * q + 1.0))
        if b == -math.inf:
            return np.exp(-0.5 * q) / g2
        return (q / self.z + 1.0) ** (b / 2.0 - 1.0) / g2

    def is_redescending(self):
        return self.beta < 1.0

    def params(self):
        return {"beta": self.beta, "gamma": self.gamma}


class ScaledLoss(ScalarLoss):
    """coeff * base loss; derivatives scale along."""

    name = "scaled"

    def __init__(self, base: ScalarLoss, coeff: float):
        if coeff < 0:
            raise ValueError("coeff must be non-negative")
        self.base = base
        self.coeff = float(coeff)

    def rho(self, t):
        return self.coeff * self.base.rho(t)

    def rho_prime(self, t):
        return self.coeff * self.base.rho_prime(t)

    def rho_second(self, t):
        return self.coeff * self.base.rho_second(t)

    def influence(self, t):
        return self.coeff * self.base.influence(t)

    def curvature_at_zero(self):
        return self.coeff * self.base.curvature_at_zero()

    def kinks(self):
        return self.base.kinks()

    def is_redescending(self):
        return self.base.is_redescending()

    def params(self):
        return {"base": self.base, "coeff": self.coeff}


class RescaledLoss(ScalarLoss):
    """Same loss expressed in units where lengths are multiplied by ``s``:
    rho_new(t) = s^2 rho(t/s). Families with a quadratic core (Huber, Welsch,
    Lorentzian, clipped quadratic, quadratic itself) are exactly closed under
    this, equivalent to scaling gamma by s."""

    name = "rescaled"

    def __init__(self, base: ScalarLoss, s: float):
        if s <= 0:
            raise ValueError("s must be positive")
        self.base = base
        self.s = float(s)
        g = getattr(base, "gamma", None)
        if g is not None:
            self.gamma = self.s * g

    def rho(self, t):
        return self.s**2 * self.base.rho(np.asarray(t, dtype=np.float64) / self.s)

    def rho_prime(self, t):
        return self.s * self.base.rho_prime(np.asarray(t, dtype=np.float64) / self.s)

    def rho_second(self, t):
        return self.base.rho_second(np.asarray(t, dtype=np.float64) / self.s)

    def influence(self, t):
        return self.base.influence(np.asarray(t, dtype=np.float64) / self.s)

    def curvature_at_zero(self):
        return self.base.curvature_at_zero()

    def kinks(self):
        return tuple(self.s * k for k in self.base.kinks())

    def is_redescending(self):
        return self.base.is_redescending()

    def params(self):
        return {"base": self.base, "s": self.s}


_FAMILIES = {
    "quadratic": (Quadratic, ()),
    "tv": (TV, ()),
    "huber": (Huber, ("gamma",)),
    "welsch": (Welsch, ("gamma",)),
    "lorentzian": (Lorentzian, ("gamma",)),
    "clipped-quadratic": (ClippedQuadratic, ("gamma",)),
    "exponential": (ExponentialInduced, ("gamma",)),
    "barron": (Barron, ("beta", "gamma")),
}


def parse_loss(text: str) -> ScalarLoss:
    """Build a loss from a CLI string like ``huber:gamma=5`` or ``tv``."""
    head, _, tail = text.strip().partition(":")
    family = head.lower()
    if family not in _FAMILIES:
        raise ValueError(f"unknown loss family {family!r} (choose from {sorted(_FAMILIES)})")
    cls, required = _FAMILIES[family]
    kwargs = {}
    if tail:
        for item in tail.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"malformed loss parameter {item!r} (expected key=value)")
            key = key.strip()
            if key == "beta" and val.strip() in ("-inf", "-INF"):
                kwargs[key] = -math.inf
            else:
                kwargs[key] = float(val)
    missing = [p for p in required if p not in kwargs]
    if missing:
        raise ValueError(f"loss family {family!r} requires parameters {missing}")
    return cls(**kwargs)
