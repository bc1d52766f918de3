"""Adaptive Simpson quadrature."""

import math

__all__ = ["QuadratureError", "adaptive_simpson"]


class QuadratureError(RuntimeError):
    """Raised when the integrand produces non-finite values."""


def _recurse(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if not math.isfinite(err):
        raise QuadratureError(f"non-finite integrand on [{a}, {b}]")
    if abs(err) <= 15.0 * tol or depth <= 0:
        # At the depth limit (reached only around jump discontinuities) the
        # interval has shrunk by 2^max_depth, so the remaining error is below
        # rounding for any bounded integrand.
        return left + right + err / 15.0
    half = 0.5 * tol
    return _recurse(f, a, fa, m, fm, lm, flm, left, half, depth - 1) + _recurse(
        f, m, fm, b, fb, rm, frm, right, half, depth - 1
    )


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=40):
    """Integrate a scalar function on [a, b] to the given absolute tolerance."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    if not (math.isfinite(fa) and math.isfinite(fb) and math.isfinite(fm)):
        raise QuadratureError(f"non-finite integrand on [{a}, {b}]")
    return _recurse(f, a, fa, b, fb, m, fm, whole, tol, max_depth)
