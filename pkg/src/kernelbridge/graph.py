"""Dense affinity/Laplacian machinery for small instances.

This module is a verification oracle, not the production filter path: it
materializes the full affinity matrix K, the row-stochastic filter
W = D^-1 K, both Laplacians, and the scalar alpha relating them. Instance
size is guarded at 4096 pixels.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import neighbor_index_map, patch_distance_map
from .kernels import ScalarKernel
from .losses import ScalarLoss
from .stencil import Stencil

__all__ = [
    "AffinityMatrix",
    "LaplacianBundle",
    "build_affinity",
    "normalized_filter",
    "alpha_exact",
    "alpha_mean_degree",
    "pseudo_quadratic_energy",
    "assemble_first_order_matrix",
    "HessianReport",
    "hessian_isotropic_check",
]

MAX_DENSE_PIXELS = 4096


@dataclass(frozen=True)
class AffinityMatrix:
    """Dense symmetric affinity K with unit diagonal and its degree vector."""

    K: np.ndarray = field(repr=False)
    gamma: float
    patch_radius: int

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.K.sum(axis=1)


@dataclass(frozen=True)
class LaplacianBundle:
    """Row-stochastic filter W and the two Laplacians derived from K."""

    W: np.ndarray = field(repr=False)
    L_norm: np.ndarray = field(repr=False)
    L_unnorm: np.ndarray = field(repr=False)
    alpha: float


def build_affinity(
    signal: np.ndarray, k: ScalarKernel, stencil: Stencil, patch_radius: int = 0
) -> AffinityMatrix:
    """K_ij = k(patch distance) for j in the stencil window of i, unit diagonal.

    Off-window entries are zero. Distances use symmetric-padded patches, so
    K is symmetric by construction.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim == 1:
        signal = signal[None, :]
    n = signal.size
    if n > MAX_DENSE_PIXELS:
        raise ValueError(f"instance too large for dense affinity ({n} > {MAX_DENSE_PIXELS})")
    K = np.zeros((n, n))
    rows = np.arange(n)
    for di, dj, _h in stencil.offsets():
        cols = neighbor_index_map(signal.shape, di, dj)
        dist = patch_distance_map(signal, di, dj, patch_radius).ravel()
        vals = np.asarray(k(dist))
        # Reflected neighbors can coincide with the center; keep the diagonal
        # at exactly 1 regardless.
        mask = cols != rows
        K[rows[mask], cols[mask]] = vals[mask]
    K = np.maximum(K, K.T)
    np.fill_diagonal(K, 1.0)
    return AffinityMatrix(K=K, gamma=k.gamma or 0.0, patch_radius=patch_radius)


def normalized_filter(a: AffinityMatrix, alpha: float | None = None) -> LaplacianBundle:
    """W = D^-1 K with L_norm = I - W and L_unnorm = D - K."""
    d = a.degrees
    assert np.all(d > 0.0), "unit diagonal guarantees positive degrees"
    W = a.K / d[:, None]
    n = a.n
    L_norm = np.eye(n) - W
    L_unnorm = np.diag(d) - a.K
    if alpha is None:
        alpha = alpha_mean_degree(a)
    return LaplacianBundle(W=W, L_norm=L_norm, L_unnorm=L_unnorm, alpha=alpha)


def alpha_exact(a: AffinityMatrix) -> float:
    """Frobenius-optimal alpha with L_norm ~ alpha (D - K), by trace ratio."""
    K = a.K
    d = a.degrees
    D = np.diag(d)
    num = np.trace(K @ (K / d[:, None])) - 2.0 * np.trace(K) + np.sum(d)
    den = np.trace(K @ K) - 2.0 * np.sum(np.diag(K) * d) + np.sum(d**2)
    if den == 0.0:
        raise ValueError("alpha undefined: diagonal affinity")
    del D
    return float(num / den)


def alpha_mean_degree(a: AffinityMatrix) -> float:
    """Reciprocal mean degree, n / sum(d_i)."""
    d = a.degrees
    return float(a.n / np.sum(d))


def pseudo_quadratic_energy(x: np.ndarray, bundle: LaplacianBundle, sigma: float) -> float:
    """(1 / 2 sigma^2) x^T L_norm x with the filter weights frozen."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != bundle.L_norm.shape[0]:
        raise ValueError("dimension mismatch")
    return float(x @ (bundle.L_norm @ x)) / (2.0 * sigma**2)


def assemble_first_order_matrix(
    signal: np.ndarray, loss: ScalarLoss, stencil: Stencil
) -> np.ndarray:
    """Dense matrix M with M x = regularizer gradient at ``signal`` (weights frozen).

    M = 1/2 sum over ordered pixel pairs of h c_ij R_ij^T R_ij, where
    c_ij = rho'(|d_ij|)/d_ij is evaluated at the signal and held fixed.
    Pairs follow the same symmetric-reflection neighbor rule as the filters.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim == 1:
        signal = signal[None, :]
    n = signal.size
    if n > MAX_DENSE_PIXELS:
        raise ValueError(f"instance too large ({n} > {MAX_DENSE_PIXELS})")
    M = np.zeros((n, n))
    flat = signal.ravel()
    rows = np.arange(n)
    for di, dj, h in stencil.offsets():
        cols = neighbor_index_map(signal.shape, di, dj)
        c = np.asarray(loss.influence(np.abs(flat - flat[cols])))
        w = 0.5 * h * c
        for i, j, wij in zip(rows, cols, w):
            if i == j:
                continue
            M[i, i] += wij
            M[j, j] += wij
            M[i, j] -= wij
            M[j, i] -= wij
    return M


@dataclass(frozen=True)
class HessianReport:
    """Deviations between finite-difference and analytic Hessians of rho(||Ax||)."""

    fd_hessian: np.ndarray = field(repr=False)
    analytic_hessian: np.ndarray = field(repr=False)
    contraction: np.ndarray = field(repr=False)
    max_dev_fd_analytic: float
    max_dev_contraction: float


def hessian_isotropic_check(
    A: np.ndarray, loss: ScalarLoss, x: np.ndarray, fd_step: float = 1e-5
) -> HessianReport:
    """Compare three routes to the Hessian of phi(x) = rho(||A x||).

    (i) central finite differences of the gradient, (ii) the analytic
    rho'/t A^T (I - u u^T) A + rho'' A^T u u^T A with u = Ax/||Ax||, and
    (iii) the simplified action H x = rho''(||Ax||) A^T A x.
    """
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    ax = A @ x
    t = float(np.linalg.norm(ax))
    if t == 0.0:
        raise ValueError("||A x|| must be positive")
    u = ax / t

    def grad(v):
        av = A @ v
        tv = np.linalg.norm(av)
        return float(loss.influence(tv)) * (A.T @ av)

    n = x.size
    fd = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = fd_step
        fd[:, i] = (grad(x + e) - grad(x - e)) / (2.0 * fd_step)
    fd = 0.5 * (fd + fd.T)

    infl = float(loss.influence(t))
    curv = float(loss.rho_second(t))
    Au = A.T @ u
    analytic = infl * (A.T @ A - np.outer(Au, Au)) + curv * np.outer(Au, Au)
    contraction = curv * (A.T @ (A @ x))

    scale = max(1.0, float(np.max(np.abs(analytic))))
    dev_fd = float(np.max(np.abs(fd - analytic))) / scale
    hx = analytic @ x
    dev_con = float(np.max(np.abs(hx - contraction))) / max(1.0, float(np.max(np.abs(hx))))
    return HessianReport(
        fd_hessian=fd,
        analytic_hessian=analytic,
        contraction=contraction,
        max_dev_fd_analytic=dev_fd,
        max_dev_contraction=dev_con,
    )
