"""Scikit-learn style transformers wrapping the functional filter core.

Each estimator treats the input array X as one 2D grayscale image (rows x
columns of intensities). ``fit`` only validates the input and records its
width; ``transform`` applies the filter. All hyperparameters follow the
get_params/set_params protocol, so the estimators compose with pipelines and
grid search.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .filters import FilterConfig, first_order_filter, second_order_filter, \
    division_free_bilateral, kernel_filter_normalized
from .kernels import parse_kernel
from .losses import parse_loss
from .solvers import MapProblem, SolverConfig, solve_gd, solve_heavy_ball
from .stencil import make_box_stencil

__all__ = ["OneShotDenoiser", "MapDenoiser"]


class _ImageTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y).transform(X)

    def _validate(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the transformer was fitted "
                f"with {self.n_features_in_}"
            )
        return X


class OneShotDenoiser(_ImageTransformer):
    """One-pass adaptive filter.

    Parameters
    ----------
    method : {"first-order", "second-order", "bilateral-df", "nlm"}
        Loss-driven shrinkage (first/second order) or a kernel filter.
    loss : str
        Loss family string, e.g. ``"huber:gamma=5"``; used by the
        first/second-order methods.
    kernel : str
        Kernel family string, e.g. ``"gaussian:gamma=25"``; used by the
        bilateral-df and nlm methods.
    sigma : float
        Shrinkage strength of the loss-driven methods.
    alpha : float
        Strength of the division-free bilateral step.
    radius : int
        Stencil radius (box weights).
    patch_radius : int
        Patch radius for nlm distances.
    """

    def __init__(
        self,
        method="first-order",
        loss="huber:gamma=5",
        kernel="gaussian:gamma=25",
        sigma=0.05,
        alpha=0.05,
        radius=2,
        patch_radius=0,
    ):
        self.method = method
        self.loss = loss
        self.kernel = kernel
        self.sigma = sigma
        self.alpha = alpha
        self.radius = radius
        self.patch_radius = patch_radius

    def transform(self, X):
        X = self._validate(X)
        cfg = FilterConfig(
            sigma=self.sigma,
            alpha=self.alpha,
            stencil=make_box_stencil(self.radius),
            patch_radius=self.patch_radius,
        )
        if self.method == "first-order":
            return first_order_filter(X, parse_loss(self.loss), cfg)
        if self.method == "second-order":
            return second_order_filter(X, parse_loss(self.loss), cfg)
        if self.method == "bilateral-df":
            return division_free_bilateral(X, parse_kernel(self.kernel), cfg)
        if self.method == "nlm":
            return kernel_filter_normalized(X, parse_kernel(self.kernel), cfg)
        raise ValueError(f"unknown method {self.method!r}")


class MapDenoiser(_ImageTransformer):
    """Iterative regularized least-squares denoiser.

    Minimizes (1/2 sigma^2)||u - X||^2 plus the pairwise loss penalty over a
    box stencil, by gradient descent or heavy-ball momentum.
    """

    def __init__(
        self,
        loss="huber:gamma=5",
        sigma=0.05,
        radius=2,
        solver="heavy-ball",
        max_iters=2000,
        step=None,
        momentum=0.9,
        grad_tol=None,
    ):
        self.loss = loss
        self.sigma = sigma
        self.radius = radius
        self.solver = solver
        self.max_iters = max_iters
        self.step = step
        self.momentum = momentum
        self.grad_tol = grad_tol

    def transform(self, X):
        X = self._validate(X)
        problem = MapProblem(
            observed=X,
            loss=parse_loss(self.loss),
            stencil=make_box_stencil(self.radius),
            sigma=self.sigma,
        )
        cfg = SolverConfig(
            max_iters=self.max_iters,
            step=self.step,
            momentum=self.momentum,
            grad_tol=self.grad_tol,
            objective_log=False,
        )
        if self.solver == "gd":
            out, trace = solve_gd(problem, cfg)
        elif self.solver == "heavy-ball":
            out, trace = solve_heavy_ball(problem, cfg)
        else:
            raise ValueError(f"unknown solver {self.solver!r}")
        self.n_iter_ = trace.iterations
        self.converged_ = trace.converged
        return out
