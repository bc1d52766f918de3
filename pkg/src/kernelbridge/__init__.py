"""Two-way translation between robust regularizers and adaptive filter kernels.

The package turns a scalar robust loss into the data-dependent kernel of a
one-pass adaptive filter (first-order: the influence function; second-order:
the curvature) and, inversely, integrates a kernel back into a loss. On top
of the translation it provides the one-shot filters themselves, dense
graph-Laplacian oracles, iterative reference solvers for the underlying
regularized least-squares problems, closed-form 1D periodic filters for the
squared-difference model, and a PSNR experiment harness with a CLI.
"""

from .corpus import CORPUS_NAMES, corpus, corpus_image
from .estimators import MapDenoiser, OneShotDenoiser
from .experiments import (
    ExperimentSpec,
    SweepResult,
    emit_csv,
    run_bilateral_inversion_experiment,
    run_dirichlet_figure,
    run_huber_tv_experiment,
)
from .filters import (
    SIGMA_BREAKDOWN,
    ErrorBoundReport,
    FilterConfig,
    PeriodicFilter1D,
    dirichlet_approx_1d,
    dirichlet_approx_taps,
    dirichlet_exact_1d,
    dirichlet_spectral_gains,
    division_free_bilateral,
    filter_error_bound_report,
    first_order_filter,
    kernel_filter_normalized,
    l2_exact_map,
    l2_shrinkage,
    second_order_filter,
)
from .graph import (
    AffinityMatrix,
    LaplacianBundle,
    alpha_exact,
    alpha_mean_degree,
    build_affinity,
    hessian_isotropic_check,
    normalized_filter,
    pseudo_quadratic_energy,
)
from .kernels import (
    Boxcar,
    CauchyKernel,
    ExponentialKernel,
    GaussianKernel,
    NumericLoss,
    TranslationScale,
    kernel_from_loss_first_order,
    kernel_from_loss_second_order,
    loss_from_kernel_first_order,
    loss_from_kernel_second_order,
    parse_kernel,
    roundtrip_check,
)
from .losses import (
    Barron,
    ClippedQuadratic,
    Huber,
    Lorentzian,
    Quadratic,
    RescaledLoss,
    ScaledLoss,
    TV,
    Welsch,
    parse_loss,
)
from .metrics import l1_filter_distance, mse, psnr
from .noise import NoiseSpec, add_gaussian_noise
from .pgmio import PgmParseError, load_pgm, save_pgm
from .solvers import (
    DivergenceError,
    MapProblem,
    SolverConfig,
    map_vs_oneshot_report,
    solve_gd,
    solve_heavy_ball,
)
from .stencil import Stencil, make_box_stencil, make_gaussian_stencil

__version__ = "0.1.0"
