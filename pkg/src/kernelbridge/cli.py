"""Command-line front end.

Subcommands: add-noise, denoise, translate, graph-check, experiment.

Conventions:
- Images are 8-bit binary PGM (P5). Internally the pixel values and the
  8-bit-unit flags (--sigma, --gamma, noise levels) are divided by 255, so
  the arithmetic runs on the unit scale; outputs are scaled back.
- The dirichlet-exact / dirichlet-approx methods are 1D periodic filters
  applied to each image row; their --sigma is the dimensionless parameter of
  the squared-difference model, not an 8-bit value.
- Exit codes: 0 success, 1 runtime/numeric failure (one machine-parseable
  line on stderr), 2 usage error.
- --config FILE reads line-oriented key=value pairs that behave exactly like
  the long flags of the same name; explicit flags win on conflict.
- All output files are written atomically (temp file + rename).
"""

import argparse
import os
import sys

import numpy as np

from . import experiments as exp
from .corpus import CORPUS_NAMES, corpus_image
from .filters import (
    FilterConfig,
    dirichlet_approx_1d,
    dirichlet_exact_1d,
    division_free_bilateral,
    first_order_filter,
    kernel_filter_normalized,
    l2_shrinkage,
    second_order_filter,
)
from .graph import alpha_exact, alpha_mean_degree, build_affinity, normalized_filter
from .kernels import (
    loss_from_kernel_first_order,
    loss_from_kernel_second_order,
    kernel_from_loss_first_order,
    kernel_from_loss_second_order,
    parse_kernel,
    TranslationScale,
)
from .losses import RescaledLoss, parse_loss
from .noise import NoiseSpec, add_gaussian_noise
from .pgmio import load_pgm, save_pgm
from .solvers import MapProblem, SolverConfig, solve_gd, solve_heavy_ball
from .stencil import make_box_stencil

__all__ = ["main", "build_parser"]

DENOISE_METHODS = (
    "nlm",
    "bilateral-df",
    "first-order",
    "second-order",
    "l2-shrink",
    "dirichlet-exact",
    "dirichlet-approx",
    "map-gd",
    "map-heavy-ball",
)


class CliError(Exception):
    """Runtime failure mapped to exit code 1."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def _write_atomic(path: str, payload: bytes) -> None:
    if not path:
        raise CliError("write", "empty output path")
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as e:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise CliError("write", str(e)) from e


def _load_image(path_or_name: str, size: int, seed: int) -> np.ndarray:
    """8-bit-scale image from a corpus name or a PGM path."""
    if path_or_name in CORPUS_NAMES:
        return corpus_image(path_or_name, size, seed=seed)
    try:
        with open(path_or_name, "rb") as fh:
            return load_pgm(fh.read())
    except (OSError, ValueError) as e:
        raise CliError("read", str(e)) from e


def _positive(text: str) -> float:
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; flags win on conflict")
    p.add_argument("--seed", type=int, default=0, help="noise/corpus seed (never affects filter arithmetic)")
    p.add_argument("--size", type=int, default=64, help="corpus image side length")
    p.add_argument("--threads", type=int, default=1, help="worker cap (output is independent of N)")
    p.add_argument("--verbose", action="store_true", help="human-readable progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kernelbridge",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "Loss grammar:   name[:key=value,...] e.g. huber:gamma=5, tv, "
            "welsch:gamma=3, barron:beta=-2,gamma=1 (beta=-inf allowed)\n"
            "Kernel grammar: name[:key=value] e.g. gaussian:gamma=25, boxcar:gamma=10, "
            "cauchy:gamma=5, exponential:gamma=5"
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("add-noise", help="add seeded Gaussian noise to an image")
    q.add_argument("input", help="PGM path or corpus name " + "/".join(CORPUS_NAMES))
    q.add_argument("output", help="output PGM path")
    q.add_argument("--sigma", type=_nonneg, required=True, help="noise std in 8-bit units")
    _add_common(q)

    q = sub.add_parser("denoise", help="apply a one-shot filter or iterative solver")
    q.add_argument("input")
    q.add_argument("output")
    q.add_argument("--method", required=True, choices=DENOISE_METHODS)
    q.add_argument("--loss", help="loss family string (first/second-order and map methods)")
    q.add_argument("--kernel", help="kernel family string (nlm and bilateral-df)")
    q.add_argument("--sigma", type=_positive, default=10.0, help="shrinkage sigma, 8-bit units")
    q.add_argument("--alpha", type=_positive, default=0.05, help="bilateral strength")
    q.add_argument("--radius", type=int, default=2, help="stencil radius")
    q.add_argument("--patch-radius", type=int, default=0, help="patch radius for nlm distances")
    q.add_argument("--max-iters", type=int, default=2000)
    q.add_argument("--step", type=_positive, default=None, help="solver step (default: curvature-based)")
    q.add_argument("--momentum", type=_nonneg, default=0.9)
    q.add_argument("--grad-tol", type=_positive, default=None)
    q.add_argument("--trace-out", help="CSV path for the (iter, objective, grad_norm) trace")
    _add_common(q)

    q = sub.add_parser("translate", help="tabulate loss<->kernel translations as CSV")
    q.add_argument("--loss", help="loss family string")
    q.add_argument("--kernel", help="kernel family string")
    q.add_argument("--direction", choices=("loss-to-kernel", "kernel-to-loss"), required=True)
    q.add_argument("--order", type=int, choices=(1, 2), default=1)
    q.add_argument("--sigma", type=_positive, default=1.0, help="shrinkage sigma of the translation scale")
    q.add_argument("--alpha", type=_positive, default=1.0, help="Laplacian normalization of the translation scale")
    q.add_argument("--t-max", type=_positive, default=10.0)
    q.add_argument("--points", type=int, default=201)
    q.add_argument("--out", required=True, help="output CSV path")
    _add_common(q)

    q = sub.add_parser("graph-check", help="dense affinity/Laplacian residuals as CSV")
    q.add_argument("--image", default="blocks", help="corpus name or PGM path")
    q.add_argument("--kernel", default="gaussian:gamma=50", help="affinity kernel family string")
    q.add_argument("--radius", type=int, default=2)
    q.add_argument("--patch-radius", type=int, default=0)
    q.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(q)

    q = sub.add_parser("experiment", help="run a named experiment and emit CSV")
    q.add_argument("name", choices=("huber-tv", "bilateral-inversion", "dirichlet"))
    q.add_argument("--out", required=True, help="output CSV path")
    q.add_argument("--image", default="blocks")
    q.add_argument("--noise-sigma", type=_nonneg, default=10.0)
    q.add_argument("--gamma", type=_positive, default=None, help="loss/kernel scale, 8-bit units")
    q.add_argument("--radius", type=int, default=None, help="stencil radius")
    q.add_argument("--grid", help="comma-separated sweep grid")
    q.add_argument("--grid-second", help="comma-separated second-order alpha grid (bilateral)")
    q.add_argument("--kernel-family", choices=exp.BILATERAL_FAMILIES, default="gaussian")
    q.add_argument("--filter-alpha", type=_positive, default=None)
    q.add_argument("--max-iters", type=int, default=2000)
    _add_common(q)

    return p


def _apply_config(argv: list) -> list:
    """Expand --config FILE into equivalent long flags placed before the
    explicit ones, so explicit flags win via argparse last-one-wins."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv  # let argparse report the missing value
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise CliError("config", str(e)) from e
    injected = []
    for ln, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError("config", f"line {ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        injected.extend([f"--{key.strip()}", value.strip()])
    if not rest:
        return injected
    # Keep the subcommand (and any leading positional) first.
    return rest[:1] + injected + rest[1:]


def _read_pgm_unit(args) -> np.ndarray:
    return _load_image(args.input, args.size, args.seed).astype(np.float64) / 255.0


def _save_pgm_unit(path: str, img: np.ndarray) -> None:
    _write_atomic(path, save_pgm(255.0 * img))


def _csv_lines(columns, rows) -> bytes:
    out = [",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(format(float(v), ".17g"))
        out.append(",".join(cells))
    return ("\n".join(out) + "\n").encode("ascii")


def _cmd_add_noise(args) -> int:
    img = _read_pgm_unit(args)
    noisy = add_gaussian_noise(img, NoiseSpec(sigma=args.sigma / 255.0, seed=args.seed))
    _save_pgm_unit(args.output, noisy)
    return 0


def _require(condition: bool, stage: str, message: str) -> None:
    if not condition:
        raise CliError(stage, message)


def _parse_loss_arg(text):
    try:
        return parse_loss(text)
    except ValueError as e:
        raise CliError("parse", str(e)) from e


def _parse_kernel_arg(text):
    try:
        return parse_kernel(text)
    except ValueError as e:
        raise CliError("parse", str(e)) from e


def _cmd_denoise(args) -> int:
    img = _read_pgm_unit(args)
    method = args.method
    sigma = args.sigma / 255.0
    stencil = make_box_stencil(args.radius)

    if method in ("dirichlet-exact", "dirichlet-approx"):
        # Dimensionless sigma; row-wise periodic 1D filtering.
        s = args.sigma
        if method == "dirichlet-exact":
            filt = dirichlet_exact_1d(img.shape[1], s)
            out = np.vstack([filt.apply(row) for row in img])
        else:
            out = np.vstack([dirichlet_approx_1d(row, s) for row in img])
        _save_pgm_unit(args.output, out)
        return 0

    if method == "l2-shrink":
        _save_pgm_unit(args.output, l2_shrinkage(img, sigma))
        return 0

    cfg = FilterConfig(
        sigma=sigma,
        alpha=args.alpha,
        stencil=stencil,
        patch_radius=args.patch_radius,
    )
    if method in ("nlm", "bilateral-df"):
        _require(args.kernel is not None, "args", f"--kernel is required for {method}")
        kernel = _parse_kernel_arg(args.kernel)
        # Kernel scales quoted in 8-bit units; rescale to the unit domain.
        kernel = type(kernel)(gamma=kernel.gamma / 255.0)
        if method == "nlm":
            out = kernel_filter_normalized(img, kernel, cfg)
        else:
            out = division_free_bilateral(img, kernel, cfg)
        _save_pgm_unit(args.output, out)
        return 0

    _require(args.loss is not None, "args", f"--loss is required for {method}")
    # Loss parameters are quoted in 8-bit units; express on the unit scale.
    loss = RescaledLoss(_parse_loss_arg(args.loss), 1.0 / 255.0)
    if method == "first-order":
        out = first_order_filter(img, loss, cfg)
    elif method == "second-order":
        out = second_order_filter(img, loss, cfg)
    else:
        problem = MapProblem(observed=img, loss=loss, stencil=stencil, sigma=sigma)
        scfg = SolverConfig(
            max_iters=args.max_iters,
            step=args.step,
            momentum=args.momentum,
            grad_tol=args.grad_tol,
            objective_log=True,
        )
        solver = solve_gd if method == "map-gd" else solve_heavy_ball
        out, trace = solver(problem, scfg)
        if args.trace_out:
            rows = [
                (i, obj, g)
                for i, (obj, g) in enumerate(zip(trace.objectives, trace.grad_norms))
            ]
            _write_atomic(args.trace_out, _csv_lines(("iter", "objective", "grad_norm"), rows))
    _save_pgm_unit(args.output, out)
    return 0


def _cmd_translate(args) -> int:
    _require(
        (args.loss is None) != (args.kernel is None),
        "args",
        "provide exactly one of --loss / --kernel",
    )
    if args.direction == "loss-to-kernel":
        _require(args.loss is not None, "args", "loss-to-kernel requires --loss")
    else:
        _require(args.kernel is not None, "args", "kernel-to-loss requires --kernel")

    t = np.linspace(0.0, args.t_max, args.points)
    scale = TranslationScale(sigma=args.sigma, alpha=args.alpha)
    if args.loss is not None:
        loss = _parse_loss_arg(args.loss)
        k1 = kernel_from_loss_first_order(loss, scale)
        k2 = kernel_from_loss_second_order(loss, scale)
        rho1 = loss_from_kernel_first_order(k1)
        rho2 = loss_from_kernel_second_order(k2)
    else:
        kernel = _parse_kernel_arg(args.kernel)
        k1 = kernel
        k2 = kernel
        rho1 = loss_from_kernel_first_order(kernel)
        rho2 = loss_from_kernel_second_order(kernel)
    rows = [
        (
            float(ti),
            float(np.asarray(k1(ti))),
            float(np.asarray(k2(ti))),
            float(np.asarray(rho1.rho(ti))),
            float(np.asarray(rho2.rho(ti))),
        )
        for ti in t
    ]
    _write_atomic(args.out, _csv_lines(("t", "k_first", "k_second", "rho_first", "rho_second"), rows))
    return 0


def _cmd_graph_check(args) -> int:
    img = _load_image(args.image, min(args.size, 16), args.seed)
    kernel = _parse_kernel_arg(args.kernel)
    affinity = build_affinity(img, kernel, make_box_stencil(args.radius), args.patch_radius)
    a_exact = alpha_exact(affinity)
    a_mean = alpha_mean_degree(affinity)
    bundle = normalized_filter(affinity, alpha=a_exact)
    ones = np.ones(affinity.n)
    rows = [
        ("alpha_exact", a_exact),
        ("alpha_mean_degree", a_mean),
        ("alpha_rel_gap", abs(a_exact - a_mean) / abs(a_exact)),
        ("row_sum_residual", float(np.max(np.abs(bundle.W @ ones - 1.0)))),
        ("norm_null_residual", float(np.max(np.abs(bundle.L_norm @ ones)))),
        ("unnorm_null_residual", float(np.max(np.abs(bundle.L_unnorm @ ones)))),
        ("symmetry_residual", float(np.max(np.abs(affinity.K - affinity.K.T)))),
    ]
    payload = _csv_lines(("residual", "value"), [])
    lines = [payload.decode("ascii").strip()]
    for name, value in rows:
        lines.append(f"{name},{format(float(value), '.17g')}")
    data = ("\n".join(lines) + "\n").encode("ascii")
    if args.out:
        _write_atomic(args.out, data)
    else:
        sys.stdout.write(data.decode("ascii"))
    return 0


def _parse_grid(text):
    values = tuple(float(v) for v in text.split(","))
    return values


def _cmd_experiment(args) -> int:
    kwargs = dict(
        image=args.image,
        size=args.size,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        max_iters=args.max_iters,
    )
    if args.filter_alpha is not None:
        kwargs["filter_alpha"] = args.filter_alpha
    if args.gamma is not None:
        kwargs["gamma"] = args.gamma
    if args.radius is not None:
        kwargs["stencil_radius"] = args.radius
    if args.grid is not None:
        kwargs["grid"] = _parse_grid(args.grid)
    if args.grid_second is not None:
        kwargs["grid_second"] = _parse_grid(args.grid_second)

    if args.name == "huber-tv":
        spec = exp.ExperimentSpec(**kwargs)
        result = exp.run_huber_tv_experiment(spec)
    elif args.name == "bilateral-inversion":
        kwargs.setdefault("gamma", 5.0)
        kwargs.setdefault("filter_alpha", 0.01)
        if args.radius is None:
            kwargs["stencil_radius"] = 2
        if args.grid is None:
            kwargs["grid"] = tuple(float(v) for v in np.geomspace(0.002, 0.1, 8))
        spec = exp.ExperimentSpec(**kwargs)
        result = exp.run_bilateral_inversion_experiment(spec, args.kernel_family)
    else:
        if args.grid is None:
            kwargs["grid"] = (0.05, 0.1, 0.2, 0.35, 0.5)
        kwargs["size"] = args.size if args.size != 64 else 256
        spec = exp.ExperimentSpec(**kwargs)
        result = exp.run_dirichlet_figure(spec)
    try:
        exp.emit_csv(result, args.out)
    except (OSError, ValueError) as e:
        raise CliError("write", str(e)) from e
    if args.verbose:
        sys.stderr.write(f"wrote {len(result.rows)} rows to {args.out}\n")
    return 0


_DISPATCH = {
    "add-noise": _cmd_add_noise,
    "denoise": _cmd_denoise,
    "translate": _cmd_translate,
    "graph-check": _cmd_graph_check,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.threads < 1:
            parser.error("--threads must be at least 1")
        return _DISPATCH[args.command](args)
    except CliError as e:
        cmd = argv[0] if argv else "?"
        sys.stderr.write(f'error subcommand={cmd} stage={e.stage} message="{e}"\n')
        return 1
    except (RuntimeError, ValueError, FloatingPointError) as e:
        cmd = argv[0] if argv else "?"
        sys.stderr.write(f'error subcommand={cmd} stage=run message="{e}"\n')
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
