import numpy as np
import pytest

import kernelbridge as kb
from kernelbridge.filters import dirichlet_exact_1d
from kernelbridge.losses import Huber, Quadratic, Welsch
from kernelbridge.solvers import (
    DivergenceError,
    MapProblem,
    SolverConfig,
    default_step,
    gradient,
    map_vs_oneshot_report,
    objective,
    solve_gd,
    solve_heavy_ball,
)
from kernelbridge.stencil import Stencil, make_box_stencil


def _dirichlet_stencil():
    # Horizontal +-1 neighbors with weight 2 reproduce the periodic
    # squared-difference model (I + 2 sigma^2 L0) when paired with the
    # quadratic loss.
    w = np.zeros((3, 3))
    w[1, 0] = w[1, 2] = 2.0
    return Stencil(1, w)


def test_gradient_matches_fd():
    rng = np.random.default_rng(0)
    x = rng.random((6, 6))
    p = MapProblem(observed=x, loss=Huber(0.2), stencil=make_box_stencil(1), sigma=0.3)
    u = rng.random((6, 6))
    g = gradient(p, u)
    h = 1e-7
    for idx in [(0, 0), (2, 3), (5, 5), (0, 4)]:
        e = np.zeros_like(u)
        e[idx] = h
        fd = (objective(p, u + e) - objective(p, u - e)) / (2 * h)
        assert g[idx] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_gradient_matches_fd_periodic():
    rng = np.random.default_rng(1)
    x = rng.random(12)
    p = MapProblem(
        observed=x, loss=Quadratic(), stencil=_dirichlet_stencil(), sigma=0.4, boundary="periodic"
    )
    u = rng.random(12)
    g = gradient(p, u)
    h = 1e-7
    for i in (0, 5, 11):
        e = np.zeros(12)
        e[i] = h
        fd = (objective(p, u + e) - objective(p, u - e)) / (2 * h)
        assert g.ravel()[i] == pytest.approx(fd, rel=1e-6)


def test_l2_direct_problem_reaches_closed_form():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(64)
    sigma = 0.5
    p = MapProblem(
        observed=x, loss=Quadratic(), stencil=make_box_stencil(1), sigma=sigma, direct=True
    )
    u, trace = solve_gd(p, SolverConfig(max_iters=5000, grad_tol=1e-12, objective_log=False))
    assert trace.converged
    assert np.max(np.abs(u - x / (1 + sigma**2))) <= 1e-8


def test_heavy_ball_matches_dirichlet_and_beats_gd():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(64)
    sigma = 1.0
    p = MapProblem(
        observed=x, loss=Quadratic(), stencil=_dirichlet_stencil(), sigma=sigma,
        boundary="periodic",
    )
    mu = 1 / sigma**2
    lip = 1 / sigma**2 + 8.0
    m = ((np.sqrt(lip) - np.sqrt(mu)) / (np.sqrt(lip) + np.sqrt(mu))) ** 2
    cfg_gd = SolverConfig(max_iters=20000, grad_tol=1e-10, objective_log=False)
    cfg_hb = SolverConfig(max_iters=20000, grad_tol=1e-10, objective_log=False, momentum=float(m))
    u_gd, tr_gd = solve_gd(p, cfg_gd)
    u_hb, tr_hb = solve_heavy_ball(p, cfg_hb)
    target = dirichlet_exact_1d(64, sigma).apply(x)
    assert np.max(np.abs(u_hb - target)) <= 1e-7
    assert np.max(np.abs(u_gd - target)) <= 1e-7
    assert tr_hb.iterations < tr_gd.iterations


def test_momentum_zero_reproduces_gd_exactly():
    rng = np.random.default_rng(4)
    x = rng.random((8, 8))
    p = MapProblem(observed=x, loss=Huber(0.1), stencil=make_box_stencil(1), sigma=0.2)
    cfg = SolverConfig(max_iters=50, momentum=0.0, objective_log=False)
    u_gd, _ = solve_gd(p, cfg)
    u_hb, _ = solve_heavy_ball(p, cfg)
    np.testing.assert_array_equal(u_gd, u_hb)


def test_divergence_raises_with_iteration_message():
    x = np.random.default_rng(5).random((8, 8))
    p = MapProblem(observed=x, loss=Quadratic(), stencil=make_box_stencil(1), sigma=0.1)
    cfg = SolverConfig(max_iters=200, step=100.0)
    with pytest.raises(DivergenceError, match="divergence at iteration"):
        solve_gd(p, cfg)


def test_objective_decreases_along_gd():
    x = np.random.default_rng(6).random((10, 10))
    p = MapProblem(observed=x, loss=Welsch(0.1), stencil=make_box_stencil(1), sigma=0.1)
    _u, trace = solve_gd(p, SolverConfig(max_iters=100))
    objs = trace.objectives
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))


def test_default_step_positive_and_stable():
    x = np.random.default_rng(7).random((8, 8))
    p = MapProblem(observed=x, loss=Huber(0.1), stencil=make_box_stencil(2), sigma=0.05)
    s = default_step(p)
    assert 0 < s < 1


def test_warm_start():
    x = np.random.default_rng(8).random((8, 8))
    p = MapProblem(observed=x, loss=Quadratic(), stencil=make_box_stencil(1), sigma=0.3)
    u1, tr1 = solve_gd(p, SolverConfig(max_iters=5000, grad_tol=1e-10, objective_log=False))
    u2, tr2 = solve_gd(
        p, SolverConfig(max_iters=5000, grad_tol=1e-10, objective_log=False), x0=u1
    )
    assert tr2.iterations <= 2
    np.testing.assert_allclose(u2, u1, atol=1e-9)


def test_neighbor_maps_shared_between_equivalent_problems():
    # Sweeps create many short-lived problems over the same grid; the index
    # arrays must be shared, not rebuilt and retained per problem.
    p1 = MapProblem(
        observed=np.zeros((8, 8)), loss=Quadratic(), stencil=make_box_stencil(1), sigma=1.0
    )
    p2 = MapProblem(
        observed=np.ones((8, 8)), loss=Quadratic(), stencil=make_box_stencil(1), sigma=0.5
    )
    assert p1.neighbor_maps() is p2.neighbor_maps()
    p3 = MapProblem(
        observed=np.zeros((8, 8)),
        loss=Quadratic(),
        stencil=make_box_stencil(1),
        sigma=1.0,
        boundary="periodic",
    )
    assert p3.neighbor_maps() is not p1.neighbor_maps()


def test_map_problem_validation():
    with pytest.raises(ValueError):
        MapProblem(observed=np.zeros(4), loss=Quadratic(), stencil=make_box_stencil(1), sigma=0.0)
    with pytest.raises(ValueError):
        MapProblem(
            observed=np.zeros(4),
            loss=Quadratic(),
            stencil=make_box_stencil(1),
            sigma=1.0,
            boundary="torus",
        )


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(momentum=1.0)
    with pytest.raises(ValueError):
        SolverConfig(step=-1.0)


def test_map_vs_oneshot_report():
    img = kb.corpus_image("blocks", 16) / 255.0
    p = MapProblem(observed=img, loss=Huber(5 / 255), stencil=make_box_stencil(1), sigma=10 / 255)
    rep = map_vs_oneshot_report(p, SolverConfig(max_iters=500, objective_log=False))
    assert rep.psnr_first > 0 and rep.psnr_second > 0
    assert rep.psnr_first >= rep.psnr_second


def test_direct_mode_rejects_oneshot_report():
    p = MapProblem(
        observed=np.zeros(4), loss=Quadratic(), stencil=make_box_stencil(1), sigma=1.0, direct=True
    )
    with pytest.raises(ValueError):
        map_vs_oneshot_report(p)
