import types

import numpy as np
import pytest

from composite_ib import ops
from composite_ib.bench import fit_slope, relative_error, zigzag_count
from composite_ib.grid import CellField, square_grid
from composite_ib.immersed import Body, Transfer, circle_body
from composite_ib.linsolve import SolverError
from composite_ib.poisson_ib import (
    Poisson1DProblem, PoissonProblem, circle_problem, constraint_matrix_composite, discretize_1d,
    discretize_2d, exact_1d, exact_2d_circle, exact_2d_jump, forcing_apply_composite,
    solve_poisson_composite, solve_poisson_prescribed_force, solve_poisson_prototypical, solve_saddle,
)
from oracles import div_loop, spread_loop

def _phi():
    from composite_ib.ddf import DEFAULT_KERNEL
    return DEFAULT_KERNEL.phi


# --- analytic solutions ------------------------------------------------------

def test_exact_1d():
    assert exact_1d(1.0) == 0.0
    assert exact_1d(0.0) == 0.0 and exact_1d(2.0) == 0.0
    h = 1e-6
    left = (exact_1d(1.0) - exact_1d(1.0 - h)) / h
    right = (exact_1d(1.0 + h) - exact_1d(1.0)) / h
    assert right - left == pytest.approx(4.0, abs=1e-5)
    # q = -4 on both sides
    x = np.array([0.3, 1.6])
    assert np.allclose((exact_1d(x + h) - 2 * exact_1d(x) + exact_1d(x - h)) / h**2, -4.0, atol=1e-3)


def test_exact_2d_circle():
    th = np.linspace(0, 2 * np.pi, 13)
    np.testing.assert_allclose(exact_2d_circle(np.cos(th), np.sin(th)), np.cos(th), atol=1e-15)
    np.testing.assert_allclose(exact_2d_circle(0.3, 0.2), 0.3)
    assert exact_2d_circle(2.0, 0.0) == pytest.approx(0.5)
    # normal-derivative jump: d/dr (cos/r) - d/dr (r cos) at r = 1
    h = 1e-6
    for t in (0.0, 0.7, 2.0):
        c, s = np.cos(t), np.sin(t)
        out = (exact_2d_circle((1 + h) * c, (1 + h) * s) - exact_2d_circle(c, s)) / h
        inn = (exact_2d_circle(c, s) - exact_2d_circle((1 - h) * c, (1 - h) * s)) / h
        assert out - inn == pytest.approx(exact_2d_jump(t), abs=1e-5)


# --- forcing and constraint pieces -------------------------------------------

def test_forcing_zero_jump():
    g = square_grid(2.0, 16)
    tr = Transfer(g, circle_body(n=24))
    assert forcing_apply_composite(tr, np.zeros(24)).max_abs() == 0.0


def test_forcing_single_marker_sums():
    g = square_grid(2.0, 16)
    b = Body(np.array([[0.11, -0.23]]), np.array([[0.6, 0.8]]), np.array([[-0.8, 0.6]]), np.array([0.4]))
    tr = Transfer(g, b)
    f = forcing_apply_composite(tr, np.ones(1))
    assert g.dx * g.dy * f.values.sum() == pytest.approx(0.4, abs=1e-13)
    dpart = ops.divergence(tr.R_F1n(b.normals))
    assert abs(dpart.values.sum()) < 1e-12


def test_forcing_matches_brute_force_composition(rng):
    g = square_grid(2.0, 16)
    b = circle_body(center=(0.1, 0.05), radius=1.0, n=20, phase=0.2)
    tr = Transfer(g, b)
    jump = rng.standard_normal(b.n_markers)
    n = b.normals
    phi = _phi()
    ax = spread_loop(phi, g, "Fx", b, n[:, 0] ** 2 * jump)
    ay = spread_loop(phi, g, "Fy", b, n[:, 1] ** 2 * jump)
    ifc = 0.5 * (ax[:-1] + ax[1:]) + 0.5 * (ay[:, :-1] + ay[:, 1:])
    dx_ = spread_loop(phi, g, "Fx", b, n[:, 0] * jump, weighted=True)
    dy_ = spread_loop(phi, g, "Fy", b, n[:, 1] * jump, weighted=True)
    ref = ifc + div_loop(dx_, dy_, g.dx, g.dy)
    np.testing.assert_allclose(forcing_apply_composite(tr, jump).values, ref, atol=1e-11)


def test_constraint_diagonal_vanishes_for_constant_indicator():
    g = square_grid(2.0, 16)
    tr = Transfer(g, circle_body(n=24))
    fake = types.SimpleNamespace(plus_c=CellField(np.full(g.shape_c, 0.7), grid=g))
    e_c, h = constraint_matrix_composite(tr, fake)
    assert np.abs(h).max() < 1e-13
    assert e_c.shape == (24, g.n_cells)


def test_constraint_diagonal_positive_on_outward_circle():
    p = circle_problem(0.1, 1.0, outer="dst")
    d = discretize_2d(p)
    assert np.all(d.h_plus > 0)


def test_constraint_diagonal_flat_interface():
    g = square_grid(2.0, 32)
    ys = g.yc()[8:-8] + 0.25 * g.dy
    m = len(ys)
    X = 0.037
    b = Body(np.column_stack([np.full(m, X), ys]), np.tile([1.0, 0.0], (m, 1)),
             np.tile([0.0, 1.0], (m, 1)), np.full(m, g.dy))
    tr = Transfer(g, b)
    step = 0.5 * (1 + np.tanh((g.xc() - X) / 0.1))
    fake = types.SimpleNamespace(plus_c=CellField(np.repeat(step[:, None], g.ny, axis=1), grid=g))
    _, h = constraint_matrix_composite(tr, fake)
    # 1D sum along x; the y weights of a lattice-aligned marker sum to one
    phi = _phi()
    ref = np.sum(phi((g.xc() - X) / g.dx) * (g.xc() - X) * step)
    np.testing.assert_allclose(h, ref, rtol=1e-12)


# --- 1D problem ------------------------------------------------------------------

def test_1d_composite_second_order_off_support():
    errs, hs = [], []
    for n in (16, 32, 64, 128, 256):
        p = Poisson1DProblem(n)
        d = discretize_1d(p)
        sol = solve_poisson_composite(p)
        errs.append(relative_error(sol.u, exact_1d(p.x()), d.support)[0])
        hs.append(p.h)
        assert sol.block_residual < 1e-9 and sol.constraint_residual < 1e-12
    assert fit_slope(hs, errs) >= 1.9


def test_1d_prototypical_first_order_and_overshoot():
    errs = []
    for n in (16, 32, 64, 128):
        p = Poisson1DProblem(n)
        sol = solve_poisson_prototypical(p)
        errs.append(np.abs(sol.u - exact_1d(p.x())).max())
        assert sol.forcing[0] > 4.0
        assert sol.constraint_residual < 1e-12
    slope = -np.polyfit(np.log([16, 32, 64, 128]), np.log(errs), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_1d_prescribed_interface_value_biased_high():
    for n in (16, 32, 64):
        p = Poisson1DProblem(n)
        sol = solve_poisson_prescribed_force(p, 4.0)
        d = discretize_1d(p)
        assert (d.E_C @ sol.u)[0] > 0
        assert np.abs(sol.u - exact_1d(p.x()))[~d.support].max() < 1e-12


def test_1d_problem_validation():
    with pytest.raises(ValueError):
        Poisson1DProblem(3)
    with pytest.raises(ValueError):
        Poisson1DProblem(16, x_gamma=2.5)


# --- 2D problem ------------------------------------------------------------------

def test_zero_problem_gives_zero():
    g = square_grid(2.0, 20)
    b = circle_body(n=40)
    p = PoissonProblem(g, b, np.zeros(40), outer="dst")
    for sol in (solve_poisson_composite(p), solve_poisson_prototypical(p)):
        assert np.abs(sol.u).max() == 0.0 and np.abs(sol.forcing).max() == 0.0


def test_zero_prescribed_force_is_plain_poisson(rng):
    g = square_grid(2.0, 20)
    q = CellField(rng.standard_normal(g.shape_c), grid=g)
    p = PoissonProblem(g, circle_body(n=40), np.zeros(40), q=q, outer="dst")
    sol = solve_poisson_prescribed_force(p, np.zeros(40))
    np.testing.assert_allclose(ops.laplacian_center(sol.field).values, q.values, atol=1e-10)


@pytest.mark.parametrize("outer", ["lgf", "dst"])
def test_2d_composite_solution(outer):
    p = circle_problem(0.1, 1.0, outer=outer)
    d = discretize_2d(p)
    sol = solve_poisson_composite(p)
    ex = exact_2d_circle(*p.grid.coords("C")).ravel(order="F")
    x, y = p.grid.coords("C")
    r = np.hypot(x, y).ravel(order="F")
    err = np.abs(sol.u - ex)
    assert err[~d.support].max() < 0.01
    assert err[r < 0.6].max() < 0.005
    assert sol.block_residual < 1e-9
    hterm = d.h_plus * sol.forcing
    assert np.abs(d.E_C @ sol.u - hterm - p.u_gamma).max() < 1e-10
    th = np.arctan2(p.body.positions[:, 1], p.body.positions[:, 0])
    assert np.abs(sol.forcing - exact_2d_jump(th)).max() < 0.05


def test_2d_composite_error_shrinks_second_order():
    errs = []
    for dxr in (0.2, 0.1, 0.05):
        p = circle_problem(dxr, 1.3)
        d = discretize_2d(p)
        sol = solve_poisson_composite(p)
        ex = exact_2d_circle(*p.grid.coords("C")).ravel(order="F")
        errs.append(relative_error(sol.u, ex, d.support)[0])
    assert fit_slope([0.2, 0.1, 0.05], errs) >= 1.8


@pytest.fixture(scope="module")
def prescribed_2d_errors():
    far, cell = [], []
    for dxr in (0.2, 0.1, 0.05):
        p = circle_problem(dxr, 1.3)
        theta = np.arctan2(p.body.positions[:, 1], p.body.positions[:, 0])
        sol = solve_poisson_prescribed_force(p, exact_2d_jump(theta))
        xs, ys = p.grid.coords("C")
        ex = exact_2d_circle(xs, ys).ravel(order="F")
        r = np.hypot(xs, ys).ravel(order="F")
        far.append(relative_error(sol.u, ex, r <= 1.5)[0])
        cell.append(relative_error(sol.u, ex, discretize_2d(p).support)[0])
    return far, cell


def test_2d_prescribed_second_order_at_fixed_distance(prescribed_2d_errors):
    far, _ = prescribed_2d_errors
    assert fit_slope([0.2, 0.1, 0.05], far) >= 1.8


@pytest.mark.xfail(strict=True, reason="the band just outside the cell-delta support converges at first order")
def test_2d_prescribed_second_order_off_cell_support(prescribed_2d_errors):
    _, cell = prescribed_2d_errors
    assert fit_slope([0.2, 0.1, 0.05], cell) >= 1.8


def test_2d_prototypical_constraint_and_ill_conditioning():
    p = circle_problem(0.1, 0.1)
    d = discretize_2d(p)
    with pytest.raises(SolverError):
        solve_saddle(d, p.rhs(), p.u_gamma, "prototypical")
    sol = solve_saddle(d, p.rhs(), p.u_gamma, "prototypical", want_cond=True, check=False)
    assert sol.cond > 1e12
    assert zigzag_count(sol.forcing) > len(sol.forcing) // 4
    good = solve_poisson_prototypical(circle_problem(0.1, 1.3))
    assert good.constraint_residual < 1e-10


def test_2d_composite_forcing_smooth_at_small_spacing():
    p = circle_problem(0.1, 0.1)
    sol = solve_poisson_composite(p, want_cond=True)
    assert zigzag_count(sol.forcing) == 0
    assert sol.cond < 1e3


def test_spreading_routes():
    p = circle_problem(0.2, 1.0, outer="dst")
    a = solve_poisson_composite(p, spreading="faces")
    b = solve_poisson_composite(p, spreading="cells")
    assert a.constraint_residual < 1e-10 and b.constraint_residual < 1e-10
    assert np.abs(a.u - b.u).max() > 0
    with pytest.raises(ValueError):
        solve_poisson_composite(p, spreading="nodes")


def test_unknown_formulation_and_outer():
    p = circle_problem(0.2, 1.0, outer="dst")
    d = discretize_2d(p)
    with pytest.raises(ValueError):
        solve_saddle(d, p.rhs(), p.u_gamma, "hybrid")
    with pytest.raises(ValueError):
        discretize_2d(PoissonProblem(p.grid, p.body, p.u_gamma, outer="periodic"))


def test_bicgstab_schur_matches_lu():
    p = circle_problem(0.2, 1.0, outer="dst")
    a = solve_poisson_composite(p, schur="lu")
    b = solve_poisson_composite(p, schur="bicgstab")
    np.testing.assert_allclose(a.u, b.u, atol=1e-8)
    assert b.block_residual < 1e-9
