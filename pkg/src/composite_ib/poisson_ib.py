"""Immersed-boundary Dirichlet Poisson problems: composite and prototypical forms.

Both formulations share one saddle system (x = u, y = -[u^n])::

    [ L    B ] [  u   ]   [ q + b   ]
    [ E_C  H ] [ -f   ] = [ u_Gamma ]

* composite:    B = I_{F->C} R_F diag(n)^2 I_{S->V} + D R_{F,1n} diag(n) I_{S->V},
                H = diag(E_{C,1n} H+)
* prototypical: B = R_C, H = 0

where ``f`` is the normal-derivative jump.  In the notation of
:class:`~composite_ib.linsolve.BlockSystem` this is ``B1T = B``, ``B2 = E_C``
and ``C = -H``, solved by Schur reduction.

The same algebra runs on two discretizations with a common matrix-level
interface (:class:`Discretization`): the 2D staggered grid with a body of
markers, and a dedicated 1D line with one interface point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import ops
from .ddf import DEFAULT_KERNEL, Kernel, get_kernel, weights_1d
from .grid import CellField, GridSpec
from .immersed import Body, Transfer
from .indicator import IndicatorSet, build_indicator
from .linsolve import (BlockSystem, DirichletSolver, SolverError, UnboundedSolver, condition_number,
                       make_schur_solver, schur_solve)

BLOCK_TOL = 1e-9
LU_MAX_MARKERS = 2000


# ---------------------------------------------------------------------------
# analytic test problems
# ---------------------------------------------------------------------------

X_LEFT, X_RIGHT, Q_1D = 0.0, 2.0, -4.0
JUMP_1D = -(X_RIGHT - X_LEFT) * Q_1D / 2.0


def exact_1d(x, x_gamma: float = 1.0, q: float = Q_1D, x_left: float = X_LEFT, x_right: float = X_RIGHT):
    """Piecewise quadratic with zero values at both ends and at ``x_gamma``."""
    x = np.asarray(x, dtype=float)
    left = (x - x_left) * (x - x_gamma) * q / 2.0
    right = (x - x_gamma) * (x - x_right) * q / 2.0
    return np.where(x <= x_gamma, left, right)


def exact_2d_circle(x, y, radius: float = 1.0):
    """x inside the circle, R^2 x / r^2 outside (continuous at r = R)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    r2 = x * x + y * y
    outside = r2 > radius * radius
    safe = np.where(outside, r2, 1.0)
    return np.where(outside, radius**2 * x / safe, x)


def exact_2d_jump(theta):
    """Normal-derivative jump of :func:`exact_2d_circle` on r = R."""
    return -2.0 * np.cos(theta)


# ---------------------------------------------------------------------------
# matrix-level discretization
# ---------------------------------------------------------------------------


@dataclass
class Discretization:
    """Everything the solvers need, as matrices over flattened cell vectors.

    ``spread_faces`` is I_{F->C} R_F diag(n)^2 I_{S->V}; ``spread_dist`` is
    D R_{F,1n} diag(n) I_{S->V}; ``spread_cells`` is R_C.  ``h_plus`` is
    E_{C,1n} H+.  ``support`` marks cells where a marker's cell-sampled
    delta is nonzero and ``support_interp`` cells reached by
    I_{F->C} R_F.
    """

    n_cells: int
    n_markers: int
    solve: Callable[[np.ndarray], np.ndarray]
    apply_L: Optional[Callable[[np.ndarray], np.ndarray]]
    spread_cells: sp.csr_matrix
    spread_faces: sp.csr_matrix
    spread_dist: sp.csr_matrix
    E_C: sp.csr_matrix
    E_C1n: sp.csr_matrix
    h_plus: np.ndarray
    support: np.ndarray
    support_interp: np.ndarray
    h_cell: float
    extra: dict = field(default_factory=dict)

    def spreading(self, formulation: str, spreading: str = "faces") -> sp.csr_matrix:
        if formulation == "prototypical":
            return self.spread_cells
        if spreading == "faces":
            return (self.spread_faces + self.spread_dist).tocsr()
        if spreading == "cells":
            # n . n = 1 so R_C replaces the face route directly
            return (self.spread_cells + self.spread_dist).tocsr()
        raise ValueError(f"unknown spreading {spreading!r}")


def _support(mat) -> np.ndarray:
    return np.asarray(abs(mat).sum(axis=1)).ravel() > 0


def _vector_blocks(normals: np.ndarray, power: int) -> sp.csr_matrix:
    """(2N) x N matrix diag(n)^power I_{S->V}."""
    return sp.vstack([sp.diags(normals[:, 0] ** power), sp.diags(normals[:, 1] ** power)]).tocsr()


# 2D ---------------------------------------------------------------------------


@dataclass
class PoissonProblem:
    """2D problem on ``grid`` with interface data ``u_gamma`` on ``body``.

    ``outer`` is "lgf" (free space, u -> 0) or "dst" (Dirichlet values
    ``boundary(x, y)`` at the ghost centers).
    """

    grid: GridSpec
    body: Body
    u_gamma: np.ndarray
    q: Optional[CellField] = None
    outer: str = "lgf"
    boundary: Optional[Callable] = None
    kernel: Kernel = DEFAULT_KERNEL
    exterior_value: float = 1.0

    def rhs(self) -> np.ndarray:
        q = self.q if self.q is not None else CellField.zeros(self.grid)
        if self.outer == "dst" and self.boundary is not None:
            q = q + ops.dirichlet_boundary_term(self.grid, self.boundary)
        return q.flat()


def forcing_apply_composite(transfer: Transfer, jump: np.ndarray) -> CellField:
    """I_{F->C} R_F(n o n o I_{S->V} f) + D R_{F,1n}(n o I_{S->V} f)."""
    n = transfer.body.normals
    fv = np.column_stack([jump, jump])
    return ops.f2c(transfer.R_F(n * n * fv)) + ops.divergence(transfer.R_F1n(n * fv))


def constraint_matrix_composite(transfer: Transfer, indicator: IndicatorSet):
    """(E_C, E_{C,1n} H+): the two pieces of the composite constraint row."""
    vol = transfer.grid.cell_volume
    e_c = (vol * transfer.matrix("C").T).tocsr()
    return e_c, transfer.E_C1n(indicator.plus_c)


def discretize_2d(problem: PoissonProblem, indicator: Optional[IndicatorSet] = None) -> Discretization:
    g, body = problem.grid, problem.body
    tr = Transfer(g, body, problem.kernel)
    if problem.outer == "lgf":
        lgf = UnboundedSolver(g)
        solve, apply_L = lgf.solve, None
    elif problem.outer == "dst":
        dst = DirichletSolver(g)
        lap = ops.matrix("L", g)
        solve, apply_L = dst.solve, (lambda u: lap @ u)
    else:
        raise ValueError(f"unknown outer treatment {problem.outer!r}")
    if indicator is None:
        indicator = build_indicator(body, g, problem.outer, problem.exterior_value, transfer=tr)
    areas = sp.diags(body.areas)
    spread_cells = (tr.matrix("C") @ areas).tocsr()
    ifc_rf = ops.matrix("IFC", g) @ tr.spread_faces_matrix("")
    spread_faces = (ifc_rf @ _vector_blocks(body.normals, 2)).tocsr()
    spread_dist = (ops.matrix("D", g) @ tr.spread_faces_matrix("n") @ _vector_blocks(body.normals, 1)).tocsr()
    e_c, h_plus = constraint_matrix_composite(tr, indicator)
    e_c1n = (g.cell_volume * tr.matrix("Cn").T).tocsr()
    return Discretization(
        g.n_cells, body.n_markers, solve, apply_L, spread_cells, spread_faces, spread_dist,
        e_c, e_c1n, h_plus, _support(tr.matrix("C")), _support(ifc_rf), g.dx,
        extra={"transfer": tr, "indicator": indicator, "grid": g},
    )


# 1D ---------------------------------------------------------------------------


@dataclass
class Poisson1DProblem:
    """``n`` intervals on [x_left, x_right]; one interface point with normal +x.

    Unknowns sit at the interior nodes ``x_i = x_left + i h`` (i = 1..n-1);
    the zero end values act as ghost values one spacing beyond the first
    and last unknowns.  Faces are the interval midpoints.
    """

    n: int
    x_gamma: float = 1.0
    q: float = Q_1D
    u_gamma: float = 0.0
    x_left: float = X_LEFT
    x_right: float = X_RIGHT
    kernel: Kernel = DEFAULT_KERNEL

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("the 1D problem needs at least 4 intervals")
        if not (self.x_left < self.x_gamma < self.x_right):
            raise ValueError("interface must lie strictly inside the interval")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / self.n

    def x(self) -> np.ndarray:
        return self.x_left + self.h * np.arange(1, self.n)

    def x_faces(self) -> np.ndarray:
        return self.x_left + self.h * (np.arange(self.n) + 0.5)

    def rhs(self) -> np.ndarray:
        return np.full(self.n - 1, float(self.q))


def _delta_column(kernel: Kernel, first: float, h: float, n: int, x0: float) -> sp.csr_matrix:
    start, w = weights_1d(kernel, first, h, n, np.array([x0]))
    idx = start[0] + np.arange(w.shape[1])
    keep = w[0] != 0.0
    return sp.csr_matrix((w[0][keep], (idx[keep], np.zeros(keep.sum(), dtype=int))), shape=(n, 1))


def discretize_1d(problem: Poisson1DProblem) -> Discretization:
    k = get_kernel(problem.kernel)
    n, h = problem.n, problem.h
    m = n - 1
    grad = ops._d_c2f(m, h)
    div = ops._d_f2c(m, h)
    lap = (div @ grad).tocsc()
    lu = spla.splu(lap)

    def solve(f):
        return lu.solve(np.asarray(f, dtype=float))

    xg = problem.x_gamma
    d_c = _delta_column(k, problem.x_left + h, h, m, xg)
    d_f = _delta_column(k, problem.x_left + 0.5 * h, h, n, xg)
    d_c1n = sp.diags(problem.x() - xg) @ d_c
    d_f1n = sp.diags(problem.x_faces() - xg) @ d_f
    # indicator: L H = D R_F n + b with H = 0 on the left and 1 on the right
    b = np.zeros(m)
    b[-1] = -1.0 / h**2
    h_c = solve(div @ d_f.toarray().ravel() + b)
    e_c = (h * d_c.T).tocsr()
    e_c1n = (h * d_c1n.T).tocsr()
    return Discretization(
        m, 1, solve, lambda u: lap @ u, d_c.tocsr(), (ops._a_f2c(m) @ d_f).tocsr(), (div @ d_f1n).tocsr(),
        e_c, e_c1n, e_c1n @ h_c, _support(d_c), _support(ops._a_f2c(m) @ d_f), h,
        extra={"indicator": h_c, "x": problem.x()},
    )


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


@dataclass
class PoissonSolution:
    u: np.ndarray
    forcing: np.ndarray
    formulation: str
    constraint_residual: float
    block_residual: float
    schur: Optional[np.ndarray] = None
    cond: Optional[float] = None
    grid: Optional[GridSpec] = None

    @property
    def field(self) -> CellField:
        if self.grid is None:
            raise ValueError("1D solutions have no grid field")
        return CellField.from_flat(self.grid, self.u)


def _discretize(problem):
    if isinstance(problem, Poisson1DProblem):
        return discretize_1d(problem), problem.rhs(), np.atleast_1d(float(problem.u_gamma)), None
    disc = discretize_2d(problem)
    return disc, problem.rhs(), np.asarray(problem.u_gamma, dtype=float), problem.grid


def solve_saddle(disc: Discretization, rhs: np.ndarray, u_gamma: np.ndarray, formulation: str = "composite",
                 spreading: str = "faces", schur: Optional[str] = None, want_cond: bool = False,
                 check: bool = True, grid: Optional[GridSpec] = None) -> PoissonSolution:
    """Schur-reduce and solve the saddle system of ``formulation``."""
    if formulation not in ("composite", "prototypical"):
        raise ValueError(f"unknown formulation {formulation!r}")
    m = disc.n_markers
    B = disc.spreading(formulation, spreading)
    C = -sp.diags(disc.h_plus) if formulation == "composite" else sp.csr_matrix((m, m))
    system = BlockSystem(disc.apply_L, disc.solve, B, disc.E_C, C)
    kind = schur or ("lu" if m <= LU_MAX_MARKERS else "bicgstab")
    solver = make_schur_solver(system, kind)
    u, y = schur_solve(system, solver, rhs, u_gamma)
    f = -y
    block = system.residual(u, y, rhs, u_gamma)
    if check and not block <= BLOCK_TOL:
        raise SolverError(f"saddle residual {block:.3e} exceeds {BLOCK_TOL:g}")
    hterm = disc.h_plus * f if formulation == "composite" else 0.0
    constraint = float(np.abs(disc.E_C @ u - hterm - u_gamma).max()) if m else 0.0
    S = getattr(solver, "matrix", None)
    cond = condition_number(S) if (want_cond and S is not None) else None
    return PoissonSolution(u, f, formulation, constraint, block, S, cond, grid)


def solve_poisson_composite(problem, spreading: str = "faces", schur: Optional[str] = None,
                            want_cond: bool = False) -> PoissonSolution:
    disc, rhs, ug, g = _discretize(problem)
    return solve_saddle(disc, rhs, ug, "composite", spreading, schur, want_cond, grid=g)


def solve_poisson_prototypical(problem, schur: Optional[str] = None, want_cond: bool = False) -> PoissonSolution:
    disc, rhs, ug, g = _discretize(problem)
    return solve_saddle(disc, rhs, ug, "prototypical", schur=schur, want_cond=want_cond, grid=g)


def solve_prescribed(disc: Discretization, rhs: np.ndarray, jump: np.ndarray, u_gamma: np.ndarray,
                     spreading: str = "cells", grid: Optional[GridSpec] = None) -> PoissonSolution:
    """``L u = q + b + B f`` with a fixed jump ``f``; no constraint is imposed.

    ``constraint_residual`` reports ``max |E_C u - u_Gamma|``, the error of
    the interpolated interface value.
    """
    jump = np.asarray(jump, dtype=float)
    if spreading == "cells":
        B = disc.spread_cells
    elif spreading == "faces":
        B = disc.spread_faces
    elif spreading == "composite":
        B = disc.spreading("composite", "faces")
    else:
        raise ValueError(f"unknown spreading {spreading!r}")
    src = rhs + B @ jump
    u = disc.solve(src)
    if disc.apply_L is not None:
        block = float(np.linalg.norm(disc.apply_L(u) - src) / max(np.linalg.norm(src), 1e-300))
    else:
        block = 0.0
    gap = float(np.abs(disc.E_C @ u - u_gamma).max()) if disc.n_markers else 0.0
    return PoissonSolution(u, jump, "prescribed", gap, block, grid=grid)


def solve_poisson_prescribed_force(problem, jump_exact, spreading: str = "cells") -> PoissonSolution:
    disc, rhs, ug, g = _discretize(problem)
    return solve_prescribed(disc, rhs, np.atleast_1d(jump_exact), ug, spreading, grid=g)


# ---------------------------------------------------------------------------
# convenience builders for the benchmark problems
# ---------------------------------------------------------------------------


def circle_problem(dx_over_r: float, ds_over_dx: float, radius: float = 1.0, outer: str = "lgf",
                   kernel: Kernel = DEFAULT_KERNEL) -> PoissonProblem:
    """Circle of radius R in [-2R, 2R]^2 with u_Gamma = X."""
    from .immersed import circle_body, markers_for_ratio

    n_cells = int(round(4.0 / dx_over_r))
    grid = GridSpec(n_cells, n_cells, 4.0 * radius / n_cells, 4.0 * radius / n_cells,
                    (-2.0 * radius, -2.0 * radius))
    body = circle_body(radius=radius, n=markers_for_ratio(radius, ds_over_dx, grid.dx))
    boundary = (lambda x, y: exact_2d_circle(x, y, radius)) if outer == "dst" else None
    return PoissonProblem(grid, body, body.positions[:, 0].copy(), outer=outer, boundary=boundary, kernel=kernel)
