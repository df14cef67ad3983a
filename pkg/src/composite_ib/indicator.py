"""Discrete indicator fields built from the body by one Poisson solve.

``H+`` solves ``L H+ = D R_F n + b_H``, where ``b_H`` carries the constant
value of ``H+`` on the outer boundary.  ``H-`` is always ``1 - H+``.
Face and tensor versions are averages of the complementary field, so that
they equal one on the box boundary where the complementary field vanishes::

    H-_F = I_{C->F} H-_C      H+_F = 1 - H-_F
    H-_D = I_{F->D} H-_F      H+_D = 1 - H-_D
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import ops
from .grid import CellField, FaceField, GridSpec, TensorField
from .immersed import Body, Transfer
from .linsolve import DirichletSolver, UnboundedSolver

# H+ may overshoot [0, 1] slightly near the interface; beyond this margin the
# normals and boundary value disagree
_RANGE_MARGIN = 0.25


class OrientationError(ValueError):
    """The body normals do not match the requested outer value of H+."""


@dataclass(frozen=True, eq=False)
class IndicatorSet:
    plus_c: CellField
    minus_c: CellField
    plus_f: FaceField
    minus_f: FaceField
    plus_d: TensorField
    minus_d: TensorField
    dh_dt: FaceField
    xdot_n: np.ndarray
    boundary_value: float
    solver: str

    @property
    def grid(self) -> GridSpec:
        return self.plus_c.grid


def _solve(grid: GridSpec, rhs: CellField, value: float, solver: str) -> CellField:
    if solver == "dst":
        f = rhs + ops.dirichlet_boundary_term(grid, lambda x, y: np.full_like(x, value))
        return CellField.from_flat(grid, DirichletSolver(grid).solve(f.flat()))
    if solver == "lgf":
        # a divergence source has zero net strength, so the free-space
        # solution decays and the far value is added as a constant
        return CellField.from_flat(grid, UnboundedSolver(grid).solve(rhs.flat())) + value
    raise ValueError(f"unknown indicator solver {solver!r}")


def indicator_source(transfer: Transfer) -> CellField:
    """D R_F n."""
    return ops.divergence(transfer.R_F(transfer.body.normals))


def build_indicator(body: Body, grid: GridSpec, solver: str = "dst", exterior_value: float = 1.0,
                    transfer: Optional[Transfer] = None, check: bool = True) -> IndicatorSet:
    """Indicator fields for ``body``; ``exterior_value`` is H+ on the outer boundary."""
    if transfer is None:
        transfer = Transfer(grid, body)
    plus = _solve(grid, indicator_source(transfer), float(exterior_value), solver)
    if check and body.n_markers:
        lo, hi = float(plus.values.min()), float(plus.values.max())
        if lo < -_RANGE_MARGIN or hi > 1.0 + _RANGE_MARGIN:
            raise OrientationError(
                f"H+ spans [{lo:.3g}, {hi:.3g}]; normals inconsistent with outer value {exterior_value}"
            )
    minus = 1.0 - plus
    minus_f = ops.c2f(minus)
    minus_d = ops.f2d(minus_f)
    xdot_n, dh = ddt_indicator(transfer)
    return IndicatorSet(plus, minus, 1.0 - minus_f, minus_f, 1.0 - minus_d, minus_d, dh, xdot_n,
                        float(exterior_value), solver)


def indicator_residual(ind: IndicatorSet, transfer: Transfer) -> float:
    """max |L H+ - D R_F n - b_H| (zero up to the solver's roundoff)."""
    g = ind.grid
    lap = ops.laplacian_center(ind.plus_c)
    rhs = indicator_source(transfer)
    if ind.solver == "dst":
        rhs = rhs + ops.dirichlet_boundary_term(g, lambda x, y: np.full_like(x, ind.boundary_value))
        return (lap - rhs).max_abs()
    # free space: compare on cells whose stencil stays inside the block
    r = (lap - rhs).values
    return float(np.abs(r[1:-1, 1:-1]).max())


def indicator_gradient_residual(ind: IndicatorSet, transfer: Transfer) -> FaceField:
    """G H+ - R_F n, the curl-carrying part ignored in the solution path.

    The gradient uses the outer value of H+ beyond the block so boundary
    faces are meaningful.
    """
    grad = ops.gradient(ind.plus_c - ind.boundary_value)
    return grad - transfer.R_F(transfer.body.normals)


def ddt_indicator(transfer: Transfer) -> tuple[np.ndarray, FaceField]:
    """Marker normal speed ``n . Xdot`` and its spread field R_F(Xdot_n n)."""
    body = transfer.body
    xn = body.normal_velocity()
    return xn, transfer.R_F(xn[:, None] * body.normals)


def dump_indicator(ind: IndicatorSet, path) -> None:
    """Write H+ at cell centers as a CSV grid (row j, column i)."""
    np.savetxt(Path(path), ind.plus_c.values.T, delimiter=",", fmt="%.17g")
