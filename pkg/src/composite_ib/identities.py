"""Discrete product-rule and composite-field identities as residual checks.

Each check draws random fields, evaluates both sides of an identity and
returns the largest absolute difference.  The composite-field checks use a
random indicator ``H+`` in [0, 1] with ``H- = 1 - H+``; since constants are
not in the kernel of ``G`` under zero extension, those comparisons skip a
ring of ``edge`` cells at the box boundary.
"""
from __future__ import annotations

import numpy as np

from . import ops
from .grid import CellField, FaceField, GridSpec, NodeField, TensorField


def _ring_max(field, edge: int) -> float:
    out = 0.0
    for c in field.components:
        inner = c[edge:c.shape[0] - edge, edge:c.shape[1] - edge] if edge else c
        if inner.size:
            out = max(out, float(np.max(np.abs(inner))))
    return out


def _random_fields(grid: GridSpec, rng: np.random.Generator):
    def cell():
        return CellField(rng.standard_normal(grid.shape_c), grid=grid)

    def face():
        return FaceField(rng.standard_normal(grid.shape_fx), rng.standard_normal(grid.shape_fy), grid=grid)

    def node():
        return NodeField(rng.standard_normal(grid.shape_n), grid=grid)

    def tensor():
        return TensorField(
            rng.standard_normal(grid.shape_c), rng.standard_normal(grid.shape_n),
            rng.standard_normal(grid.shape_n), rng.standard_normal(grid.shape_c), grid=grid,
        )

    return cell, face, node, tensor


def identity_residuals(grid: GridSpec, rng: np.random.Generator, edge: int = 2) -> dict[str, float]:
    """Residuals of every exact identity for one draw of random fields."""
    cell, face, node, tensor = _random_fields(grid, rng)
    s1, s2, v, w, t = cell(), cell(), face(), node(), tensor()
    hp = CellField(rng.random(grid.shape_c), grid=grid)
    hm = 1.0 - hp
    up, um, vp, vm = cell(), cell(), face(), face()
    hfp, hfm = ops.c2f(hp), ops.c2f(hm)
    quarter = FaceField(
        np.full(grid.shape_fx, grid.dx**2 / 4), np.full(grid.shape_fy, grid.dy**2 / 4), grid=grid
    )
    gh = ops.gradient(hp)
    ghd = ops.f2d(gh).transpose()
    ubar = hp * up + hm * um
    vbar = hfp * vp + hfm * vm

    res = {}
    res["D G = L"] = (ops.divergence(ops.gradient(s1)) - ops.laplacian_center(s1)).max_abs()
    res["D_D G_F = L_F"] = (ops.tensor_divergence(ops.face_gradient(v)) - ops.laplacian_face(v)).max_abs()
    res["D C = 0"] = ops.divergence(ops.curl(w)).max_abs()
    res["C^T G = 0"] = ops.cocurl(ops.gradient(s1)).max_abs()
    lhs = ops.c2f(s1).flat() * v.flat()
    rhs = s1.flat() * ops.f2c(v).flat()
    res["adjoint C->F / F->C"] = abs(lhs.sum() - rhs.sum()) / max(1.0, np.abs(lhs).sum())
    res["I_{F->C} G = D I_{C->F}"] = (
        ops.f2c(ops.gradient(s1)) - ops.divergence(ops.c2f(s1))
    ).max_abs()
    res["interpolated product"] = (
        ops.c2f(s1 * s2) - ops.c2f(s1) * ops.c2f(s2) - quarter * ops.gradient(s1) * ops.gradient(s2)
    ).max_abs()
    res["gradient product rule"] = (
        ops.gradient(s1 * s2) - ops.c2f(s1) * ops.gradient(s2) - ops.c2f(s2) * ops.gradient(s1)
    ).max_abs()
    res["scalar-vector divergence rule"] = (
        ops.divergence(ops.c2f(s1) * v) - ops.f2c(v * ops.gradient(s1)) - s1 * ops.divergence(v)
    ).max_abs()
    sf = ops.c2f(s1)
    res["scalar-tensor divergence rule"] = (
        ops.tensor_divergence(ops.f2d(sf) * t)
        - ops.d2f(t * ops.face_gradient(sf))
        - sf * ops.tensor_divergence(t)
    ).max_abs()
    res["composite gradient"] = _ring_max(
        ops.gradient(ubar) - hfp * ops.gradient(up) - hfm * ops.gradient(um) - gh * ops.c2f(up - um),
        edge,
    )
    res["composite divergence"] = _ring_max(
        ops.divergence(vbar) - hp * ops.divergence(vp) - hm * ops.divergence(vm) - ops.f2c(gh * (vp - vm)),
        edge,
    )
    res["composite scalar Laplacian"] = (
        ops.laplacian_center(ubar)
        - hp * ops.laplacian_center(up)
        - hm * ops.laplacian_center(um)
        - ops.f2c(gh * ops.gradient(up - um))
        - ops.divergence(gh * ops.c2f(up - um))
    ).max_abs()
    res["composite vector Laplacian"] = _ring_max(
        ops.laplacian_face(vbar)
        - hfp * ops.laplacian_face(vp)
        - hfm * ops.laplacian_face(vm)
        - ops.d2f(ghd * (ops.face_gradient(vp) - ops.face_gradient(vm)))
        - ops.tensor_divergence(ghd * ops.f2d(vp - vm)),
        edge,
    )
    return res


def convective_locality_residual(grid: GridSpec, rng: np.random.Generator) -> float:
    """Composite advection splits exactly where the indicator is locally 0 or 1.

    Uses a half-plane indicator with a short random ramp; faces whose
    advection stencil sees only constant indicator values must satisfy
    ``N(vbar) = H_F+ N(v+) + H_F- N(v-)`` exactly.
    """
    _, face, _, _ = _random_fields(grid, rng)
    vp, vm = face(), face()
    h = np.zeros(grid.shape_c)
    mid = grid.nx // 2
    h[mid + 1:, :] = 1.0
    h[mid, :] = rng.random(grid.ny)
    hp = CellField(h, grid=grid)
    hfp, hfm = ops.c2f(hp), ops.c2f(1.0 - hp)
    vbar = hfp * vp + hfm * vm
    diff = ops.convective(vbar) - hfp * ops.convective(vp) - hfm * ops.convective(vm)
    # keep x-faces and y-faces whose i-index is at least 3 away from the ramp
    ix = np.arange(grid.nx + 1)
    ic = np.arange(grid.nx)
    # away from the ramp and from the box edge, where H_F+ is not 0 or 1
    keep_x = (np.abs(ix - (mid + 0.5)) > 3) & (ix >= 2) & (ix <= grid.nx - 2)
    keep_y = (np.abs(ic - mid) > 3) & (ic >= 2) & (ic <= grid.nx - 3)
    ex = np.abs(diff.x[keep_x, 2:-2])
    ey = np.abs(diff.y[keep_y, 2:-2])
    return float(max(ex.max(), ey.max()))


def run_suite(n: int = 32, draws: int = 50, seed: int = 0) -> dict[str, float]:
    """Worst residual of each identity over ``draws`` random draws on an n x n grid.

    Unit cells keep every term O(1), so absolute residuals are relative ones.
    """
    rng = np.random.default_rng(seed)
    grid = GridSpec(n, n, 1.0, 1.0, (0.0, 0.0))
    worst: dict[str, float] = {}
    for _ in range(draws):
        for k, val in identity_residuals(grid, rng).items():
            worst[k] = max(worst.get(k, 0.0), val)
    return worst
