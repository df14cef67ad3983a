"""Mimetic second-order operators and space transforms on the staggered grid.

Every operator is built from four 1D primitives acting along one axis:
differences and two-point averages, either from "center-type" points
(``n`` values) to "face-type" points (``n+1`` values) or back.  Values
outside the stored index range are taken as zero, so operators carry no
boundary terms; Dirichlet data enters through :func:`dirichlet_boundary_term`.

Each operator is available matrix-free (functions on fields) and as a
sparse matrix (:func:`matrix`) assembled from Kronecker products of the 1D
stencils.  The two routes are implemented separately and cross-checked in
the tests.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import CellField, FaceField, GridSpec, NodeField, TensorField

# ---------------------------------------------------------------------------
# 1D primitives along an axis
# ---------------------------------------------------------------------------


def _pad(a: np.ndarray, axis: int) -> np.ndarray:
    width = [(0, 0)] * a.ndim
    width[axis] = (1, 1)
    return np.pad(a, width)


def diff_c2f(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return np.diff(_pad(a, axis), axis=axis) / h


def diff_f2c(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return np.diff(a, axis=axis) / h


def avg_c2f(a: np.ndarray, axis: int) -> np.ndarray:
    p = _pad(a, axis)
    n = p.shape[axis]
    lo = np.take(p, np.arange(0, n - 1), axis=axis)
    hi = np.take(p, np.arange(1, n), axis=axis)
    return 0.5 * (lo + hi)


def avg_f2c(a: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    lo = np.take(a, np.arange(0, n - 1), axis=axis)
    hi = np.take(a, np.arange(1, n), axis=axis)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------


def gradient(s: CellField) -> FaceField:
    """G: cell centers to faces."""
    g = s.grid
    return FaceField(diff_c2f(s.values, 0, g.dx), diff_c2f(s.values, 1, g.dy), grid=g)


def divergence(v: FaceField) -> CellField:
    """D: faces to cell centers."""
    g = v.grid
    return CellField(diff_f2c(v.x, 0, g.dx) + diff_f2c(v.y, 1, g.dy), grid=g)


def face_gradient(v: FaceField) -> TensorField:
    """G_F: component (a, b) is the derivative of v_a along direction b."""
    g = v.grid
    return TensorField(
        diff_f2c(v.x, 0, g.dx),
        diff_c2f(v.x, 1, g.dy),
        diff_c2f(v.y, 0, g.dx),
        diff_f2c(v.y, 1, g.dy),
        grid=g,
    )


def tensor_divergence(t: TensorField) -> FaceField:
    """D_D: row-wise divergence of a tensor, landing on faces."""
    g = t.grid
    return FaceField(
        diff_c2f(t.xx, 0, g.dx) + diff_f2c(t.xy, 1, g.dy),
        diff_f2c(t.yx, 0, g.dx) + diff_c2f(t.yy, 1, g.dy),
        grid=g,
    )


def curl(w: NodeField) -> FaceField:
    """C: scalar curl of a node field, ``(d_y w, -d_x w)`` on faces."""
    g = w.grid
    return FaceField(diff_f2c(w.values, 1, g.dy), -diff_f2c(w.values, 0, g.dx), grid=g)


def cocurl(v: FaceField) -> NodeField:
    """C^T: ``d_x v_y - d_y v_x`` on nodes."""
    g = v.grid
    return NodeField(diff_c2f(v.y, 0, g.dx) - diff_c2f(v.x, 1, g.dy), grid=g)


def laplacian_center(s: CellField) -> CellField:
    """L = D G with zero values outside the block."""
    g = s.grid
    a = s.values
    lx = diff_f2c(diff_c2f(a, 0, g.dx), 0, g.dx)
    ly = diff_f2c(diff_c2f(a, 1, g.dy), 1, g.dy)
    return CellField(lx + ly, grid=g)


def laplacian_face(v: FaceField) -> FaceField:
    """L_F = D_D G_F."""
    return tensor_divergence(face_gradient(v))


def laplacian_node(w: NodeField) -> NodeField:
    """L_E = -C^T C."""
    return NodeField(-cocurl(curl(w)).values, grid=w.grid)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def c2f(s: CellField) -> FaceField:
    """I_{C->F}: average to faces in each direction."""
    return FaceField(avg_c2f(s.values, 0), avg_c2f(s.values, 1), grid=s.grid)


def f2c(v: FaceField) -> CellField:
    """I_{F->C}: sum of the averaged components (adjoint of I_{C->F})."""
    return CellField(avg_f2c(v.x, 0) + avg_f2c(v.y, 1), grid=v.grid)


def f2d(v: FaceField) -> TensorField:
    """I_{F->D}: component (a, b) is v_a averaged along direction b."""
    return TensorField(
        avg_f2c(v.x, 0), avg_c2f(v.x, 1), avg_c2f(v.y, 0), avg_f2c(v.y, 1), grid=v.grid
    )


def d2f(t: TensorField) -> FaceField:
    """I_{D->F}: row sums of the averaged tensor components."""
    return FaceField(
        avg_c2f(t.xx, 0) + avg_f2c(t.xy, 1),
        avg_f2c(t.yx, 0) + avg_c2f(t.yy, 1),
        grid=t.grid,
    )


_TRANSFORMS = {("C", "F"): c2f, ("F", "C"): f2c, ("F", "D"): f2d, ("D", "F"): d2f}


def transform(kind: str, field):
    """Apply ``kind`` in {"C->F", "F->C", "F->D", "D->F", "S->V"}."""
    try:
        src, dst = kind.replace(" ", "").split("->")
    except ValueError:
        raise ValueError(f"bad transform {kind!r}") from None
    if (src, dst) == ("S", "V"):
        s = np.asarray(field, dtype=float)
        return np.stack([s, s], axis=-1)
    fn = _TRANSFORMS.get((src, dst))
    if fn is None:
        raise ValueError(f"no transform {kind!r}")
    if getattr(field, "space", None) != src:
        raise ValueError(f"transform {kind!r} applied to a field in space {getattr(field, 'space', '?')!r}")
    return fn(field)


def dirichlet_boundary_term(grid: GridSpec, g) -> CellField:
    """b with ``L u = q + b`` equivalent to the Laplacian using ghost values ``g``.

    ``g(x, y)`` is sampled at the ghost cell centers one cell outside the
    block; their stencil contributions are moved to the right-hand side.
    """
    b = np.zeros(grid.shape_c)
    xc, yc = grid.xc(), grid.yc()
    x0, x1, y0, y1 = grid.extent
    xl, xr = x0 - 0.5 * grid.dx, x1 + 0.5 * grid.dx
    yb, yt = y0 - 0.5 * grid.dy, y1 + 0.5 * grid.dy
    b[0, :] -= np.asarray(g(np.full_like(yc, xl), yc)) / grid.dx**2
    b[-1, :] -= np.asarray(g(np.full_like(yc, xr), yc)) / grid.dx**2
    b[:, 0] -= np.asarray(g(xc, np.full_like(xc, yb))) / grid.dy**2
    b[:, -1] -= np.asarray(g(xc, np.full_like(xc, yt))) / grid.dy**2
    return CellField(b, grid=grid)


# ---------------------------------------------------------------------------
# sparse assembly
# ---------------------------------------------------------------------------


def _d_c2f(n: int, h: float) -> sp.csr_matrix:
    return sp.diags([np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n), format="csr") / h


def _d_f2c(n: int, h: float) -> sp.csr_matrix:
    return sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1), format="csr") / h


def _a_c2f(n: int) -> sp.csr_matrix:
    return sp.diags([np.full(n, 0.5), np.full(n, 0.5)], [0, -1], shape=(n + 1, n), format="csr")


def _a_f2c(n: int) -> sp.csr_matrix:
    return sp.diags([np.full(n, 0.5), np.full(n, 0.5)], [0, 1], shape=(n, n + 1), format="csr")


def _along_x(a1d, ny_cols: int):
    return sp.kron(sp.identity(ny_cols), a1d, format="csr")


def _along_y(a1d, nx_rows: int):
    return sp.kron(a1d, sp.identity(nx_rows), format="csr")


def _matrices(g: GridSpec) -> dict:
    nx, ny, dx, dy = g.nx, g.ny, g.dx, g.dy
    m = {}
    # cell -> faces
    m["G"] = sp.vstack([_along_x(_d_c2f(nx, dx), ny), _along_y(_d_c2f(ny, dy), nx)], format="csr")
    m["D"] = sp.hstack([_along_x(_d_f2c(nx, dx), ny), _along_y(_d_f2c(ny, dy), nx)], format="csr")
    m["ICF"] = sp.vstack([_along_x(_a_c2f(nx), ny), _along_y(_a_c2f(ny), nx)], format="csr")
    m["IFC"] = sp.hstack([_along_x(_a_f2c(nx), ny), _along_y(_a_f2c(ny), nx)], format="csr")
    # faces -> tensor; x-faces are (nx+1, ny), y-faces (nx, ny+1)
    z_cfy = sp.csr_matrix((g.n_cells, nx * (ny + 1)))
    z_nfy = sp.csr_matrix((g.n_nodes, nx * (ny + 1)))
    z_cfx = sp.csr_matrix((g.n_cells, (nx + 1) * ny))
    z_nfx = sp.csr_matrix((g.n_nodes, (nx + 1) * ny))
    gxx = _along_x(_d_f2c(nx, dx), ny)
    gxy = _along_y(_d_c2f(ny, dy), nx + 1)
    gyx = _along_x(_d_c2f(nx, dx), ny + 1)
    gyy = _along_y(_d_f2c(ny, dy), nx)
    m["GF"] = sp.bmat([[gxx, z_cfy], [gxy, z_nfy], [z_nfx, gyx], [z_cfx, gyy]], format="csr")
    ixx = _along_x(_a_f2c(nx), ny)
    ixy = _along_y(_a_c2f(ny), nx + 1)
    iyx = _along_x(_a_c2f(nx), ny + 1)
    iyy = _along_y(_a_f2c(ny), nx)
    m["IFD"] = sp.bmat([[ixx, z_cfy], [ixy, z_nfy], [z_nfx, iyx], [z_cfx, iyy]], format="csr")
    # tensor -> faces
    dxx = _along_x(_d_c2f(nx, dx), ny)
    dxy = _along_y(_d_f2c(ny, dy), nx + 1)
    dyx = _along_x(_d_f2c(nx, dx), ny + 1)
    dyy = _along_y(_d_c2f(ny, dy), nx)
    m["DD"] = sp.bmat(
        [[dxx, dxy, None, None], [None, None, dyx, dyy]], format="csr"
    )
    jxx = _along_x(_a_c2f(nx), ny)
    jxy = _along_y(_a_f2c(ny), nx + 1)
    jyx = _along_x(_a_f2c(nx), ny + 1)
    jyy = _along_y(_a_c2f(ny), nx)
    m["IDF"] = sp.bmat([[jxx, jxy, None, None], [None, None, jyx, jyy]], format="csr")
    # node <-> faces
    m["C"] = sp.vstack(
        [_along_y(_d_f2c(ny, dy), nx + 1), -_along_x(_d_f2c(nx, dx), ny + 1)], format="csr"
    )
    m["CT"] = sp.hstack(
        [-_along_y(_d_c2f(ny, dy), nx + 1), _along_x(_d_c2f(nx, dx), ny + 1)], format="csr"
    )
    lx = _d_f2c(nx, dx) @ _d_c2f(nx, dx)
    ly = _d_f2c(ny, dy) @ _d_c2f(ny, dy)
    m["L"] = (_along_x(lx, ny) + _along_y(ly, nx)).tocsr()
    m["LF"] = (m["DD"] @ m["GF"]).tocsr()
    m["LE"] = (-(m["CT"] @ m["C"])).tocsr()
    return m


_CACHE: dict = {}


def matrix(name: str, grid: GridSpec) -> sp.csr_matrix:
    """Sparse matrix of operator ``name`` acting on flattened fields.

    Names: G, D, GF, DD, C, CT, L, LF, LE, ICF, IFC, IFD, IDF.
    """
    mats = _CACHE.get(grid)
    if mats is None:
        if len(_CACHE) > 16:
            _CACHE.clear()
        mats = _CACHE[grid] = _matrices(grid)
    if name not in mats:
        raise ValueError(f"unknown operator {name!r}")
    return mats[name]


def convective(v: FaceField) -> FaceField:
    """N(v) = D_D((I_{F->D} v)^T o I_{F->D} v), the divergence-form advection term."""
    t = f2d(v)
    return tensor_divergence(t.transpose() * t)


_FACE_TYPE = {("C", 0): False, ("C", 1): False, ("Fx", 0): True, ("Fx", 1): False,
              ("Fy", 0): False, ("Fy", 1): True, ("N", 0): True, ("N", 1): True}


def average_matrix(grid: GridSpec, space: str, axis: int) -> sp.csr_matrix:
    """Two-point average of a ``space`` field along ``axis`` (sparse).

    Center-type points average onto face-type points and vice versa, with
    the same zero extension as the matrix-free transforms.
    """
    n_along = grid.nx if axis == 0 else grid.ny
    face_along = _FACE_TYPE[(space, axis)]
    a1d = _a_f2c(n_along) if face_along else _a_c2f(n_along)
    other = 1 - axis
    n_other = (grid.nx if other == 0 else grid.ny) + (1 if _FACE_TYPE[(space, other)] else 0)
    return _along_x(a1d, n_other) if axis == 0 else _along_y(a1d, n_other)
