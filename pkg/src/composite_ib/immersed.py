"""Immersed-boundary markers and the regularization / interpolation family.

Surface data are plain arrays: scalars ``(N,)``, vectors ``(N, 2)`` and
tensors ``(N, 2, 2)``.  A :class:`Transfer` holds the sparse delta matrices
of one body on one grid and applies every spreading (R) and interpolation
(E) operator:

* ``R_C``, ``R_F``: Riemann sums ``sum_l d_l data_l dS_l`` onto cells or faces.
* ``R_F1n``: as ``R_F`` with the extra weight ``n_l . (x - X_l)``.
* ``R_IFT``, ``R_IFT1n``: tensor data onto the tensor space using face
  deltas averaged to the tensor locations (component (a, b) uses the
  face-``b`` delta averaged along direction ``a``).
* ``E_*``: the matching ``dx dy sum_grid d (weight) field`` interpolations;
  ``E_C1n_zeromean`` subtracts the marker average.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import ops
from .ddf import DEFAULT_KERNEL, Kernel, check_interior, get_kernel, weights_1d
from .grid import CellField, FaceField, GridSpec, TensorField

BODY_COLUMNS = ("X", "Y", "nx", "ny", "tx", "ty", "dS", "Xdot_x", "Xdot_y", "curve")


@dataclass(frozen=True, eq=False)
class Body:
    positions: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    areas: np.ndarray
    velocity: np.ndarray = None
    curve: np.ndarray = None

    def __post_init__(self):
        n = len(self.areas)
        if self.velocity is None:
            object.__setattr__(self, "velocity", np.zeros((n, 2)))
        if self.curve is None:
            object.__setattr__(self, "curve", np.zeros(n, dtype=int))
        for name in ("positions", "normals", "tangents", "velocity"):
            if np.shape(getattr(self, name)) != (n, 2):
                raise ValueError(f"{name} must have shape ({n}, 2)")
        if np.any(self.areas <= 0):
            raise ValueError("marker areas must be positive")
        if n:
            if not np.allclose(np.linalg.norm(self.normals, axis=1), 1.0, atol=1e-12):
                raise ValueError("normals must be unit vectors")
            if not np.allclose(np.linalg.norm(self.tangents, axis=1), 1.0, atol=1e-12):
                raise ValueError("tangents must be unit vectors")
            if not np.allclose(np.sum(self.normals * self.tangents, axis=1), 0.0, atol=1e-12):
                raise ValueError("normals and tangents must be orthogonal")

    @property
    def n_markers(self) -> int:
        return len(self.areas)

    @property
    def n_curves(self) -> int:
        return int(np.unique(self.curve).size) if self.n_markers else 0

    def normal_velocity(self) -> np.ndarray:
        """Xdot_n = n . Xdot per marker."""
        return np.sum(self.normals * self.velocity, axis=1)


def circle_body(center=(0.0, 0.0), radius: float = 1.0, n: int = 64, orientation: str = "outward",
                angular_velocity: float = 0.0, curve: int = 0, phase: float = 0.0) -> Body:
    """Equispaced markers on a circle.

    ``orientation`` sets whether normals point away from or toward the
    center; tangents are normals rotated by +90 degrees.  Marker velocity
    is rigid rotation at ``angular_velocity`` about the center.
    """
    if n < 8:
        raise ValueError("a circle needs at least 8 markers")
    if orientation not in ("outward", "inward"):
        raise ValueError("orientation must be 'outward' or 'inward'")
    theta = phase + 2.0 * np.pi * np.arange(n) / n
    radial = np.column_stack([np.cos(theta), np.sin(theta)])
    pos = np.asarray(center, dtype=float) + radius * radial
    normals = radial if orientation == "outward" else -radial
    tangents = np.column_stack([-normals[:, 1], normals[:, 0]])
    vel = angular_velocity * radius * np.column_stack([-np.sin(theta), np.cos(theta)])
    return Body(pos, normals, tangents, np.full(n, 2.0 * np.pi * radius / n), vel,
                np.full(n, curve, dtype=int))


def markers_for_ratio(radius: float, ds_dx: float, dx: float) -> int:
    """Marker count giving spacing ``ds_dx * dx`` on a circle."""
    return int(round(2.0 * np.pi * radius / (ds_dx * dx)))


def concat_bodies(*bodies: Body) -> Body:
    """Join bodies; curve labels are renumbered so each input keeps its own."""
    curves, offset = [], 0
    for b in bodies:
        curves.append(b.curve - b.curve.min() + offset if b.n_markers else b.curve)
        offset = (curves[-1].max() + 1) if b.n_markers else offset
    return Body(
        np.concatenate([b.positions for b in bodies]),
        np.concatenate([b.normals for b in bodies]),
        np.concatenate([b.tangents for b in bodies]),
        np.concatenate([b.areas for b in bodies]),
        np.concatenate([b.velocity for b in bodies]),
        np.concatenate(curves),
    )


def empty_body() -> Body:
    z = np.zeros((0, 2))
    return Body(z, z, z, np.zeros(0), z, np.zeros(0, dtype=int))


def write_body(body: Body, path) -> None:
    """Plain-text table, one marker per line, columns :data:`BODY_COLUMNS`."""
    table = np.column_stack([body.positions, body.normals, body.tangents, body.areas,
                             body.velocity, body.curve])
    np.savetxt(path, table, header=" ".join(BODY_COLUMNS), fmt="%.17g")


def read_body(path) -> Body:
    """Read a table written by :func:`write_body` (the curve column is optional)."""
    table = np.atleast_2d(np.loadtxt(Path(path), ndmin=2))
    if table.shape[1] not in (9, 10):
        raise ValueError(f"expected 9 or 10 columns, got {table.shape[1]}")
    curve = table[:, 9].astype(int) if table.shape[1] == 10 else None
    return Body(table[:, 0:2], table[:, 2:4], table[:, 4:6], table[:, 6], table[:, 7:9], curve)


def surface_outer(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Per-marker outer product ``w_l u_l^T``, shape (N, 2, 2)."""
    w, u = np.asarray(w, dtype=float), np.asarray(u, dtype=float)
    if w.shape != u.shape:
        raise ValueError("outer product needs matching marker counts")
    return w[:, :, None] * u[:, None, :]


def scalar_to_vector(s: np.ndarray) -> np.ndarray:
    """I_{S->V}: copy a surface scalar into both vector slots."""
    s = np.asarray(s, dtype=float)
    return np.column_stack([s, s])


# ---------------------------------------------------------------------------
# sparse delta matrices
# ---------------------------------------------------------------------------


def _line(grid: GridSpec, space: str, axis: int):
    face = ops._FACE_TYPE[(space, axis)]
    h = grid.dx if axis == 0 else grid.dy
    n = (grid.nx if axis == 0 else grid.ny) + (1 if face else 0)
    first = grid.origin[axis] + (0.0 if face else 0.5 * h)
    return first, h, n


def delta_matrix(grid: GridSpec, body: Body, space: str, kernel: Kernel = DEFAULT_KERNEL) -> sp.csr_matrix:
    """Sparse (points of ``space``) x (markers) matrix of delta values d."""
    n_mark = body.n_markers
    shape = grid.shape(space)
    if n_mark == 0:
        return sp.csr_matrix((shape[0] * shape[1], 0))
    fx, hx, nx = _line(grid, space, 0)
    fy, hy, ny = _line(grid, space, 1)
    sx, wx = weights_1d(kernel, fx, hx, nx, body.positions[:, 0])
    sy, wy = weights_1d(kernel, fy, hy, ny, body.positions[:, 1])
    wdt = wx.shape[1]
    ii = sx[:, None, None] + np.arange(wdt)[None, :, None]
    jj = sy[:, None, None] + np.arange(wdt)[None, None, :]
    vals = wx[:, :, None] * wy[:, None, :]
    ii, jj = np.broadcast_to(ii, vals.shape), np.broadcast_to(jj, vals.shape)
    cols = np.broadcast_to(np.arange(n_mark)[:, None, None], vals.shape)
    keep = vals != 0.0
    rows = ii[keep] + jj[keep] * shape[0]
    return sp.csr_matrix((vals[keep], (rows, cols[keep])), shape=(shape[0] * shape[1], n_mark))


def _distance_weighted(mat: sp.csr_matrix, grid: GridSpec, space: str, body: Body) -> sp.csr_matrix:
    """Multiply entry (p, l) by n_l . (x_p - X_l)."""
    coo = mat.tocoo()
    xs, ys = grid.coords(space)
    xp = xs.ravel(order="F")[coo.row]
    yp = ys.ravel(order="F")[coo.row]
    n, X = body.normals[coo.col], body.positions[coo.col]
    w = n[:, 0] * (xp - X[:, 0]) + n[:, 1] * (yp - X[:, 1])
    return sp.csr_matrix((coo.data * w, (coo.row, coo.col)), shape=mat.shape)


@dataclass
class Transfer:
    """Spreading and interpolation operators for one body on one grid."""

    grid: GridSpec
    body: Body
    kernel: Kernel = DEFAULT_KERNEL
    _m: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.kernel = get_kernel(self.kernel)
        if self.body.n_markers:
            check_interior(self.kernel, self.grid, self.body.positions)
        g, b, k = self.grid, self.body, self.kernel
        m = self._m
        for s in ("C", "Fx", "Fy"):
            m[s] = delta_matrix(g, b, s, k)
            m[s + "n"] = _distance_weighted(m[s], g, s, b)
        # tensor-space deltas: face deltas averaged to tensor locations
        tens = {
            "xx": ("C", ops.average_matrix(g, "Fx", 0) @ m["Fx"]),
            "xy": ("N", ops.average_matrix(g, "Fy", 0) @ m["Fy"]),
            "yx": ("N", ops.average_matrix(g, "Fx", 1) @ m["Fx"]),
            "yy": ("C", ops.average_matrix(g, "Fy", 1) @ m["Fy"]),
        }
        for comp, (space, mat) in tens.items():
            m["T" + comp] = mat.tocsr()
            m["T" + comp + "n"] = _distance_weighted(mat.tocsr(), g, space, b)

    # raw matrices -------------------------------------------------------
    def matrix(self, key: str) -> sp.csr_matrix:
        """Delta matrix by key: C, Fx, Fy, Txx, Txy, Tyx, Tyy (+ 'n' suffix)."""
        return self._m[key]

    # regularization -------------------------------------------------------
    def R_C(self, s: np.ndarray) -> CellField:
        return CellField.from_flat(self.grid, self._m["C"] @ (np.asarray(s) * self.body.areas))

    def R_C1n(self, s: np.ndarray) -> CellField:
        return CellField.from_flat(self.grid, self._m["Cn"] @ (np.asarray(s) * self.body.areas))

    def R_F(self, v: np.ndarray) -> FaceField:
        return self._faces(v, "")

    def R_F1n(self, v: np.ndarray) -> FaceField:
        return self._faces(v, "n")

    def _faces(self, v, suffix):
        a = self.body.areas
        v = np.asarray(v, dtype=float)
        return FaceField(
            np.reshape(self._m["Fx" + suffix] @ (v[:, 0] * a), self.grid.shape_fx, order="F"),
            np.reshape(self._m["Fy" + suffix] @ (v[:, 1] * a), self.grid.shape_fy, order="F"),
            grid=self.grid,
        )

    def R_IFT(self, t: np.ndarray) -> TensorField:
        return self._tensor(t, "")

    def R_IFT1n(self, t: np.ndarray) -> TensorField:
        return self._tensor(t, "n")

    def _tensor(self, t, suffix):
        g, a = self.grid, self.body.areas
        t = np.asarray(t, dtype=float)

        def comp(key, ia, ib, shape):
            return np.reshape(self._m["T" + key + suffix] @ (t[:, ia, ib] * a), shape, order="F")

        return TensorField(
            comp("xx", 0, 0, g.shape_c), comp("xy", 0, 1, g.shape_n),
            comp("yx", 1, 0, g.shape_n), comp("yy", 1, 1, g.shape_c), grid=g,
        )

    def regularize(self, kind: str, data):
        fn = {"R_C": self.R_C, "R_C1n": self.R_C1n, "R_F": self.R_F, "R_F1n": self.R_F1n,
              "R_IFT": self.R_IFT, "R_IFT1n": self.R_IFT1n}.get(kind)
        if fn is None:
            raise ValueError(f"unknown regularization {kind!r}")
        return fn(data)

    # interpolation ----------------------------------------------------------
    @property
    def _vol(self) -> float:
        return self.grid.dx * self.grid.dy

    def E_C(self, u: CellField) -> np.ndarray:
        return self._vol * (self._m["C"].T @ u.flat())

    def E_C1n(self, u: CellField) -> np.ndarray:
        return self._vol * (self._m["Cn"].T @ u.flat())

    def E_C1n_zeromean(self, u: CellField) -> np.ndarray:
        out = self.E_C1n(u)
        return out - out.mean() if out.size else out

    def E_F(self, v: FaceField) -> np.ndarray:
        return self._vol * np.column_stack(
            [self._m["Fx"].T @ v.x.ravel(order="F"), self._m["Fy"].T @ v.y.ravel(order="F")]
        )

    def E_F1n(self, v: FaceField) -> np.ndarray:
        return self._vol * np.column_stack(
            [self._m["Fxn"].T @ v.x.ravel(order="F"), self._m["Fyn"].T @ v.y.ravel(order="F")]
        )

    def interpolate(self, kind: str, fld):
        fn = {"E_C": self.E_C, "E_F": self.E_F, "E_C1n": self.E_C1n, "E_F1n": self.E_F1n,
              "E_C1n_zeromean": self.E_C1n_zeromean}.get(kind)
        if fn is None:
            raise ValueError(f"unknown interpolation {kind!r}")
        return fn(fld)

    # sparse forms used by the solvers ------------------------------------------
    def spread_faces_matrix(self, suffix: str = "") -> sp.csr_matrix:
        """Faces x (2N) matrix of R_F (or R_F1n) acting on [v_x; v_y] marker data."""
        a = sp.diags(self.body.areas)
        return sp.block_diag([self._m["Fx" + suffix] @ a, self._m["Fy" + suffix] @ a], format="csr")

    def interp_faces_matrix(self, suffix: str = "") -> sp.csr_matrix:
        """(2N) x faces matrix of E_F (or E_F1n) returning [v_x; v_y] marker data."""
        return (self._vol * sp.block_diag([self._m["Fx" + suffix].T, self._m["Fy" + suffix].T])).tocsr()


def adjoint_check(transfer: Transfer, kind: str, rng: np.random.Generator, draws: int = 5) -> float:
    """Largest mismatch of ``dx dy <R data, f>`` and ``<dS data, E f>``.

    ``kind`` is one of "C", "C1n", "F", "F1n".
    """
    g, b = transfer.grid, transfer.body
    worst = 0.0
    for _ in range(draws):
        if kind in ("C", "C1n"):
            data = rng.standard_normal(b.n_markers)
            f = CellField(rng.standard_normal(g.shape_c), grid=g)
            spread = transfer.R_C(data) if kind == "C" else transfer.R_C1n(data)
            interp = transfer.E_C(f) if kind == "C" else transfer.E_C1n(f)
            lhs = g.dx * g.dy * float(spread.flat() @ f.flat())
            rhs = float(np.sum(b.areas * data * interp))
        elif kind in ("F", "F1n"):
            data = rng.standard_normal((b.n_markers, 2))
            f = FaceField(rng.standard_normal(g.shape_fx), rng.standard_normal(g.shape_fy), grid=g)
            spread = transfer.R_F(data) if kind == "F" else transfer.R_F1n(data)
            interp = transfer.E_F(f) if kind == "F" else transfer.E_F1n(f)
            lhs = g.dx * g.dy * float(spread.flat() @ f.flat())
            rhs = float(np.sum(b.areas[:, None] * data * interp))
        else:
            raise ValueError(f"unknown pair {kind!r}")
        worst = max(worst, abs(lhs - rhs))
    return worst
