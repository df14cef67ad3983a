"""Linear solvers: fast Poisson solvers, Krylov, dense probing and Schur reduction.

Poisson solvers act on flattened cell vectors (``i`` fastest) and accept a
trailing batch dimension, so a block of right-hand sides costs one batched
transform.

* :class:`DirichletSolver` -- zero values at the ghost centers, sine
  transform (DST-I) per direction.
* :class:`NeumannSolver` -- zero flux through the box faces, cosine
  transform (DCT-II); the zero mode is set to zero.
* :class:`UnboundedSolver` -- free-space problem via the lattice Green's
  function of the 5-point Laplacian and a zero-padded FFT convolution.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from . import ops
from .grid import CellField, GridSpec


class SolverError(RuntimeError):
    """A linear solve failed to converge or broke down."""


# ---------------------------------------------------------------------------
# fast Poisson solvers
# ---------------------------------------------------------------------------


def _as_grid(f: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, bool]:
    f = np.asarray(f, dtype=float)
    batched = f.ndim == 2
    shape = (grid.nx, grid.ny) + ((f.shape[1],) if batched else ())
    return f.reshape(shape, order="F"), batched


def _flat(u: np.ndarray, grid: GridSpec, batched: bool) -> np.ndarray:
    return u.reshape((grid.n_cells, -1) if batched else grid.n_cells, order="F")


def _eig_sine(n: int, h: float) -> np.ndarray:
    k = np.arange(1, n + 1)
    return -4.0 / h**2 * np.sin(np.pi * k / (2 * (n + 1))) ** 2


def _eig_cosine(n: int, h: float) -> np.ndarray:
    k = np.arange(n)
    return -4.0 / h**2 * np.sin(np.pi * k / (2 * n)) ** 2


class PoissonSolver:
    grid: GridSpec
    kind: str = ""

    def solve(self, f: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, f):
        return self.solve(f)


class DirichletSolver(PoissonSolver):
    """Solve ``L u = f`` with zero ghost values (DST-I in each direction)."""

    kind = "dst"

    def __init__(self, grid: GridSpec):
        self.grid = grid
        lam = _eig_sine(grid.nx, grid.dx)[:, None] + _eig_sine(grid.ny, grid.dy)[None, :]
        self._inv = 1.0 / lam

    def solve(self, f):
        g = self.grid
        a, batched = _as_grid(f, g)
        hat = sfft.dstn(a, type=1, axes=(0, 1), norm="ortho")
        inv = self._inv[..., None] if batched else self._inv
        u = sfft.idstn(hat * inv, type=1, axes=(0, 1), norm="ortho")
        return _flat(u, g, batched)


class NeumannSolver(PoissonSolver):
    """Solve ``L_N u = f`` with zero normal flux; zero mode set to zero.

    ``L_N = D G_N`` where ``G_N`` drops the boundary faces.  ``f`` should
    have zero sum; any mean is discarded.
    """

    kind = "neumann"

    def __init__(self, grid: GridSpec):
        self.grid = grid
        lam = _eig_cosine(grid.nx, grid.dx)[:, None] + _eig_cosine(grid.ny, grid.dy)[None, :]
        lam[0, 0] = 1.0
        inv = 1.0 / lam
        inv[0, 0] = 0.0
        self._inv = inv

    def solve(self, f):
        g = self.grid
        a, batched = _as_grid(f, g)
        hat = sfft.dctn(a, type=2, axes=(0, 1), norm="ortho")
        inv = self._inv[..., None] if batched else self._inv
        u = sfft.idctn(hat * inv, type=2, axes=(0, 1), norm="ortho")
        return _flat(u, g, batched)


# lattice Green's function ---------------------------------------------------


def _gauss_panels(n_panels: int = 34, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, pi] with panels graded geometrically toward 0."""
    edges = np.concatenate([[0.0], np.pi * 0.5 ** np.arange(n_panels, -1, -1)])
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


@functools.lru_cache(maxsize=8)
def lattice_green(size: int) -> np.ndarray:
    """G[m, n] for 0 <= m, n <= size, the unit-spacing lattice Green's function.

    Solves ``sum of 4 neighbours - 4 G = delta`` with ``G[0, 0] = 0``; from
    the 1D integral
    ``G(m, n) = (1/2pi) int_0^pi (1 - exp(-|n| s) cos(m t)) / sinh(s) dt``
    with ``cosh s = 2 - cos t``.  Evaluated with the larger index in the
    exponent so the integrand is damped.
    """
    t, w = _gauss_panels()
    half = 2.0 * np.sin(0.5 * t) ** 2  # cosh(s) - 1
    sinh_s = np.sqrt(half * (half + 2.0))
    s = np.log1p(half + sinh_s)
    out = np.zeros((size + 1, size + 1))
    for n in range(size + 1):
        m = np.arange(n + 1)
        decay = np.exp(-n * s)[None, :]
        num = -np.expm1(-n * s)[None, :] + decay * 2.0 * np.sin(0.5 * m[:, None] * t[None, :]) ** 2
        vals = (num / sinh_s[None, :]) @ w / (2.0 * np.pi)
        out[m, n] = vals
        out[n, m] = vals
    return out


class UnboundedSolver(PoissonSolver):
    """Free-space ``L u = f``: u = dx^2 sum G(x - y) f(y) by padded FFT convolution.

    The source must vanish on the outermost ring of cells.  ``extend``
    returns the solution on a grid padded by one ghost layer.
    """

    kind = "lgf"

    def __init__(self, grid: GridSpec, check_support: bool = True):
        if not np.isclose(grid.dx, grid.dy, rtol=1e-12):
            raise ValueError("the lattice Green's function solver needs dx == dy")
        self.grid = grid
        self.check_support = check_support
        self._kernels = {}

    def _kernel_hat(self, pad: int):
        if pad not in self._kernels:
            g = self.grid
            mx, my = g.nx + pad, g.ny + pad
            table = lattice_green(max(mx, my))
            px, py = 2 * mx, 2 * my
            ix = np.abs(np.fft.fftfreq(px, 1.0 / px)).astype(int)
            iy = np.abs(np.fft.fftfreq(py, 1.0 / py)).astype(int)
            kern = table[np.ix_(np.minimum(ix, mx), np.minimum(iy, my))]
            self._kernels[pad] = sfft.rfftn(kern, axes=(0, 1))
        return self._kernels[pad]

    def _convolve(self, a: np.ndarray, batched: bool, pad: int) -> np.ndarray:
        g = self.grid
        mx, my = g.nx + pad, g.ny + pad
        khat = self._kernel_hat(pad)
        shape = (2 * mx, 2 * my)
        fhat = sfft.rfftn(a, s=shape, axes=(0, 1))
        kh = khat[..., None] if batched else khat
        full = sfft.irfftn(fhat * kh, s=shape, axes=(0, 1))
        return full, shape

    def _check(self, a):
        if self.check_support:
            edge = max(np.abs(a[0]).max(), np.abs(a[-1]).max(), np.abs(a[:, 0]).max(), np.abs(a[:, -1]).max())
            if edge != 0.0:
                raise ValueError("source touches the outer ring of cells")

    def solve(self, f):
        g = self.grid
        a, batched = _as_grid(f, g)
        self._check(a)
        full, _ = self._convolve(a, batched, 0)
        u = g.dx**2 * full[: g.nx, : g.ny]
        return _flat(u, g, batched)

    def extend(self, f) -> np.ndarray:
        """Solution on (nx+2, ny+2) points: the block plus one ghost layer."""
        g = self.grid
        a, batched = _as_grid(f, g)
        self._check(a)
        full, (px, py) = self._convolve(a, batched, 1)
        rows = np.r_[px - 1, 0 : g.nx + 1]
        cols = np.r_[py - 1, 0 : g.ny + 1]
        return g.dx**2 * full[np.ix_(rows, cols)]


def make_poisson_solver(grid: GridSpec, kind: str) -> PoissonSolver:
    kinds = {"dst": DirichletSolver, "lgf": UnboundedSolver, "neumann": NeumannSolver}
    if kind not in kinds:
        raise ValueError(f"unknown Poisson solver {kind!r}")
    return kinds[kind](grid)


def poisson_dirichlet(rhs: CellField, boundary: Optional[Callable] = None) -> CellField:
    """u with ``L u = rhs + b``, b carrying ghost-center data ``boundary(x, y)``."""
    g = rhs.grid
    f = rhs
    if boundary is not None:
        f = rhs + ops.dirichlet_boundary_term(g, boundary)
    return CellField.from_flat(g, DirichletSolver(g).solve(f.flat()))


def poisson_unbounded(rhs: CellField) -> CellField:
    g = rhs.grid
    return CellField.from_flat(g, UnboundedSolver(g).solve(rhs.flat()))


def unbounded_laplacian(solver: UnboundedSolver, f: np.ndarray) -> np.ndarray:
    """Apply the 5-point Laplacian to the free-space solution, using ghost values."""
    g = solver.grid
    ext = solver.extend(f)
    lap = (
        (ext[2:, 1:-1] - 2 * ext[1:-1, 1:-1] + ext[:-2, 1:-1]) / g.dx**2
        + (ext[1:-1, 2:] - 2 * ext[1:-1, 1:-1] + ext[1:-1, :-2]) / g.dy**2
    )
    return _flat(lap, g, lap.ndim == 3)


# ---------------------------------------------------------------------------
# Krylov, probing, conditioning
# ---------------------------------------------------------------------------


def bicgstab(op, rhs: np.ndarray, tol: float = 1e-10, maxiter: Optional[int] = None):
    """BiCGSTAB (scipy) returning ``(x, iterations)``; raises on failure.

    Convergence means ``||op x - rhs|| <= tol ||rhs||``, checked on the true
    residual after the solve.
    """
    op = spla.aslinearoperator(op)
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.bicgstab(op, rhs, rtol=tol, atol=0.0, maxiter=maxiter, callback=cb)
    res = np.linalg.norm(op.matvec(x) - rhs)
    if info < 0:
        raise SolverError(f"BiCGSTAB breakdown (info={info})")
    if info > 0 or not np.isfinite(res) or res > tol * bnorm * (1 + 1e-6):
        raise SolverError(f"BiCGSTAB did not converge: residual {res / bnorm:.3e} after {count[0]} iterations")
    return x, count[0]


def assemble_dense(op) -> np.ndarray:
    """Dense matrix of a linear operator by applying it to unit vectors."""
    op = spla.aslinearoperator(op)
    n = op.shape[1]
    out = np.empty(op.shape)
    eye = np.eye(n)
    step = 256
    for k in range(0, n, step):
        out[:, k : k + step] = op.matmat(eye[:, k : k + step])
    return out


def condition_number(mat: np.ndarray) -> float:
    """sigma_max / sigma_min from the SVD; infinity for a singular matrix."""
    mat = np.asarray(mat, dtype=float)
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0:
        return 1.0
    return float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])


# ---------------------------------------------------------------------------
# block systems and Schur reduction
# ---------------------------------------------------------------------------


@dataclass
class BlockSystem:
    """``[[A, B1T], [B2, -C]] (x, y) = (r1, r2)``.

    ``A`` applies the (1,1) block, ``A_solve`` its inverse; both accept
    vectors or column blocks.  ``A`` may be None when only the inverse is
    available (free-space solves); the residual then uses the first block
    row in the form ``x - A^{-1}(r1 - B1T y)``.  ``B1T``, ``B2`` and ``C``
    are anything that supports ``@`` (sparse or dense matrices, scipy
    LinearOperators).
    """

    A: Optional[Callable[[np.ndarray], np.ndarray]]
    A_solve: Callable[[np.ndarray], np.ndarray]
    B1T: object
    B2: object
    C: object

    @property
    def n_y(self) -> int:
        return self.B2.shape[0]

    def schur_apply(self, y: np.ndarray) -> np.ndarray:
        return -(self.C @ y) - self.B2 @ self.A_solve(self.B1T @ y)

    def schur_dense(self, chunk: int = 512) -> np.ndarray:
        """S = -C - B2 A^{-1} B1T, assembled column block by column block."""
        m = self.n_y
        out = np.empty((m, m))
        for k in range(0, m, chunk):
            cols = np.eye(m)[:, k : k + chunk]
            b1 = self.B1T @ cols
            b1 = b1.toarray() if hasattr(b1, "toarray") else np.asarray(b1)
            out[:, k : k + chunk] = -(self.C @ cols) - np.asarray(self.B2 @ self.A_solve(b1))
        return out

    def residual(self, x, y, r1, r2) -> float:
        """Relative residual of the monolithic system."""
        bot = self.B2 @ x - self.C @ y - r2
        if self.A is None:
            top = x - self.A_solve(r1 - self.B1T @ y)
            den = np.sqrt(np.linalg.norm(x) ** 2 + np.linalg.norm(r2) ** 2)
        else:
            top = self.A(x) + self.B1T @ y - r1
            den = np.sqrt(np.linalg.norm(r1) ** 2 + np.linalg.norm(r2) ** 2)
        num = np.sqrt(np.linalg.norm(top) ** 2 + np.linalg.norm(bot) ** 2)
        return float(num / den) if den > 0 else float(num)


class SchurOperator:
    """S of a block system: matrix-free apply plus dense assembly on demand."""

    def __init__(self, system: BlockSystem):
        self.system = system
        m = system.n_y
        self.shape = (m, m)
        self._dense = None

    def apply(self, y):
        return self.system.schur_apply(y)

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.apply, dtype=float)

    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.system.schur_dense()
        return self._dense


@dataclass
class Border:
    """Bordering ``[[S, Z], [W, 0]]`` that absorbs near-null modes of ``S``.

    ``cols`` (m x k) adds one free multiplier per mode to the equations it
    touches; ``rows`` (k x m) adds the matching gauge conditions ``W y = 0``.
    Both are scaled by ``scale`` when the bordered matrix is built so the
    border does not dominate the condition number.
    """

    cols: np.ndarray
    rows: np.ndarray
    scale: float = 1.0

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    def dense(self, S: np.ndarray) -> np.ndarray:
        z = np.zeros((self.k, self.k))
        return np.block([[S, self.scale * self.cols], [self.scale * self.rows, z]])

    def operator(self, op) -> spla.LinearOperator:
        m = op.shape[0]

        def matvec(v):
            v = np.ravel(v)
            y, lam = v[:m], v[m:]
            return np.concatenate([op @ y + self.scale * (self.cols @ lam), self.scale * (self.rows @ y)])

        return spla.LinearOperator((m + self.k, m + self.k), matvec=matvec, dtype=float)


class DenseSchurSolver:
    """LU factorization of a dense Schur matrix.

    ``replace`` maps a row index to a new row vector; the matching entry of
    every right-hand side is replaced by zero.  ``border`` instead appends
    multipliers and gauge rows (see :class:`Border`); the multipliers of the
    last solve are kept in ``multipliers``.
    """

    def __init__(self, S: np.ndarray, replace: Optional[dict] = None, border: Optional[Border] = None):
        if replace and border is not None:
            raise ValueError("use either row replacement or a border, not both")
        S = np.array(S, dtype=float)
        self.n = S.shape[0]
        self.rows = sorted(replace) if replace else []
        for r in self.rows:
            S[r] = replace[r]
        self.border = border
        self.matrix = border.dense(S) if border is not None else S
        self.multipliers = np.zeros(0)
        self._lu = sla.lu_factor(self.matrix) if self.matrix.size else None

    def solve(self, rhs):
        rhs = np.array(rhs, dtype=float)
        if rhs.size == 0:
            return rhs
        if self.rows:
            rhs[self.rows] = 0.0
        if self.border is None:
            return sla.lu_solve(self._lu, rhs)
        pad = np.zeros((self.border.k,) + rhs.shape[1:])
        out = sla.lu_solve(self._lu, np.concatenate([rhs, pad]))
        self.multipliers = out[self.n:]
        return out[: self.n]


class KrylovSchurSolver:
    """BiCGSTAB on the matrix-free Schur operator, optionally bordered."""

    def __init__(self, op, tol: float = 1e-10, maxiter: Optional[int] = None, border: Optional[Border] = None):
        self.n = op.shape[0]
        self.border = border
        self.op = border.operator(op) if border is not None else op
        self.tol = tol
        self.maxiter = maxiter
        self.iterations = 0
        self.multipliers = np.zeros(0)

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self.border is not None:
            rhs = np.concatenate([rhs, np.zeros(self.border.k)])
        x, it = bicgstab(self.op, rhs, self.tol, self.maxiter)
        self.iterations = it
        self.multipliers = x[self.n:]
        return x[: self.n]


def make_schur_solver(system: BlockSystem, kind: str = "lu", tol: float = 1e-10, replace=None,
                      border: Optional[Border] = None):
    if kind == "lu":
        return DenseSchurSolver(SchurOperator(system).dense(), replace, border)
    if kind == "bicgstab":
        if replace:
            raise ValueError("row replacement needs the dense solver")
        return KrylovSchurSolver(SchurOperator(system).as_linear_operator(), tol, border=border)
    raise ValueError(f"unknown Schur solver {kind!r}")


def schur_solve(system: BlockSystem, schur_solver, r1, r2):
    """Block elimination: ``A x* = r1``; ``S y = r2 - B2 x*``; ``x = x* - A^{-1} B1T y``."""
    if isinstance(schur_solver, str):
        schur_solver = make_schur_solver(system, schur_solver)
    xs = system.A_solve(r1)
    y = schur_solver.solve(r2 - system.B2 @ xs)
    x = xs - system.A_solve(system.B1T @ y)
    return x, y
