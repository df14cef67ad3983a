"""Incompressible Navier-Stokes with immersed boundaries: composite and prototypical.

One explicit stage with coefficient ``K`` solves the saddle system::

    [ I    dt G   B_v   B_p ] [ v    ]   [ r       ]
    [ D    0      B_c   0   ] [ p    ] = [ b2      ]
    [ E_F  0     -H_F   0   ] [ [v^n]]   [ v_Gamma ]
    [ 0    E~    0     -H_C ] [ [p]  ]   [ 0       ]

with ``r = v + K dt (-N(v) + L_F v / Re + b1)`` and

* ``B_v = dt R_{F,1n} diag(Xdot_n) + dt/Re (I_{D->F} R_IFT(T2) + D_D R_IFT1n(T1))``
* ``B_p = -dt R_F diag(n) I_{S->V}``, ``B_c = -I_{F->C} R_{F,1n} diag(n)``
* ``H_F = diag(E_{F,1n} H+_F)``, ``H_C = diag(E_{C,1n} H+_C)``,
  ``E~ = E_{C,1n}`` with the marker mean removed.

``T2`` and ``T1`` carry the tensor data ``[v^n]_a n_b^2`` and
``[v^n]_a n_b`` (row ``a`` of the forcing follows velocity component
``a``).  The prototypical system keeps only ``dt R_F f`` in the first row
and ``E_F v = v_Gamma``.

The (1,1) block ``[[I, dt G], [D, 0]]`` is inverted by projection with a
cosine-transform pressure solve.  Normal velocities on the box boundary
are held at zero and the pressure gradient drops those faces.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import ops
from .ddf import DEFAULT_KERNEL, Kernel
from .grid import CellField, FaceField, GridSpec, square_grid
from .immersed import Body, Transfer, circle_body, concat_bodies, markers_for_ratio
from .indicator import IndicatorSet, build_indicator
from .linsolve import (BlockSystem, Border, NeumannSolver, SchurOperator, SolverError, condition_number,
                       make_schur_solver, schur_solve)

convective = ops.convective

STEP_TOL = 1e-8


class SteadyStateError(RuntimeError):
    """Time stepping diverged or did not reach steady state."""


# ---------------------------------------------------------------------------
# configuration and state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NsConfig:
    re: float = 10.0
    dt: float = 0.01
    k: float = 1.0
    steady_tol: float = 1e-8
    max_steps: int = 200000
    formulation: str = "composite"
    schur: str = "lu"
    gauge: str = "bordered"
    cfl_max: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.formulation not in ("composite", "prototypical"):
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.schur not in ("lu", "bicgstab"):
            raise ValueError(f"unknown Schur solver {self.schur!r}")
        if self.gauge not in ("bordered", "replace"):
            raise ValueError(f"unknown gauge treatment {self.gauge!r}")


def default_dt(grid: GridSpec, re: float, vmax: float = 1.0, factor: float = 0.2, cfl: float = 0.5) -> float:
    """Explicit-diffusion step ``factor * dx^2 * Re`` capped by the convective CFL."""
    h = min(grid.dx, grid.dy)
    dt = factor * h * h * re
    if vmax > 0:
        dt = min(dt, cfl * h / vmax)
    return dt


@dataclass(frozen=True, eq=False)
class NsState:
    v: FaceField
    p: CellField
    t: float = 0.0
    jump_v: Optional[np.ndarray] = None
    jump_p: Optional[np.ndarray] = None
    forcing: Optional[np.ndarray] = None
    step: int = 0
    # per-marker constant absorbed by the pressure-jump relation (bordered gauge)
    relation_shift: Optional[np.ndarray] = None

    @classmethod
    def rest(cls, grid: GridSpec) -> "NsState":
        return cls(FaceField.zeros(grid), CellField.zeros(grid))


@dataclass
class NsProblem:
    """Grid, body with prescribed marker velocity ``v_gamma`` and indicator fields."""

    grid: GridSpec
    body: Body
    v_gamma: np.ndarray
    indicator: Optional[IndicatorSet] = None
    kernel: Kernel = DEFAULT_KERNEL
    exterior_value: float = 1.0
    transfer: Optional[Transfer] = None

    def __post_init__(self):
        if self.body.n_markers:
            if self.transfer is None:
                self.transfer = Transfer(self.grid, self.body, self.kernel)
            if self.indicator is None:
                self.indicator = build_indicator(self.body, self.grid, "dst", self.exterior_value,
                                                 transfer=self.transfer)


# ---------------------------------------------------------------------------
# grid-level pieces
# ---------------------------------------------------------------------------


def interior_face_mask(grid: GridSpec) -> np.ndarray:
    """1 on faces whose normal velocity is free, 0 on the box-boundary normal faces."""
    mx = np.ones(grid.shape_fx)
    mx[0, :] = mx[-1, :] = 0.0
    my = np.ones(grid.shape_fy)
    my[:, 0] = my[:, -1] = 0.0
    return np.concatenate([mx.ravel(order="F"), my.ravel(order="F")])


def momentum_rhs(state: NsState, config: NsConfig, b1: Optional[FaceField] = None) -> FaceField:
    """r = v + K dt (-N(v) + L_F v / Re + b1), zero on box-boundary normal faces."""
    v = state.v
    tend = ops.laplacian_face(v) * (1.0 / config.re) - convective(v)
    if b1 is not None:
        tend = tend + b1
    r = v + tend * (config.k * config.dt)
    m = interior_face_mask(v.grid)
    return FaceField.from_flat(v.grid, r.flat() * m)


class Projection:
    """Inverse of ``[[I, dt G_N], [D, 0]]`` by a pressure Poisson solve."""

    def __init__(self, grid: GridSpec, dt: float):
        self.grid = grid
        self.dt = dt
        self.mask = interior_face_mask(grid)
        self.G = ops.matrix("G", grid)
        self.GN = (sp.diags(self.mask) @ self.G).tocsr()
        self.D = ops.matrix("D", grid)
        self.poisson = NeumannSolver(grid)
        self.nf = grid.n_faces

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        r, b = rhs[: self.nf], rhs[self.nf:]
        p = self.poisson.solve(self.D @ r - b) / self.dt
        v = r - self.dt * (self.GN @ p)
        return np.concatenate([v, p], axis=0)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v, p = x[: self.nf], x[self.nf:]
        return np.concatenate([v + self.dt * (self.GN @ p), self.D @ v], axis=0)


def convective_forcing(v_plus: FaceField, v_minus: FaceField, ind: IndicatorSet) -> tuple[FaceField, FaceField]:
    """The two parts of the convective interface term dropped from the momentum equation.

    Returns ``(I_{D->F}(G_F H+_F o (q+ - q-)), D_D(H+_D o H-_D o q_d))`` with
    ``q = (I_{F->D} v)^T o I_{F->D} v`` and ``q_d`` built from ``v+ - v-``.
    The dropped term is the first minus the second; only a diagnostic.
    """
    ip, im, idf = ops.f2d(v_plus), ops.f2d(v_minus), ops.f2d(v_plus - v_minus)
    first = ops.d2f(ops.face_gradient(ind.plus_f) * (ip.transpose() * ip - im.transpose() * im))
    second = ops.tensor_divergence(ind.plus_d * ind.minus_d * (idf.transpose() * idf))
    return first, second


# ---------------------------------------------------------------------------
# forcing blocks
# ---------------------------------------------------------------------------


def _tensor_spread_matrix(tr: Transfer, suffix: str) -> sp.csr_matrix:
    """Tensor-space x (4N) matrix of R_IFT(+1n) acting on [T_xx; T_xy; T_yx; T_yy]."""
    a = sp.diags(tr.body.areas)
    return sp.block_diag([tr.matrix("T" + c + suffix) @ a for c in ("xx", "xy", "yx", "yy")], format="csr")


def _tensor_data(normals: np.ndarray, power: int) -> sp.csr_matrix:
    """(4N) x (2N): [J_x; J_y] -> T with T_ab = J_a n_b^power."""
    dx_, dy_ = sp.diags(normals[:, 0] ** power), sp.diags(normals[:, 1] ** power)
    z = sp.csr_matrix(dx_.shape)
    return sp.bmat([[dx_, z], [dy_, z], [z, dx_], [z, dy_]], format="csr")


def _diag2(w: np.ndarray) -> sp.csr_matrix:
    return sp.block_diag([sp.diags(w), sp.diags(w)], format="csr")


@dataclass
class ForcingBlocks:
    B_v: sp.csr_matrix  # faces x 2N
    B_p: sp.csr_matrix  # faces x N
    B_c: sp.csr_matrix  # cells x 2N
    E_F: sp.csr_matrix  # 2N x faces
    E_p: sp.csr_matrix  # N x cells (zero-mean E_C1n)
    h_f: np.ndarray  # 2N
    h_c: np.ndarray  # N
    R_F: sp.csr_matrix  # faces x 2N
    E_C1n: sp.csr_matrix  # N x cells


def forcing_blocks_composite(problem: NsProblem, config: NsConfig) -> ForcingBlocks:
    g, body, tr, ind = problem.grid, problem.body, problem.transfer, problem.indicator
    dt, re = config.dt, config.re
    n = body.normals
    rf = tr.spread_faces_matrix("")
    rf1n = tr.spread_faces_matrix("n")
    visc = (ops.matrix("IDF", g) @ _tensor_spread_matrix(tr, "") @ _tensor_data(n, 2)
            + ops.matrix("DD", g) @ _tensor_spread_matrix(tr, "n") @ _tensor_data(n, 1))
    b_v = dt * rf1n @ _diag2(body.normal_velocity()) + (dt / re) * visc
    b_p = -dt * rf @ sp.vstack([sp.diags(n[:, 0]), sp.diags(n[:, 1])])
    b_c = -ops.matrix("IFC", g) @ rf1n @ sp.block_diag([sp.diags(n[:, 0]), sp.diags(n[:, 1])])
    e_c1n = (g.cell_volume * tr.matrix("Cn").T).tocsr()
    N = body.n_markers
    centering = sp.identity(N) - sp.csr_matrix(np.full((N, N), 1.0 / N))
    e_p = (centering @ e_c1n).tocsr()
    h_f = tr.E_F1n(ind.plus_f).ravel(order="F")
    h_c = tr.E_C1n(ind.plus_c)
    return ForcingBlocks(b_v.tocsr(), b_p.tocsr(), b_c.tocsr(), tr.interp_faces_matrix(""), e_p, h_f, h_c,
                         rf, e_c1n)


def _block_system(problem: NsProblem, config: NsConfig, proj: Projection):
    g = problem.grid
    nc = g.n_cells
    N = problem.body.n_markers
    if config.formulation == "composite":
        fb = forcing_blocks_composite(problem, config)
        b1t = sp.bmat([[fb.B_v, fb.B_p], [fb.B_c, None]], format="csr")
        b2 = sp.bmat([[fb.E_F, None], [None, fb.E_p]], format="csr")
        C = sp.diags(np.concatenate([fb.h_f, fb.h_c])).tocsr()
    else:
        tr = problem.transfer
        fb = None
        rf = tr.spread_faces_matrix("")
        b1t = sp.vstack([config.dt * rf, sp.csr_matrix((nc, 2 * N))]).tocsr()
        b2 = sp.hstack([tr.interp_faces_matrix(""), sp.csr_matrix((2 * N, nc))]).tocsr()
        C = sp.csr_matrix((2 * N, 2 * N))
    return BlockSystem(proj.apply, proj.solve, b1t, b2, C), fb


def _curve_indices(body: Body):
    return [np.flatnonzero(body.curve == c) for c in np.unique(body.curve)]


def gauge_rows(body: Body) -> dict:
    """Zero-mean rows for the pressure-jump block, one per closed curve (row replacement)."""
    N = body.n_markers
    rows = {}
    for idx in _curve_indices(body):
        row = np.zeros(3 * N)
        row[2 * N + idx] = 1.0 / idx.size
        rows[2 * N + int(idx[0])] = row
    return rows


def pressure_border(body: Body, scale: float = 1.0) -> Border:
    """Per-curve constant in the pressure-jump relation plus per-curve zero mean of [p].

    Column ``k`` lets the relation on curve ``k`` hold up to a constant and
    row ``k`` fixes the mean of [p] on that curve, so no single marker's
    equation is dropped.
    """
    N = body.n_markers
    curves = _curve_indices(body)
    cols = np.zeros((3 * N, len(curves)))
    for k, idx in enumerate(curves):
        cols[2 * N + idx, k] = 1.0 / np.sqrt(idx.size)
    return Border(cols, cols.T.copy(), scale)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


@dataclass
class Stepper:
    """Factored system for one (problem, config); call :meth:`step` repeatedly."""

    problem: NsProblem
    config: NsConfig
    check: bool = True
    system: BlockSystem = field(init=False)
    blocks: Optional[ForcingBlocks] = field(init=False, default=None)
    schur_solver: object = field(init=False, default=None)

    def __post_init__(self):
        g = self.problem.grid
        self.proj = Projection(g, self.config.dt)
        self.nf, self.nc = g.n_faces, g.n_cells
        self.N = self.problem.body.n_markers
        self.border = None
        if self.N:
            self.system, self.blocks = _block_system(self.problem, self.config, self.proj)
            on_wall = self.system.B1T[: self.nf][self.proj.mask == 0.0]
            if on_wall.nnz and np.abs(on_wall.data).max() > 0.0:
                raise ValueError("interface forcing reaches the box-boundary faces; enlarge the box")
            op = SchurOperator(self.system)
            if self.config.formulation == "composite" and self.config.gauge == "bordered":
                self.border = pressure_border(self.problem.body, self._scale(op))
            replace_rows = None
            if self.config.formulation == "composite" and self.config.gauge == "replace":
                replace_rows = gauge_rows(self.problem.body)
            self.schur_solver = make_schur_solver(self.system, self.config.schur, replace=replace_rows,
                                                  border=self.border)
        self.max_continuity = 0.0
        self.max_constraint = 0.0

    def _scale(self, op: SchurOperator) -> float:
        if self.config.schur == "lu":
            return float(np.linalg.norm(op.dense(), 2))
        # power-iteration estimate of the spectral scale for the matrix-free path
        v = np.random.default_rng(0).standard_normal(op.shape[0])
        growth = 0.0
        for _ in range(30):
            w = op.apply(v / np.linalg.norm(v))
            growth, v = np.linalg.norm(w), w
        return float(growth)

    @property
    def multipliers(self) -> np.ndarray:
        return getattr(self.schur_solver, "multipliers", np.zeros(0))

    @property
    def schur_matrix(self) -> Optional[np.ndarray]:
        return getattr(self.schur_solver, "matrix", None)

    def condition_number(self) -> float:
        S = self.schur_matrix
        if S is None:
            S = self.system.schur_dense()
        return condition_number(S)

    def _rhs2(self):
        vg = np.asarray(self.problem.v_gamma, dtype=float)
        if self.config.formulation == "composite":
            return np.concatenate([vg[:, 0], vg[:, 1], np.zeros(self.N)])
        return np.concatenate([vg[:, 0], vg[:, 1]])

    def step(self, state: NsState) -> NsState:
        cfg, g = self.config, self.problem.grid
        vmax = state.v.max_abs()
        if vmax * cfg.dt / min(g.dx, g.dy) > cfg.cfl_max:
            warnings.warn(f"CFL {vmax * cfg.dt / g.dx:.3f} exceeds {cfg.cfl_max}", RuntimeWarning, stacklevel=2)
        r = momentum_rhs(state, cfg).flat()
        if not np.all(np.isfinite(r)):
            raise SteadyStateError(f"non-finite right-hand side at step {state.step + 1}")
        r1 = np.concatenate([r, np.zeros(self.nc)])
        if self.N == 0:
            x = self.proj.solve(r1)
            y = np.zeros(0)
        else:
            x, y = schur_solve(self.system, self.schur_solver, r1, self._rhs2())
        v = FaceField.from_flat(g, x[: self.nf])
        p = CellField.from_flat(g, x[self.nf:])
        if not (v.is_finite() and p.is_finite() and np.all(np.isfinite(y))):
            raise SteadyStateError(f"non-finite state at step {state.step + 1}")
        jv = jp = forcing = shift = None
        if self.N:
            N = self.N
            if cfg.formulation == "composite":
                jv = np.column_stack([y[:N], y[N:2 * N]])
                jp = y[2 * N:]
                forcing = jv
                if self.border is not None:
                    lam = self.schur_solver.multipliers
                    shift = (self.border.scale * (self.border.cols @ lam))[2 * N:]
            else:
                forcing = cfg.re * np.column_stack([y[:N], y[N:]])
        new = NsState(v, p, state.t + cfg.dt, jv, jp, forcing, state.step + 1, shift)
        cont, cons = self.residuals(new)
        self.max_continuity = max(self.max_continuity, cont)
        self.max_constraint = max(self.max_constraint, cons)
        if self.check and (cont > STEP_TOL or cons > STEP_TOL):
            raise SolverError(f"step {new.step}: continuity {cont:.2e}, no-slip {cons:.2e}")
        return new

    def residuals(self, state: NsState) -> tuple[float, float]:
        """(continuity, no-slip) residuals of a state produced by :meth:`step`."""
        v = state.v.flat()
        div = self.proj.D @ v
        if self.N == 0:
            return float(np.abs(div).max()), 0.0
        vg = np.asarray(self.problem.v_gamma, dtype=float)
        ef = self.system.B2[: 2 * self.N, : self.nf] @ v
        ef = np.column_stack([ef[: self.N], ef[self.N:]])
        if self.config.formulation == "composite":
            jv = np.concatenate([state.jump_v[:, 0], state.jump_v[:, 1]])
            div = div + self.blocks.B_c @ jv
            h = self.blocks.h_f
            ef = ef - np.column_stack([h[: self.N], h[self.N:]]) * state.jump_v
        return float(np.abs(div).max()), float(np.abs(ef - vg).max())

    def _replaced(self) -> list:
        if self.config.formulation == "composite" and self.config.gauge == "replace":
            return sorted(gauge_rows(self.problem.body))
        return []

    def pressure_relation_residual(self, state: NsState) -> float:
        """max |E~ p - [p] o E_{C,1n} H+ + shift| over rows not replaced by the gauge."""
        if self.config.formulation != "composite" or self.N == 0:
            return 0.0
        res = self.blocks.E_p @ state.p.flat() - state.jump_p * self.blocks.h_c
        if state.relation_shift is not None:
            res = res + state.relation_shift
        keep = np.ones(self.N, bool)
        keep[[r - 2 * self.N for r in self._replaced()]] = False
        return float(np.abs(res[keep]).max())

    def gauge_residual(self, state: NsState) -> float:
        """max over curves of |mean [p]|."""
        if self.config.formulation != "composite" or self.N == 0:
            return 0.0
        return float(max(abs(state.jump_p[idx].mean()) for idx in _curve_indices(self.problem.body)))

    def block_residual(self, state: NsState, prev: NsState) -> float:
        """Relative residual of the monolithic system for the step prev -> state.

        Rows replaced by the gauge hold the zero-mean condition instead and
        the bordered gauge contributes its per-curve constants.
        """
        r = momentum_rhs(prev, self.config).flat()
        r1 = np.concatenate([r, np.zeros(self.nc)])
        x = np.concatenate([state.v.flat(), state.p.flat()])
        rhs2 = self._rhs2()
        if self.config.formulation != "composite":
            y = np.concatenate([state.forcing[:, 0], state.forcing[:, 1]]) / self.config.re
            return self.system.residual(x, y, r1, rhs2)
        y = np.concatenate([state.jump_v[:, 0], state.jump_v[:, 1], state.jump_p])
        bot = self.system.B2 @ x - self.system.C @ y - rhs2
        if state.relation_shift is not None:
            bot[2 * self.N:] += state.relation_shift
        for row, vec in gauge_rows(self.problem.body).items():
            if row in self._replaced():
                bot[row] = vec @ y
        extra = self.gauge_residual(state) if self.border is not None else 0.0
        top = self.system.A(x) + self.system.B1T @ y - r1
        num = np.sqrt(np.linalg.norm(top) ** 2 + np.linalg.norm(bot) ** 2 + extra ** 2)
        den = np.sqrt(np.linalg.norm(r1) ** 2 + np.linalg.norm(rhs2) ** 2)
        return float(num / den)


def step_composite(state: NsState, config: NsConfig, problem: NsProblem) -> NsState:
    return Stepper(problem, replace(config, formulation="composite")).step(state)


def step_prototypical(state: NsState, config: NsConfig, problem: NsProblem) -> NsState:
    return Stepper(problem, replace(config, formulation="prototypical")).step(state)


@dataclass
class SteadyResult:
    state: NsState
    history: list
    converged: bool
    stepper: Stepper


def run_to_steady(initial: NsState, config: NsConfig, problem: NsProblem, stepper: Optional[Stepper] = None,
                  raise_on_maxsteps: bool = True) -> SteadyResult:
    """Step until ||v_new - v||_inf / (dt ||v||_inf + eps) < steady_tol."""
    stepper = stepper or Stepper(problem, config)
    state = initial
    history = []
    eps = 1e-300
    for _ in range(config.max_steps):
        new = stepper.step(state)
        change = np.abs(new.v.flat() - state.v.flat()).max() / (config.dt * state.v.max_abs() + eps)
        history.append(change)
        state = new
        if change < config.steady_tol:
            return SteadyResult(state, history, True, stepper)
    if raise_on_maxsteps:
        raise SteadyStateError(f"no steady state after {config.max_steps} steps (last change {history[-1]:.2e})")
    return SteadyResult(state, history, False, stepper)


# ---------------------------------------------------------------------------
# circular Couette flow
# ---------------------------------------------------------------------------

COUETTE_HALF_WIDTH = 2.67


def couette_exact(r, kappa: float = 0.5):
    """Azimuthal velocity for the inner cylinder (radius 1) rotating at unit rim speed."""
    r = np.asarray(r, dtype=float)
    k2 = kappa * kappa
    safe = np.where(r > 0, r, 1.0)
    mid = k2 / (1.0 - k2) * (1.0 / (k2 * safe) - safe)
    return np.where(r <= 1.0, r, np.where(r <= 1.0 / kappa, mid, 0.0))


def couette_jumps(kappa: float = 0.5) -> tuple[float, float]:
    """Normal-derivative jumps of the azimuthal velocity on the inner and outer cylinders."""
    k2 = kappa * kappa
    return -2.0 / (1.0 - k2), 2.0 * k2 / (1.0 - k2)


def couette_velocity(grid: GridSpec, kappa: float = 0.5) -> FaceField:
    """Exact velocity sampled on the faces."""

    def comp(sign, which):
        def fn(x, y):
            r = np.hypot(x, y)
            vt = couette_exact(r, kappa)
            safe = np.where(r > 0, r, 1.0)
            return sign * vt * (y if which == "y" else x) / safe
        return fn

    return FaceField.from_function(grid, comp(-1.0, "y"), comp(1.0, "x"))


def couette_problem(n_cells: int, ds_dx: float = 1.0, kappa: float = 0.5,
                    half_width: float = COUETTE_HALF_WIDTH, kernel: Kernel = DEFAULT_KERNEL) -> NsProblem:
    """Inner cylinder (radius 1, rotating, inward normals) and outer cylinder (radius 1/kappa, fixed)."""
    grid = square_grid(half_width, n_cells)
    r2 = 1.0 / kappa
    inner = circle_body(radius=1.0, n=markers_for_ratio(1.0, ds_dx, grid.dx), orientation="inward",
                        angular_velocity=1.0)
    outer = circle_body(radius=r2, n=markers_for_ratio(r2, ds_dx, grid.dx), orientation="outward")
    body = concat_bodies(inner, outer)
    return NsProblem(grid, body, body.velocity.copy(), kernel=kernel)


def couette_exact_jumps(body: Body, kappa: float = 0.5) -> np.ndarray:
    """[v^n] per marker: jump times the azimuthal unit vector."""
    ji, jo = couette_jumps(kappa)
    x, y = body.positions[:, 0], body.positions[:, 1]
    r = np.hypot(x, y)
    etheta = np.column_stack([-y / r, x / r])
    inner = body.curve == body.curve.min()
    return np.where(inner[:, None], ji, jo) * etheta


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _config_hash(config: NsConfig) -> str:
    blob = json.dumps(config.__dict__, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(state: NsState, config: NsConfig, path) -> None:
    """CSV with a JSON metadata header line, then one row per face/cell value."""
    g = state.v.grid
    meta = {"nx": g.nx, "ny": g.ny, "dx": g.dx, "dy": g.dy, "origin": list(g.origin), "t": state.t,
            "step": state.step, "config": _config_hash(config)}
    values = np.concatenate([state.v.flat(), state.p.flat()])
    kinds = np.array(["vx"] * (g.nx + 1) * g.ny + ["vy"] * g.nx * (g.ny + 1) + ["p"] * g.n_cells)
    with open(Path(path), "w") as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        fh.write("field,value\n")
        for k, val in zip(kinds, values):
            fh.write(f"{k},{float(val)!r}\n")


def load_checkpoint(path) -> tuple[NsState, dict]:
    with open(Path(path)) as fh:
        meta = json.loads(fh.readline()[2:])
        fh.readline()
        vals = np.array([float(line.split(",")[1]) for line in fh])
    g = GridSpec(meta["nx"], meta["ny"], meta["dx"], meta["dy"], tuple(meta["origin"]))
    v = FaceField.from_flat(g, vals[: g.n_faces])
    p = CellField.from_flat(g, vals[g.n_faces:])
    return NsState(v, p, meta["t"], step=meta["step"]), meta
