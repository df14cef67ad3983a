"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from composite_ib import bench, ops
from composite_ib.ddf import DEFAULT_KERNEL
from composite_ib.grid import CellField, square_grid
from composite_ib.identities import run_suite
from composite_ib.linsolve import UnboundedSolver, poisson_unbounded, unbounded_laplacian
from composite_ib.ns_ib import NsConfig, Stepper, default_dt
from composite_ib.poisson_ib import (Poisson1DProblem, circle_problem, discretize_1d, discretize_2d,
                                     solve_saddle)

from ns_oracles import monolithic_step_residual, random_state, small_problem
from oracles import probe

RESULTS: dict = {}

TITLES = {
    1: "operator identities <= 1e-12 (32x32, 50 draws, < 5 s)",
    2: "kernel moments r=0,1 at 1000 shifts <= 1e-12",
    3: "dense monolithic block residual <= 1e-9 (<= 2000 unknowns)",
    4: "1D Poisson slopes and forcing (< 10 s)",
    5: "2D Poisson circle slopes, conditioning and forcing (< 5 min)",
    6: "circular Couette slopes, forcing, conditioning and constraints (< 15 min)",
    7: "LGF delta test <= 1e-10",
}


def record(k, ok, detail):
    """Add one part to criterion ``k``; a criterion passes only if every part does."""
    RESULTS.setdefault(k, []).append((bool(ok), detail))


def summary_lines():
    out = []
    for k in sorted(TITLES):
        parts = RESULTS.get(k)
        if not parts:
            out.append(f"SKIP criterion {k}: {TITLES[k]}")
            continue
        ok = all(p for p, _ in parts)
        if len(parts) <= 2:
            detail = "; ".join(d for _, d in parts)
        else:
            bad = [d for p, d in parts if not p]
            detail = f"{len(parts) - len(bad)}/{len(parts)} parts pass"
            detail += "".join(f"; failing {d}" for d in bad)
        out.append(f"{'PASS' if ok else 'FAIL'} criterion {k}: {TITLES[k]} [{detail}]")
    return out


def _failing(checks):
    return [f"{n} ({d})" for n, ok, d in checks if not ok]


# ---------------------------------------------------------------------------
# 1, 2, 7: exact discrete properties
# ---------------------------------------------------------------------------


def test_criterion_1_identities():
    t0 = time.perf_counter()
    worst = run_suite(n=32, draws=50)
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    ok = top <= 1e-12 and elapsed < 5.0
    record(1, ok, f"{len(worst)} identities, max {top:.1e}, {elapsed:.1f} s")
    assert top <= 1e-12, {k: v for k, v in worst.items() if v > 1e-12}
    assert elapsed < 5.0


def test_criterion_2_moments():
    shifts = np.random.default_rng(2).random(1000)
    i = np.arange(-4, 5)
    pts = shifts[:, None] + i[None, :]
    phi = DEFAULT_KERNEL.phi(pts.ravel()).reshape(pts.shape)
    r0 = np.abs(phi.sum(axis=1) - 1.0).max()
    r1 = np.abs((pts * phi).sum(axis=1)).max()
    record(2, max(r0, r1) <= 1e-12, f"r=0 {r0:.1e}, r=1 {r1:.1e}")
    assert r0 <= 1e-12 and r1 <= 1e-12


def test_criterion_7_lgf_delta():
    g = square_grid(1.0, 32)
    src = np.zeros(g.shape_c)
    src[13, 17] = 1.0
    u = poisson_unbounded(CellField(src, grid=g))
    inner = np.abs(ops.laplacian_center(u).values - src)[1:-1, 1:-1].max()
    full = np.abs(unbounded_laplacian(UnboundedSolver(g), CellField(src, grid=g).flat())
                  - CellField(src, grid=g).flat()).max()
    record(7, inner <= 1e-10, f"interior {inner:.1e}, with free-space ring {full:.1e}")
    assert inner <= 1e-10 and full <= 1e-10


# ---------------------------------------------------------------------------
# 3: saddle-solver fidelity on dense monolithic instances
# ---------------------------------------------------------------------------


def poisson_dense_residual(problem, formulation):
    if isinstance(problem, Poisson1DProblem):
        disc, ug, grid = discretize_1d(problem), np.atleast_1d(float(problem.u_gamma)), None
    else:
        disc, ug, grid = discretize_2d(problem), np.asarray(problem.u_gamma, float), problem.grid
    rhs = problem.rhs()
    sol = solve_saddle(disc, rhs, ug, formulation, check=False, grid=grid)
    m = disc.n_markers
    L = probe(disc.apply_L, disc.n_cells)
    B = disc.spreading(formulation).toarray()
    C = -np.diag(disc.h_plus) if formulation == "composite" else np.zeros((m, m))
    M = np.block([[L, B], [disc.E_C.toarray(), -C]])
    b = np.concatenate([rhs, ug])
    res = M @ np.concatenate([sol.u, -sol.forcing]) - b
    return float(np.linalg.norm(res) / np.linalg.norm(b)), M.shape[0]


POISSON_INSTANCES = (
    [("1D", f, n, None) for f in ("composite", "prototypical") for n in bench.POISSON1D_N]
    + [("2D", "composite", 20, d) for d in bench.POISSON2D_DS]
    + [("2D", "prototypical", 20, d) for d in (0.7, 1.3)]
)


def _poisson_instance(dim, n, ds):
    if dim == "1D":
        return Poisson1DProblem(n)
    return circle_problem(4.0 / n, ds, outer="dst")


@pytest.mark.parametrize("dim,formulation,n,ds", POISSON_INSTANCES)
def test_criterion_3_poisson(dim, formulation, n, ds):
    res, size = poisson_dense_residual(_poisson_instance(dim, n, ds), formulation)
    assert size <= 2000
    record(3, res <= 1e-9, f"{dim} {formulation} n={n}{'' if ds is None else f' ds/dx={ds}'}: {res:.1e}")
    assert res <= 1e-9


@pytest.mark.xfail(strict=True, reason="cond(S~) ~ 1e20 at ds/dx 0.1; the residual is roundoff-limited")
def test_criterion_3_prototypical_dense_markers():
    res, size = poisson_dense_residual(circle_problem(0.2, 0.1, outer="dst"), "prototypical")
    assert size <= 2000
    record(3, res <= 1e-9, f"2D prototypical n=20 ds/dx=0.1: {res:.1e} (roundoff-limited)")
    assert res <= 1e-9


@pytest.mark.parametrize("formulation", ["composite", "prototypical"])
def test_criterion_3_navier_stokes(formulation):
    prob = small_problem()
    cfg = NsConfig(re=10.0, dt=default_dt(prob.grid, 10.0), formulation=formulation)
    stepper = Stepper(prob, cfg)
    prev = random_state(prob.grid, np.random.default_rng(3), 0.05)
    worst = 0.0
    for _ in range(3):
        new = stepper.step(prev)
        worst = max(worst, monolithic_step_residual(stepper, prev, new))
        prev = new
    record(3, worst <= 1e-9, f"NS {formulation} 12x12 N=16: {worst:.1e}")
    assert worst <= 1e-9


# ---------------------------------------------------------------------------
# 4, 5, 6: benchmark studies
# ---------------------------------------------------------------------------


def _study(k, tasks_by_kind, budget):
    t0 = time.perf_counter()
    checks = []
    for kind, tasks in tasks_by_kind:
        checks += bench.check_report(bench.run_study(tasks), kind)
    elapsed = time.perf_counter() - t0
    bad = _failing(checks)
    ok = not bad and bool(checks) and elapsed < budget
    detail = f"{len(checks) - len(bad)}/{len(checks)} checks, {elapsed:.0f} s"
    record(k, ok, detail + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert checks and not bad, bad
    assert elapsed < budget


def test_criterion_4_poisson1d():
    _study(4, [("poisson1d", bench.poisson1d_tasks())], 10.0)


def test_criterion_5_poisson2d():
    _study(5, [("poisson2d", bench.poisson2d_tasks()),
               ("conditioning", bench.conditioning_tasks("poisson2d", (40,), bench.POISSON2D_DS))], 300.0)


def test_criterion_6_couette():
    _study(6, [("couette", bench.couette_tasks() + bench.couette_tasks((64,), (0.7, 1.3))),
               ("conditioning", bench.conditioning_tasks("couette", (32, 64), bench.COUETTE_DS))], 900.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
