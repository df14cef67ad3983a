"""Convergence and conditioning studies for the Poisson and Couette benchmarks.

Every run yields one :class:`Record`; a study is an ordered list of run
descriptors executed serially or in worker processes.  Reports are written
as CSV (fixed column order) or JSON.

Example::

    python -m composite_ib couette --nx 32 64 --formulation composite --out couette.csv
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import identities, ns_ib, ops
from . import poisson_ib as P

COLUMNS = ("problem", "formulation", "dx", "ds_dx", "n_markers", "err_inf_all", "err_inf_masked", "err_l2_all",
           "err_l2_masked", "forcing_err_inf", "cond_S", "steps", "runtime_s")

POISSON1D_N = (16, 32, 64, 128, 256)
POISSON2D_N = (20, 40, 80)  # dx/R = 0.2, 0.1, 0.05
POISSON2D_DS = (0.1, 0.7, 1.3)
COUETTE_N = (32, 64, 128)  # dx = 0.167, 0.0833, 0.0417
COUETTE_DS = (0.7, 1.0, 1.3)


@dataclass
class Record:
    problem: str
    formulation: str
    dx: float
    ds_dx: float = math.nan
    n_markers: int = 0
    err_inf_all: float = math.nan
    err_inf_masked: float = math.nan
    err_l2_all: float = math.nan
    err_l2_masked: float = math.nan
    forcing_err_inf: float = math.nan
    cond_S: float = math.nan
    steps: int = 0
    runtime_s: float = 0.0
    ok: bool = True
    message: str = ""
    extra: dict = field(default_factory=dict)

    def row(self) -> list:
        return [getattr(self, c) for c in COLUMNS]


@dataclass
class StudyReport:
    records: list
    slopes: dict = field(default_factory=dict)

    @property
    def failed(self) -> list:
        return [r for r in self.records if not r.ok]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def relative_error(numeric, exact, exclude: Optional[np.ndarray] = None) -> tuple[float, float]:
    """(inf, rms) of (numeric - exact) / max|exact| over points not in ``exclude``.

    ``exact`` is an array or a callable of no arguments returning one.  The
    normalization always uses every point.
    """
    num = np.ravel(np.asarray(numeric, dtype=float))
    ex = np.ravel(np.asarray(exact() if callable(exact) else exact, dtype=float))
    if num.shape != ex.shape:
        raise ValueError(f"shape mismatch {num.shape} vs {ex.shape}")
    scale = np.abs(ex).max()
    if scale == 0:
        scale = 1.0
    err = np.abs(num - ex) / scale
    if exclude is not None:
        err = err[~np.ravel(exclude)]
    if err.size == 0:
        return math.nan, math.nan
    return float(err.max()), float(np.sqrt(np.mean(err**2)))


def fit_slope(dx: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(dx); needs 2+ finite positive points."""
    dx, err = np.asarray(dx, dtype=float), np.asarray(err, dtype=float)
    keep = np.isfinite(err) & (err > 0) & np.isfinite(dx)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(dx[keep]), np.log(err[keep]), 1)[0])


def pairwise_slopes(dx: Sequence[float], err: Sequence[float]) -> list[float]:
    dx, err = np.asarray(dx, dtype=float), np.asarray(err, dtype=float)
    return [float(np.log(err[i + 1] / err[i]) / np.log(dx[i + 1] / dx[i])) for i in range(len(dx) - 1)]


def zigzag_count(values: np.ndarray, periodic: bool = True) -> int:
    """Markers where three consecutive first differences alternate in sign.

    A smooth profile gives 0; an adjacent-marker sign oscillation gives a
    count comparable to the number of markers.
    """
    v = np.asarray(values, dtype=float)
    d = np.diff(np.r_[v, v[:3]]) if periodic else np.diff(v)
    s = np.sign(d)
    alt = (s[:-1] * s[1:] < 0)
    return int(np.sum(alt[:-1] & alt[1:]))


def compute_slopes(records: Sequence[Record]) -> dict:
    """Slopes per (problem, formulation, ds_dx) series for the error and forcing columns."""
    series: dict = {}
    for r in records:
        if r.ok and r.problem != "conditioning":
            series.setdefault((r.problem, r.formulation, r.ds_dx), []).append(r)
    out = {}
    for (prob, form, ds), rs in series.items():
        rs = sorted(rs, key=lambda r: -r.dx)
        if len(rs) < 2:
            continue
        dx = [r.dx for r in rs]
        key = f"{prob}/{form}/ds_dx={ds:g}" if np.isfinite(ds) else f"{prob}/{form}"
        out[key] = {m: fit_slope(dx, [getattr(r, m) for r in rs])
                    for m in ("err_inf_all", "err_inf_masked", "err_l2_all", "err_l2_masked", "forcing_err_inf")}
        out[key]["n_grids"] = len(rs)
    return out


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


def run_poisson1d(n: int, formulation: str = "composite") -> Record:
    t0 = time.perf_counter()
    prob = P.Poisson1DProblem(n)
    disc = P.discretize_1d(prob)
    ue = P.exact_1d(prob.x())
    extra = {}
    if formulation == "prescribed":
        sol = P.solve_prescribed(disc, prob.rhs(), np.array([P.JUMP_1D]), np.array([prob.u_gamma]))
        forcing_err = 0.0
        extra["interface_err"] = sol.constraint_residual
    else:
        sol = P.solve_saddle(disc, prob.rhs(), np.array([prob.u_gamma]), formulation, want_cond=True)
        forcing_err = float(abs(sol.forcing[0] - P.JUMP_1D))
        extra["forcing"] = float(sol.forcing[0])
    inf_all, l2_all = relative_error(sol.u, ue)
    inf_m, l2_m = relative_error(sol.u, ue, disc.support)
    return Record("poisson1d", formulation, prob.h, math.nan, 1, inf_all, inf_m, l2_all, l2_m, forcing_err,
                  sol.cond if sol.cond is not None else math.nan, 0, time.perf_counter() - t0,
                  extra=dict(extra, block_residual=sol.block_residual))


def run_poisson2d(n: int, ds_dx: float, formulation: str = "composite", poisson: str = "lgf",
                  want_cond: bool = True) -> Record:
    t0 = time.perf_counter()
    prob = P.circle_problem(4.0 / n, ds_dx, outer=poisson)
    disc = P.discretize_2d(prob)
    g = prob.grid
    x, y = g.coords("C")
    ue = P.exact_2d_circle(x, y).ravel(order="F")
    theta = np.arctan2(prob.body.positions[:, 1], prob.body.positions[:, 0])
    fe = P.exact_2d_jump(theta)
    extra = {}
    if formulation == "prescribed":
        sol = P.solve_prescribed(disc, prob.rhs(), fe, prob.u_gamma, grid=g)
        extra["interface_err"] = sol.constraint_residual
    else:
        # the prototypical solve at small ds/dx is roundoff-limited; record instead of raising
        sol = P.solve_saddle(disc, prob.rhs(), prob.u_gamma, formulation, want_cond=want_cond, check=False, grid=g)
        extra["zigzag"] = zigzag_count(sol.forcing)
    inf_all, l2_all = relative_error(sol.u, ue)
    inf_m, l2_m = relative_error(sol.u, ue, disc.support)
    forcing_err = float(np.abs(sol.forcing - fe).max())
    extra["block_residual"] = sol.block_residual
    return Record("poisson2d", formulation, g.dx, ds_dx, prob.body.n_markers, inf_all, inf_m, l2_all, l2_m,
                  forcing_err, sol.cond if sol.cond is not None else math.nan, 0, time.perf_counter() - t0,
                  extra=extra)


def couette_mask(problem: ns_ib.NsProblem) -> np.ndarray:
    """Faces reached by I_{C->F} I_{F->C} R_F from any marker."""
    g, tr = problem.grid, problem.transfer
    reach = np.abs(tr.spread_faces_matrix("")) @ np.ones(2 * problem.body.n_markers)
    return np.abs(ops.matrix("ICF", g) @ (ops.matrix("IFC", g) @ reach)) > 0


def run_couette(n: int, ds_dx: float = 1.0, formulation: str = "composite", re: float = 10.0,
                dt: Optional[float] = None, schur: str = "lu", max_steps: int = 200000) -> Record:
    t0 = time.perf_counter()
    prob = ns_ib.couette_problem(n, ds_dx)
    g = prob.grid
    cfg = ns_ib.NsConfig(re=re, dt=dt or ns_ib.default_dt(g, re), formulation=formulation, schur=schur,
                         max_steps=max_steps)
    stepper = ns_ib.Stepper(prob, cfg)
    cond = stepper.condition_number() if schur == "lu" else math.nan
    res = ns_ib.run_to_steady(ns_ib.NsState.rest(g), cfg, prob, stepper=stepper)
    st = res.state
    ue = ns_ib.couette_velocity(g).flat()
    inf_all, l2_all = relative_error(st.v.flat(), ue)
    inf_m, l2_m = relative_error(st.v.flat(), ue, couette_mask(prob))
    inner = prob.body.curve == prob.body.curve.min()
    fe = ns_ib.couette_exact_jumps(prob.body)
    ferr = float(np.abs(st.forcing[inner] - fe[inner]).max())
    extra = {"max_continuity": stepper.max_continuity, "max_constraint": stepper.max_constraint,
             "dt": cfg.dt, "zigzag": zigzag_count(st.forcing[inner, 0])}
    return Record("couette", formulation, g.dx, ds_dx, prob.body.n_markers, inf_all, inf_m, l2_all, l2_m, ferr,
                  cond, st.step, time.perf_counter() - t0, extra=extra)


def run_conditioning(problem: str, n: int, ds_dx: float, formulation: str, poisson: str = "lgf",
                     re: float = 10.0) -> Record:
    """Condition number of the factored Schur matrix only (no solve)."""
    t0 = time.perf_counter()
    if problem == "poisson2d":
        prob = P.circle_problem(4.0 / n, ds_dx, outer=poisson)
        disc = P.discretize_2d(prob)
        sol = P.solve_saddle(disc, prob.rhs(), prob.u_gamma, formulation, want_cond=True, check=False)
        cond, dx, m = sol.cond, prob.grid.dx, prob.body.n_markers
    elif problem == "couette":
        prob = ns_ib.couette_problem(n, ds_dx)
        cfg = ns_ib.NsConfig(re=re, dt=ns_ib.default_dt(prob.grid, re), formulation=formulation)
        cond, dx, m = ns_ib.Stepper(prob, cfg).condition_number(), prob.grid.dx, prob.body.n_markers
    else:
        raise ValueError(f"unknown problem {problem!r}")
    return Record("conditioning", formulation, dx, ds_dx, m, cond_S=cond, runtime_s=time.perf_counter() - t0,
                  extra={"of": problem})


RUNNERS = {"poisson1d": run_poisson1d, "poisson2d": run_poisson2d, "couette": run_couette,
           "conditioning": run_conditioning}


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------


def _execute(task: tuple) -> Record:
    kind, kwargs = task
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return RUNNERS[kind](**kwargs)
    except Exception as exc:  # a failed run is recorded and the sweep continues
        form = kwargs.get("formulation", "")
        return Record(kind, form, math.nan, kwargs.get("ds_dx", math.nan), ok=False,
                      message=f"{type(exc).__name__}: {exc}", extra={"args": kwargs})


def run_study(tasks: Sequence[tuple], jobs: int = 1) -> StudyReport:
    """Run ``(kind, kwargs)`` descriptors; results keep descriptor order."""
    if not tasks:
        raise ValueError("empty study")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_execute, tasks))
    else:
        records = [_execute(t) for t in tasks]
    return StudyReport(records, compute_slopes(records))


def poisson1d_tasks(ns=POISSON1D_N, formulations=("composite", "prototypical", "prescribed")) -> list:
    if not ns:
        raise ValueError("no grids given")
    return [("poisson1d", {"n": n, "formulation": f}) for f in formulations for n in ns]


def poisson2d_tasks(ns=POISSON2D_N, ds=POISSON2D_DS, formulations=("composite", "prototypical"),
                    poisson="lgf") -> list:
    if not ns:
        raise ValueError("no grids given")
    return [("poisson2d", {"n": n, "ds_dx": d, "formulation": f, "poisson": poisson})
            for f in formulations for d in ds for n in ns]


def couette_tasks(ns=COUETTE_N, ds=(1.0,), formulations=("composite", "prototypical"), re=10.0, dt=None,
                  schur="lu") -> list:
    if not ns:
        raise ValueError("no grids given")
    return [("couette", {"n": n, "ds_dx": d, "formulation": f, "re": re, "dt": dt, "schur": schur})
            for f in formulations for d in ds for n in ns]


def conditioning_tasks(problem: str, ns, ds, formulations=("composite", "prototypical"), poisson="lgf") -> list:
    if not ns:
        raise ValueError("no grids given")
    base = {"poisson": poisson} if problem == "poisson2d" else {}
    return [("conditioning", dict(base, problem=problem, n=n, ds_dx=d, formulation=f))
            for f in formulations for n in ns for d in ds]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


def emit(report: StudyReport, fmt: str = "csv", path=None) -> str:
    """Serialize ``report``; write to ``path`` when given and return the text."""
    if fmt == "csv":
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in report.records:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r.row()])
        text = buf.getvalue()
    elif fmt == "json":
        payload = {"records": [_clean(asdict(r)) for r in report.records], "slopes": _clean(report.slopes)}
        text = json.dumps(payload, indent=2, sort_keys=False)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path) -> list[dict]:
    """Read back a CSV report with numeric columns converted."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if k in ("problem", "formulation"):
                    rec[k] = v
                elif k in ("n_markers", "steps"):
                    rec[k] = int(v)
                else:
                    rec[k] = float(v)
            out.append(rec)
    return out


# ---------------------------------------------------------------------------
# acceptance checks (used by --check)
# ---------------------------------------------------------------------------


def _series(report: StudyReport, problem: str, formulation: str, ds_dx=None) -> list:
    rs = [r for r in report.records if r.ok and r.problem == problem and r.formulation == formulation
          and (ds_dx is None or (np.isfinite(r.ds_dx) and abs(r.ds_dx - ds_dx) < 1e-9))]
    return sorted(rs, key=lambda r: -r.dx)


def check_report(report: StudyReport, kind: str) -> list[tuple[str, bool, str]]:
    """Acceptance properties that apply to the runs present in ``report``."""
    checks = []

    def add(name, ok, detail):
        checks.append((name, bool(ok), detail))

    def slope(rs, metric):
        return fit_slope([r.dx for r in rs], [getattr(r, metric) for r in rs])

    if kind == "poisson1d":
        c = _series(report, "poisson1d", "composite")
        if len(c) >= 3:
            s = slope(c, "err_inf_masked")
            add("1D composite masked slope >= 1.9", s >= 1.9, f"{s:.3f}")
            last = [r.forcing_err_inf for r in c[-3:]]
            add("1D composite forcing error nonincreasing", all(b <= a for a, b in zip(last, last[1:])), str(last))
        p = _series(report, "poisson1d", "prototypical")
        if len(p) >= 3:
            s = slope(p, "err_inf_all")
            add("1D prototypical global slope in [0.8, 1.2]", 0.8 <= s <= 1.2, f"{s:.3f}")
        q = _series(report, "poisson1d", "prescribed")
        if len(q) >= 3:
            s = slope(q, "err_inf_masked")
            tiny = max(r.err_inf_masked for r in q) <= 1e-12
            add("1D prescribed masked slope >= 1.9 (or roundoff)", s >= 1.9 or tiny, f"{s:.3f}")
            add("1D prescribed interface error nonzero", all(r.extra["interface_err"] > 0 for r in q), "")
    if kind == "poisson2d":
        for ds in (0.7, 1.3):
            c = _series(report, "poisson2d", "composite", ds)
            if len(c) >= 3:
                s = slope(c, "err_inf_masked")
                add(f"2D composite masked slope >= 1.8 at ds/dx {ds}", s >= 1.8, f"{s:.3f}")
                s = slope(c, "err_inf_all")
                add(f"2D composite global slope >= 0.9 at ds/dx {ds}", s >= 0.9, f"{s:.3f}")
        p = _series(report, "poisson2d", "prototypical", 1.3)
        if len(p) >= 3:
            for m in ("err_inf_all", "err_l2_all"):
                s = slope(p, m)
                add(f"2D prototypical {m} slope in [0.8, 1.2]", 0.8 <= s <= 1.2, f"{s:.3f}")
        fine = [r for r in _series(report, "poisson2d", "composite", 0.1) if abs(r.dx - 0.05) < 1e-9]
        for r in fine:
            add("2D composite forcing error <= 0.15 at dx/R 0.05, ds/dx 0.1", r.forcing_err_inf <= 0.15,
                f"{r.forcing_err_inf:.3g}")
            add("2D composite forcing has no zigzag", r.extra["zigzag"] == 0, str(r.extra["zigzag"]))
        for r in _series(report, "poisson2d", "prototypical", 0.1):
            if abs(r.dx - 0.05) < 1e-9:
                add("2D prototypical forcing error > 10 at ds/dx 0.1", r.forcing_err_inf > 10,
                    f"{r.forcing_err_inf:.3g}")
    if kind == "couette":
        c = _series(report, "couette", "composite", 1.0)
        if len(c) >= 3:
            s = pairwise_slopes([r.dx for r in c], [r.err_inf_masked for r in c])
            add("Couette composite masked slope >= 1.5", min(s) >= 1.5, str([round(v, 3) for v in s]))
        p = _series(report, "couette", "prototypical", 1.0)
        if len(p) >= 3:
            for m in ("err_inf_all", "err_l2_all"):
                s = slope(p, m)
                add(f"Couette prototypical {m} slope in [0.8, 1.2]", 0.8 <= s <= 1.2, f"{s:.3f}")
        for r in report.records:
            if r.ok and r.problem == "couette":
                worst = max(r.extra["max_continuity"], r.extra["max_constraint"])
                add(f"Couette {r.formulation} n={r.n_markers} step constraints <= 1e-8", worst <= 1e-8,
                    f"{worst:.2e}")
                if r.formulation == "composite" and abs(r.dx - 2 * 2.67 / 64) < 1e-9:
                    add(f"Couette composite forcing <= 0.2 at ds/dx {r.ds_dx}", r.forcing_err_inf <= 0.2,
                        f"{r.forcing_err_inf:.3g}")
                if r.formulation == "prototypical" and abs(r.ds_dx - 0.7) < 1e-9:
                    add("Couette prototypical forcing > 10 at ds/dx 0.7", r.forcing_err_inf > 10,
                        f"{r.forcing_err_inf:.3g}")
    if kind == "conditioning":
        groups: dict = {}
        for r in report.records:
            if r.ok and r.problem == "conditioning":
                groups.setdefault((r.extra["of"], r.formulation, round(r.dx, 12)), []).append(r)
        for (of, form, dx), rs in groups.items():
            conds = {r.ds_dx: r.cond_S for r in rs}
            if form == "composite" and len(conds) >= 2:
                span = math.log10(max(conds.values()) / min(conds.values()))
                add(f"{of} cond(S) span < 1 decade at dx {dx:.4g}", span < 1, f"{span:.2f}")
            if form == "prototypical":
                lo, hi = min(conds), max(conds)
                need = 3 if of == "poisson2d" else 2
                if lo < hi:
                    grow = math.log10(conds[lo] / conds[hi])
                    add(f"{of} cond(S~) growth >= {need} decades at dx {dx:.4g}", grow >= need, f"{grow:.2f}")
    if report.failed:
        add("all runs completed", False, "; ".join(r.message for r in report.failed))
    return checks


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nx", type=int, nargs="+", help="cells per direction (1D: intervals)")
    common.add_argument("--ds-dx", type=float, nargs="+", help="marker-to-grid spacing ratios")
    common.add_argument("--formulation", nargs="+", choices=["composite", "prototypical", "prescribed"])
    common.add_argument("--schur", choices=["lu", "bicgstab"], default="lu")
    common.add_argument("--poisson", choices=["dst", "lgf"], default="lgf", help="outer treatment for 2D Poisson")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--re", type=float, default=10.0)
    common.add_argument("--dt", type=float, default=None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--check", action="store_true", help="evaluate acceptance properties; nonzero exit on failure")

    parser = argparse.ArgumentParser(prog="composite_ib", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("poisson1d", parents=[common], help="1D Poisson convergence study")
    sub.add_parser("poisson2d", parents=[common], help="2D circle Poisson study")
    sub.add_parser("couette", parents=[common], help="circular Couette flow study")
    sub.add_parser("identities", parents=[common], help="discrete operator identity suite")
    cp = sub.add_parser("conditioning", parents=[common], help="Schur condition numbers versus ds/dx")
    cp.add_argument("--problem", choices=["poisson2d", "couette"], default="couette")
    return parser


def _identities(args) -> int:
    n = (args.nx or [32])[0]
    t0 = time.perf_counter()
    worst = identities.run_suite(n=n)
    rows = sorted(worst.items())
    if args.format == "json":
        text = json.dumps({"grid": n, "residuals": dict(rows), "runtime_s": time.perf_counter() - t0}, indent=2)
    else:
        text = "identity,max_residual\n" + "".join(f"{k},{v!r}\n" for k, v in rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.check:
        bad = [k for k, v in rows if not v <= 1e-12]
        for k, v in rows:
            print(f"{'PASS' if v <= 1e-12 else 'FAIL'} {k} {v:.2e}", file=sys.stderr)
        return 1 if bad else 0
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "identities":
        return _identities(args)
    forms = tuple(args.formulation) if args.formulation else None
    if args.command == "poisson1d":
        tasks = poisson1d_tasks(tuple(args.nx or POISSON1D_N), forms or ("composite", "prototypical", "prescribed"))
    elif args.command == "poisson2d":
        tasks = poisson2d_tasks(tuple(args.nx or POISSON2D_N), tuple(args.ds_dx or POISSON2D_DS),
                                forms or ("composite", "prototypical"), args.poisson)
    elif args.command == "couette":
        forms = forms or ("composite", "prototypical")
        if "prescribed" in forms:
            raise SystemExit("couette supports composite and prototypical only")
        tasks = couette_tasks(tuple(args.nx or COUETTE_N), tuple(args.ds_dx or (1.0,)), forms, args.re, args.dt,
                              args.schur)
    else:
        forms = forms or ("composite", "prototypical")
        default_n = (40,) if args.problem == "poisson2d" else (32, 64)
        default_ds = POISSON2D_DS if args.problem == "poisson2d" else COUETTE_DS
        tasks = conditioning_tasks(args.problem, tuple(args.nx or default_n), tuple(args.ds_dx or default_ds),
                                   forms, args.poisson)
    report = run_study(tasks, args.jobs)
    text = emit(report, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    status = 1 if report.failed else 0
    for r in report.failed:
        print(f"run failed: {r.message}", file=sys.stderr)
    if args.check:
        for name, ok, detail in check_report(report, args.command):
            print(f"{'PASS' if ok else 'FAIL'} {name} {detail}", file=sys.stderr)
            if not ok:
                status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
