import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from composite_ib import bench
from composite_ib.bench import (COLUMNS, Record, StudyReport, check_report, emit, fit_slope, main, pairwise_slopes,
                                read_csv, relative_error, run_study, zigzag_count)


def loop_error(numeric, exact, exclude):
    scale = max(abs(e) for e in exact)
    worst, acc, cnt = 0.0, 0.0, 0
    for u, e, skip in zip(numeric, exact, exclude):
        if skip:
            continue
        d = abs(u - e) / scale
        worst = max(worst, d)
        acc += d * d
        cnt += 1
    return worst, math.sqrt(acc / cnt)


def test_relative_error_exact_is_zero(rng):
    u = rng.standard_normal((5, 7))
    assert relative_error(u, u) == (0.0, 0.0)


def test_relative_error_constant_shift(rng):
    u = rng.standard_normal(50)
    c = 0.03
    inf, rms = relative_error(u + c, u)
    scale = np.abs(u).max()
    assert inf == pytest.approx(c / scale, rel=1e-12)
    assert rms == pytest.approx(c / scale, rel=1e-12)


def test_relative_error_matches_loop(rng):
    u, e = rng.standard_normal(64), rng.standard_normal(64)
    mask = rng.random(64) < 0.3
    got = relative_error(u, lambda: e, mask)
    ref = loop_error(u, e, mask)
    assert got[0] == pytest.approx(ref[0], rel=1e-14)
    assert got[1] == pytest.approx(ref[1], rel=1e-14)


def test_relative_error_edge_cases():
    with pytest.raises(ValueError):
        relative_error(np.zeros(3), np.zeros(4))
    assert all(math.isnan(v) for v in relative_error(np.ones(3), np.ones(3), np.ones(3, bool)))
    # an all-zero exact field falls back to absolute error
    assert relative_error(np.full(3, 0.5), np.zeros(3))[0] == 0.5


@given(st.floats(0.5, 3.0), st.floats(1e-3, 10.0))
def test_fit_slope_power_law(p, c):
    dx = np.array([0.2, 0.1, 0.05, 0.025])
    assert fit_slope(dx, c * dx**p) == pytest.approx(p, abs=1e-9)
    assert pairwise_slopes(dx, c * dx**p) == pytest.approx([p] * 3, abs=1e-9)


def test_fit_slope_ignores_bad_points():
    assert math.isnan(fit_slope([0.1], [1.0]))
    assert fit_slope([0.2, 0.1, 0.05], [4.0, math.nan, 0.25]) == pytest.approx(2.0)


def test_zigzag_count():
    theta = 2 * np.pi * np.arange(40) / 40
    assert zigzag_count(np.cos(theta)) == 0
    alt = np.cos(theta) + 0.5 * (-1.0) ** np.arange(40)
    assert zigzag_count(alt) == 40
    assert zigzag_count(np.arange(10.0), periodic=False) == 0


def _report():
    recs = [Record("poisson1d", "composite", 2.0 / n, n_markers=1, err_inf_all=1.0 / n**2, err_inf_masked=0.5 / n**2,
                   err_l2_all=0.3 / n**2, err_l2_masked=0.1 / n**2, forcing_err_inf=1.0 / n, steps=0, runtime_s=0.01)
            for n in (16, 32, 64)]
    return StudyReport(recs, bench.compute_slopes(recs))


def test_compute_slopes():
    rep = _report()
    s = rep.slopes["poisson1d/composite"]
    assert s["err_inf_all"] == pytest.approx(2.0) and s["forcing_err_inf"] == pytest.approx(1.0)
    assert s["n_grids"] == 3


def test_emit_csv_round_trip(tmp_path):
    rep = _report()
    path = tmp_path / "r.csv"
    text = emit(rep, "csv", path)
    assert path.read_text() == text
    assert text.splitlines()[0] == ",".join(COLUMNS)
    back = read_csv(path)
    assert len(back) == 3
    for row, rec in zip(back, rep.records):
        for c in COLUMNS:
            want = getattr(rec, c)
            if isinstance(want, float) and math.isnan(want):
                assert math.isnan(row[c])
            else:
                assert row[c] == want


def test_emit_json_round_trip(tmp_path):
    rep = _report()
    data = json.loads(emit(rep, "json", tmp_path / "r.json"))
    assert [r["dx"] for r in data["records"]] == [r.dx for r in rep.records]
    assert data["records"][0]["ds_dx"] is None  # NaN is emitted as null
    assert data["slopes"]["poisson1d/composite"]["err_inf_all"] == pytest.approx(2.0)


def test_emit_empty_and_unknown(tmp_path):
    empty = StudyReport([])
    assert emit(empty, "csv", tmp_path / "e.csv") == ",".join(COLUMNS) + "\n"
    assert read_csv(tmp_path / "e.csv") == []
    with pytest.raises(ValueError):
        emit(empty, "xml")


def test_empty_study_rejected():
    with pytest.raises(ValueError):
        run_study([])
    with pytest.raises(ValueError):
        bench.poisson1d_tasks(ns=())


def test_study_deterministic_and_ordered():
    tasks = bench.poisson1d_tasks((16, 32, 64), ("composite", "prototypical"))
    a, b = run_study(tasks), run_study(tasks)
    assert [(r.formulation, r.dx) for r in a.records] == [(t[1]["formulation"], 2.0 / t[1]["n"]) for t in tasks]
    for ra, rb in zip(a.records, b.records):
        ka = [v for c, v in zip(COLUMNS, ra.row()) if c != "runtime_s"]
        kb = [v for c, v in zip(COLUMNS, rb.row()) if c != "runtime_s"]
        assert np.array_equal(np.array(ka[2:], float), np.array(kb[2:], float), equal_nan=True)
        assert ka[:2] == kb[:2]


def test_study_jobs_match_serial():
    tasks = bench.poisson1d_tasks((16, 32), ("composite",))
    a, b = run_study(tasks), run_study(tasks, jobs=2)
    assert [r.err_inf_all for r in a.records] == [r.err_inf_all for r in b.records]


def test_failed_run_recorded_and_sweep_continues():
    tasks = [("poisson1d", {"n": 16, "formulation": "bogus"}), ("poisson1d", {"n": 16, "formulation": "composite"})]
    rep = run_study(tasks)
    assert len(rep.records) == 2
    assert not rep.records[0].ok and "bogus" in rep.records[0].message
    assert rep.records[1].ok
    assert rep.failed == [rep.records[0]]


def test_check_report_1d():
    rep = run_study(bench.poisson1d_tasks())
    checks = check_report(rep, "poisson1d")
    assert checks and all(ok for _, ok, _ in checks), [c for c in checks if not c[1]]


def test_cli_poisson1d(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["poisson1d", "--nx", "16", "32", "64", "--formulation", "composite", "--format", "json",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["records"]) == 3
    assert main(["poisson1d", "--nx", "16", "32", "--formulation", "composite"]) == 0
    assert capsys.readouterr().out.startswith(",".join(COLUMNS))


def test_cli_identities_check(capsys):
    assert main(["identities", "--nx", "16", "--check"]) == 0
    assert "PASS" in capsys.readouterr().err


def test_cli_exit_code_on_failed_check(capsys):
    # two grids are too few for the 1D acceptance properties to hold
    status = main(["poisson1d", "--nx", "4", "8", "--formulation", "prototypical", "--check"])
    err = capsys.readouterr().err
    assert status == (1 if "FAIL" in err else 0)


def test_cli_rejects_bad_arguments():
    with pytest.raises(SystemExit):
        main(["poisson1d", "--format", "xml"])
    with pytest.raises(SystemExit):
        main(["couette", "--formulation", "prescribed"])
