import csv
import io
import json
import math

import mpmath
import pytest

import rcl


def test_hankel_matches_mpmath():
    for n, x in [(0, 0.5), (3, 12.0), (40, 55.0)]:
        ref = complex(mpmath.hankel1(n, x))
        assert abs(rcl.hankel1(n, x) - ref) <= 1e-13 * abs(ref)


def test_circular_solution_is_accurate():
    p = rcl.CircularProblem()
    p.k, p.N1, p.N2 = 10.0, 60, 60
    sol = rcl.solve_circular(p)
    assert sol.max_residual <= 1e-12
    (row,) = sol.errors(samples=2000)
    assert max(row["u_re"], row["u_im"], row["v_re"], row["v_im"]) < 1e-8
    # Continuity across the interface r = a.
    assert abs(sol.u(1.0, 0.3) - sol.v(1.0, 0.3)) < 1e-10


def test_far_field_matches_series():
    p = rcl.CircularProblem()
    p.k, p.N1, p.N2 = 10.0, 60, 60
    sol = rcl.solve_circular(p)
    rho = [1.0, 1.7, 2.5]
    m = sol.problem.M
    for r, val in zip(rho, sol.far_field(rho, 0.0)):
        assert abs(val - rcl.exact_scattering_series(10.0, 0.5, r, 0.0, m)) < 1e-8


def test_rect_study_reports_orders():
    base = rcl.RectProblem()
    base.N = 2
    rows = rcl.rect_study(base, [32, 64])
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert rows[0]["orders"] == [None] * 4
    assert all(o > 1.0 for o in rows[1]["orders"])


def test_config_errors_raise_value_error():
    with pytest.raises(ValueError, match="^k:"):
        rcl.run("circular", k=-1)
    p = rcl.RectProblem()
    p.N = 0
    with pytest.raises(ValueError, match="^N:"):
        p.validate()


def test_cli_run_returns_csv():
    text = rcl.run("circular", k=10, N=[12, 24], samples=200)
    assert text.startswith("# rcl version " + rcl.__version__)
    rows = list(csv.reader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))
    assert rows[0] == ["k", "N", "M", "e_u^R", "e_u^I", "e_v^R", "e_v^I"]
    assert float(rows[2][3]) < float(rows[1][3])


def test_lshape_export():
    field = rcl.lshape(mesh=32)
    assert set(field) >= {"points", "re", "im", "region", "meta"}
    assert len(field["re"]) == len(field["points"])
    assert field["meta"]["scatterer"]["shape"] == "lshape"
    assert all(math.isfinite(v) for v in field["re"])
    json.dumps(field)
