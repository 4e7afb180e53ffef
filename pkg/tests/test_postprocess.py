import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import polyoracle as po
from stokes_fdm import fields as F
from stokes_fdm import geometry as geo
from stokes_fdm import grid as G
from stokes_fdm import postprocess as PP
from stokes_fdm.stencils import SegmentTooShort


@settings(max_examples=40, deadline=None)
@given(st.integers(8, 30), st.integers(0, 7), st.floats(-1, 1), st.sampled_from([0.5, 0.125, 0.01]))
def test_segment_second_derivative_exact_through_degree_seven(n, deg, x0, h):
    t = x0 + h * np.arange(n)
    d2 = PP.second_derivative_segment(t ** deg, h)
    ref = deg * (deg - 1) * t ** max(deg - 2, 0) if deg >= 2 else np.zeros(n)
    np.testing.assert_allclose(d2, ref, atol=1e-8 * max(1.0, np.abs(t ** deg).max()) / h ** 2)


def test_segment_second_derivative_is_not_exact_for_degree_eight():
    t = np.arange(10.0)
    d2 = PP.second_derivative_segment(t ** 8, 1.0)
    assert np.abs(d2 - 56 * t ** 6).max() > 1.0
    with pytest.raises(SegmentTooShort):
        PP.second_derivative_segment(np.ones(7), 1.0)


def _exact_solution(problem, grid):
    jj, ii = np.nonzero(grid.code <= 1)
    vals = []
    for r in (1, 2):
        a = np.full(grid.code.shape, np.nan)
        a[jj, ii] = problem.exact_velocity(r, grid.x(ii), grid.y(jj))
        vals.append(a)
    return PP.SolutionField(grid, *vals)


@pytest.mark.parametrize("nu", [1e-3, 1.0, 40.0])
def test_gradient_recovery_is_exact_for_degree_seven_velocity(nu):
    rng = np.random.default_rng(9)
    prob = F.StokesProblem.manufactured(po.PolyField(po.random_poly(rng, 7)), po.PolyField(po.random_poly(rng, 7)),
                                        F.example1().p, nu=nu)
    grid = G.build(geo.lshape_domain(), 1 / 8)
    sol = _exact_solution(prob, grid)
    px, py = PP.pressure_gradient(prob, grid, sol)
    assert not sol.flagged.any()
    err = PP.linf_errors(prob, sol)
    assert err["u"] == 0.0
    assert err["gradp"] < 1e-9 * max(1.0, nu)


def test_short_segments_are_flagged_not_silently_used():
    # 0.25 gaps between the holes hold only five nodes at h = 1/16
    prob = F.example2()
    grid = G.build(geo.triply_connected_domain(), 1 / 16)
    sol = _exact_solution(prob, grid)
    PP.pressure_gradient(prob, grid, sol)
    assert sol.flagged.any()
    assert np.isnan(sol.px[sol.flagged]).all()
    ok = sol.mask & ~sol.flagged
    assert np.isfinite(sol.px[ok]).all()


def test_observed_order_formula():
    for p in (0.5, 2.0, 6.0):
        assert PP.observed_order(3.0, 3.0 * 2 ** -p, 0.1, 0.05) == pytest.approx(p)
    assert PP.observed_order(1.0, 1e-3, 1.0, 0.1) == pytest.approx(3.0)
    assert math.isnan(PP.observed_order(0.0, 1.0, 0.1, 0.05))
    assert math.isnan(PP.observed_order(float("nan"), 1.0, 0.1, 0.05))


def _synthetic_report(p=6.0, c=2.0):
    rows = []
    for k in (2, 3, 4, 5):
        h = 2.0 ** -k
        e = c * h ** p
        rows.append(PP.LevelResult(k, h, n_unknowns=4 ** k, errors={"u1": e, "u2": e / 2, "u": e},
                                   gradp={1.0: 3 * e}, kappa={1: 10 * 16 ** k, 2: 5 * 16 ** k, "block": 10 * 16 ** k},
                                   residual={1: 1e-16, 2: 1e-16}, runtime=0.1 * k))
    return PP.ConvergenceReport(rows, [1.0], (1, 2), "synthetic")


def test_report_orders_and_ratios_are_exact_for_synthetic_data():
    rep = _synthetic_report()
    for lvl, o in rep.orders("u").items():
        assert o == pytest.approx(6.0)
    for lvl, o in rep.orders(("gradp", 1.0)).items():
        assert o == pytest.approx(6.0)
    assert all(v == pytest.approx(16.0) for v in rep.kappa_ratios().values())


def test_failed_rows_break_the_order_chain():
    rep = _synthetic_report()
    rep.rows[1].status = "FeatureTooSmall: tiny"
    o = rep.orders("u")
    assert 3 not in o and 4 not in o and 5 in o


def test_report_serializations():
    rep = _synthetic_report()
    csv_text = rep.to_csv()
    assert csv_text == _synthetic_report().to_csv()
    lines = csv_text.strip().splitlines()
    assert len(lines) == 5
    assert "runtime" not in lines[0]
    assert "runtime" in rep.to_markdown()
    assert "runtime" in rep.timings_csv().splitlines()[0]
    data = json.loads(rep.to_json())
    assert data["problem"] == "synthetic"
    assert [row["level"] for row in data["rows"]] == [2, 3, 4, 5]
    assert data["rows"][0]["gradp"] == {"1": pytest.approx(3 * 2.0 * 4.0 ** -6)}
    split = rep.to_csv(split=True)
    assert "u1" in split.splitlines()[0] and "u2" in split.splitlines()[0]


def test_study_on_square_reaches_sixth_order_and_dumps_fields(tmp_path):
    prob = F.example1()
    rep = PP.convergence_study(prob, geo.square_domain(), [3, 4], keep=True)
    assert [r.status for r in rep.rows] == ["ok", "ok"]
    assert rep.orders("u")[4] > 5.5
    assert rep.rows[1].errors["u"] == pytest.approx(2.8524e-05, rel=1e-3)
    path = tmp_path / "f.csv"
    PP.dump_fields(prob, rep.rows[1].solution, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,u1,u2,px,py,err_u1,err_u2"
    assert len(lines) - 1 == rep.rows[1].solution.grid.n_nodes


def test_study_records_infeasible_levels():
    rep = PP.convergence_study(F.example2(), geo.triply_connected_domain(), [3, 4], compute_kappa=False)
    assert rep.rows[0].status.startswith("FeatureTooSmall")
    assert rep.rows[1].status == "ok"
    with pytest.raises(ValueError):
        PP.convergence_study(F.example2(), geo.triply_connected_domain(), [4])
