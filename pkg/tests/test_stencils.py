from fractions import Fraction as Fr

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from stokes_fdm import assembly as A
from stokes_fdm import fields as F
from stokes_fdm import geometry as geo
from stokes_fdm import grid as G
from stokes_fdm import stencils as S

import polyoracle as po

x, y = po.x, po.y
interior_residual = po.interior_residual


def test_interior_operator_is_exact_for_degree_nine_monomials():
    x0, y0, h = sp.Rational(1, 3), sp.Rational(-2, 7), sp.Rational(1, 5)
    for deg in range(10):
        for a in range(deg + 1):
            assert interior_residual(x ** a * y ** (deg - a), x0, y0, h) == 0, (a, deg - a)


def test_interior_operator_is_not_exact_at_degree_ten():
    x0, y0, h = sp.Rational(1, 3), sp.Rational(-2, 7), sp.Rational(1, 5)
    assert any(interior_residual(x ** a * y ** (10 - a), x0, y0, h) != 0 for a in range(11))


def test_interior_weights_are_symmetric_and_sum_to_zero():
    t = S.INTERIOR
    assert sum(sum(row) for row in t) == 0
    for k in range(5):
        for l in range(5):
            assert t[k][l] == t[l][k] == t[4 - k][l] == t[k][4 - l]


def test_side_y_series_are_transposes_of_side_x():
    for r in (1, 2):
        assert sorted(S.SIDE_Y_TRANSCRIBED[r]) == sorted(t for t in S.SIDE_Y_SERIES[r] if t[2][0] != "gx")


@pytest.mark.parametrize("case", sorted(S.D2_STENCILS))
def test_second_derivative_stencils_exact_through_degree_seven(case):
    w = S.D2_STENCILS[case]
    for deg in range(8):
        samples = [Fr(k) ** deg for k in range(-4, 9)]
        got = S.second_derivative_1d(samples, case, h=1, index=4)
        want = deg * (deg - 1) * Fr(0) ** (deg - 2) if deg >= 2 else 0
        assert got == want, (case, deg)
    samples = [Fr(k) ** 8 for k in range(-4, 9)]
    assert S.second_derivative_1d(samples, case, h=1, index=4) != 0
    with pytest.raises(S.SegmentTooShort):
        S.second_derivative_1d([1.0] * (len(w) - 1), case)


def test_corner_operator_shapes():
    for variant in S.CORNER_OFFSET:
        for r in (1, 2):
            lam, (pdi, pdj), (w0, w1) = S.corner_operator(variant, r)
            assert lam == S.CORNER_LAMBDA[r]
            assert pdj == 0 and abs(pdi) == 1
            # the two-point operator annihilates constants
            assert w0 + 2 * w1 == 0
    with pytest.raises(ValueError):
        S.corner_operator("middle", 1)


# ---------------------------------------------------------------------------
# side and corner identities on polynomials vanishing on the boundary lines

def test_side_and_corner_identities_hold_for_degree_eight():
    worst = po.boundary_identity_report(n_poly=200)
    assert len(worst) == 16
    bad = {k: v for k, v in worst.items() if not v <= 1e-11}
    assert not bad


def test_identities_detect_degree_ten_terms():
    rng = np.random.default_rng(3)
    C = po.random_poly(rng, 10, 20, (1, 1))
    assert po.corner_identity_defect(C, 1, "left-bot", 0.25).max() > 1e-8
    C = po.random_poly(rng, 10, 20, (1, 0))
    assert po.side_identity_defect(C, 2, "x", 1, 0.25, np.zeros(20)).max() > 1e-8


def test_right_variants_are_mirrored_left_variants():
    # reflecting x -> -x maps a left corner row onto the matching right one
    rng = np.random.default_rng(5)
    C = po.random_poly(rng, 8, 30, (1, 1))
    a, b = np.indices(C.shape[:2])
    mirrored = C * ((-1.0) ** a)[..., None]
    for left, right in (("left-bot", "right-bot"), ("left-up", "right-up")):
        for r in (1, 2):
            assert po.corner_identity_defect(mirrored, r, right, 0.125).max() < 1e-11
            assert po.corner_identity_defect(C, r, left, 0.125).max() < 1e-11


# ---------------------------------------------------------------------------
# assembled rows with nonzero boundary data

L_DOM = geo.lshape_domain()
L_GRID = G.build(L_DOM, 0.25)
L_CLS = G.classify(L_GRID, L_DOM)


def test_lshape_quarter_grid_covers_every_row_variant():
    c = L_CLS.counts()
    assert all(v > 0 for v in c.values())
    assert sorted({L_CLS.VARIANTS[v] for v in L_CLS.variant[L_CLS.kind == G.CORNER_ADJ]}) == sorted(S.CORNER_OFFSET)


def poly_problem(C1, C2, Cp, nu=1.0):
    return F.StokesProblem.manufactured(po.PolyField(C1), po.PolyField(C2), po.PolyField(Cp), nu=nu)


def row_residuals(problem, grid=L_GRID, cls=L_CLS, special_degree=8):
    systems = A.assemble_components(L_DOM, grid, problem, classes=cls, special_degree=special_degree)
    xs, ys = grid.x(grid.nodes_i), grid.y(grid.nodes_j)
    out = {}
    for r, sy in systems.items():
        u = problem.exact_velocity(r, xs, ys)
        res = sy.matrix @ u - sy.rhs
        scale = abs(sy.matrix) @ np.abs(u) + np.abs(sy.rhs)
        out[r] = (np.abs(res) / scale, sy.row_kind)
    return out


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_assembled_rows_are_exact_for_degree_eight_data(seed, nu):
    rng = np.random.default_rng(seed)
    prob = poly_problem(po.random_poly(rng, 8), po.random_poly(rng, 8), po.random_poly(rng, 3), nu)
    for r, (res, kinds) in row_residuals(prob).items():
        for kind in np.unique(kinds):
            assert res[kinds == kind].max() < 1e-11, (r, G.CLASS_NAMES[int(kind)])


def test_default_special_degree_is_exact_only_through_seven():
    rng = np.random.default_rng(11)
    prob = poly_problem(po.random_poly(rng, 8), po.random_poly(rng, 8), po.random_poly(rng, 1))
    for special_degree, ok in ((7, False), (8, True)):
        res, kinds = row_residuals(prob, special_degree=special_degree)[1]
        assert (res[kinds == G.SPECIAL].max() < 1e-11) == ok


def test_discrete_solution_reproduces_polynomials():
    from stokes_fdm import solver

    rng = np.random.default_rng(2)
    prob = poly_problem(po.random_poly(rng, 8), po.random_poly(rng, 8), po.random_poly(rng, 2), 0.3)
    grid = G.build(L_DOM, 0.125)
    systems = A.assemble_components(L_DOM, grid, prob, special_degree=8)
    xs, ys = grid.x(grid.nodes_i), grid.y(grid.nodes_j)
    for r, sy in systems.items():
        u = solver.solve(solver.factor(sy.matrix), sy.rhs)
        np.testing.assert_allclose(u, prob.exact_velocity(r, xs, ys), atol=1e-10)


def test_extrapolation_rule_is_exact_for_low_degree_boundary_data():
    rng = np.random.default_rng(8)
    prob = poly_problem(po.random_poly(rng, 4), po.random_poly(rng, 4), po.random_poly(rng, 1))
    systems = A.assemble_components(L_DOM, L_GRID, prob, classes=L_CLS, special_rule="extrapolate")
    xs, ys = L_GRID.x(L_GRID.nodes_i), L_GRID.y(L_GRID.nodes_j)
    for r, sy in systems.items():
        res = sy.matrix @ prob.exact_velocity(r, xs, ys) - sy.rhs
        assert np.abs(res[sy.row_kind == G.SPECIAL]).max() < 1e-12
    with pytest.raises(ValueError):
        A.assemble_components(L_DOM, L_GRID, prob, special_rule="guess")
