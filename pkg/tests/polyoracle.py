"""Batched polynomial fields and the side/corner identity checks built on them."""
from fractions import Fraction as Fr
from math import comb

import numpy as np
import sympy as sp

from stokes_fdm import fields as F
from stokes_fdm import stencils as S
from stokes_fdm import taylor as T


def _shift(x0, deg):
    # P[m, a] = C(a, m) x0^(a - m), the Taylor shift of x^a about x0
    P = np.zeros((deg + 1, deg + 1) + np.shape(x0))
    for a in range(deg + 1):
        for m in range(a + 1):
            P[m, a] = comb(a, m) * x0 ** (a - m)
    return P


class PolyField(F.ScalarField):
    """Sum of ``C[a, b, k] x^a y^b``; batch entry ``k`` of a jet uses polynomial ``k``.

    With a 2D ``C`` every batch entry shares one polynomial.
    """

    def __init__(self, C, name="poly"):
        super().__init__(None, name)
        self.C = np.asarray(C, dtype=float)
        self.deg = self.C.shape[0] - 1

    def __call__(self, x, y, order=T.DEFAULT_ORDER):
        X, Y = T.seed(x, y, order)
        d = self.deg
        spec = "ma...,ab...,nb...->mn..." if self.C.ndim == 3 else "ma...,ab,nb...->mn..."
        shifted = np.einsum(spec, _shift(X.value, d), self.C, _shift(Y.value, d))
        c = np.zeros_like(X.c)
        k = min(order, d) + 1
        c[:k, :k] = shifted[:k, :k]
        m, n = np.indices((order + 1, order + 1))
        c[m + n > order] = 0.0
        return T.Jet2(c, order)

    def values(self, x, y):
        return self(x, y, 0).value


def random_poly(rng, deg, batch=None, factor=(0, 0)):
    """Random coefficients of ``x^fx y^fy q`` with ``q`` of degree ``deg - fx - fy``."""
    fx, fy = factor
    qd = deg - fx - fy
    shape = (deg + 1, deg + 1) + (() if batch is None else (batch,))
    C = np.zeros(shape)
    a, b = np.indices((qd + 1, qd + 1))
    mask = a + b <= qd
    q = rng.uniform(-1, 1, (qd + 1, qd + 1) + shape[2:])
    q[~mask] = 0.0
    C[fx: fx + qd + 1, fy: fy + qd + 1] = q
    return C


def single_component(C, r, nu=1.0):
    zero = np.zeros_like(C)
    u1, u2 = (C, zero) if r == 1 else (zero, C)
    return F.StokesProblem.manufactured(PolyField(u1, "u1"), PolyField(u2, "u2"), PolyField(zero, "p"), nu=nu)


def _lookup(problem, r, x, y, order=8):
    psi = problem.psi(x, y, order - 4)[r - 1]
    vx = problem.varphi("x", r, x, y, order - 3)
    vy = problem.varphi("y", r, x, y, order - 3)
    G = problem.g(r, x, y, order)

    def get(term):
        kind = term[0]
        if kind == "psi":
            return psi.partial(term[1], term[2])
        if kind == "dphi1":
            return vx.partial(0, term[1])
        if kind == "dphi2":
            return vy.partial(term[1], 0)
        if kind == "gy":
            return G.partial(0, term[1])
        return G.partial(term[1], 0)

    return get


def _relative(lhs, rhs, scale):
    return np.abs(lhs - rhs) / (scale + np.abs(rhs) + 1e-300)


def side_identity_defect(C, r, orient, sigma, h, t0):
    """Relative defect of a side row for polynomials vanishing on the edge through the origin."""
    prob = single_component(C, r)
    B = C.shape[2]
    if orient == "x":
        pts, series = S.side_x_points(r, sigma), S.SIDE_X_SERIES[r]
        node = (sigma * h + 0 * t0, t0)
        base = (np.zeros(B), t0)
    else:
        pts, series = S.side_y_points(r, sigma), S.SIDE_Y_SERIES[r]
        node = (t0, sigma * h + 0 * t0)
        base = (t0, np.zeros(B))
    U = (prob.u1 if r == 1 else prob.u2)
    lhs = np.zeros(B)
    scale = np.zeros(B)
    for w, di, dj in pts:
        v = U.values(node[0] + di * h, node[1] + dj * h)
        lhs += float(w) * v
        scale += abs(float(w) * v)
    sh = sigma * h
    rhs = sh ** 3 * S.eval_rhs_series(series, sh, _lookup(prob, r, *base))
    return _relative(lhs, rhs, scale)


def corner_identity_defect(C, r, variant, h):
    """Relative defect of a corner row for polynomials vanishing on both lines through the origin."""
    prob = single_component(C, r)
    B = C.shape[2]
    ox, oy = S.CORNER_OFFSET[variant]
    node = (-ox * h, -oy * h)
    lam, (pdi, pdj), (w0, w1) = S.corner_operator(variant, r)
    U = (prob.u1 if r == 1 else prob.u2)
    v0 = U.values(np.full(B, node[0]), np.full(B, node[1]))
    v1 = U.values(np.full(B, node[0] + pdi * h), np.full(B, node[1] + pdj * h))
    lhs = float(w0) * v0 + float(w1) * v1
    scale = abs(float(w0) * v0) + abs(float(w1) * v1)
    series, sign = S.corner_series(variant, r)
    rhs = h ** 3 * S.eval_rhs_series(series, sign * h, _lookup(prob, r, np.zeros(B), np.zeros(B)))
    return _relative(lhs, rhs, scale)


def boundary_identity_report(n_poly=200, deg=8, seed=1):
    """Worst relative defect of every side and corner identity over ``n_poly`` random polynomials."""
    rng = np.random.default_rng(seed)
    worst = {}
    for h in (0.25, 0.125):
        t0 = rng.uniform(-0.5, 0.5, n_poly)
        for r in (1, 2):
            for orient in "xy":
                fac = (1, 0) if orient == "x" else (0, 1)
                C = random_poly(rng, deg, n_poly, fac)
                for sigma in (1, -1):
                    d = side_identity_defect(C, r, orient, sigma, h, t0).max()
                    key = ("side", orient, r, sigma)
                    worst[key] = max(worst.get(key, 0.0), d)
            C = random_poly(rng, deg, n_poly, (1, 1))
            for variant in S.CORNER_OFFSET:
                d = corner_identity_defect(C, r, variant, h).max()
                key = ("corner", variant, r)
                worst[key] = max(worst.get(key, 0.0), d)
    return worst


# ---------------------------------------------------------------------------
# exact rational check of the interior operator

x, y = sp.symbols("x y")


def _q(v):
    v = sp.Rational(v)
    return Fr(int(v.p), int(v.q))


def interior_residual(u, x0, y0, h):
    """``sum C u - h^4 psi_h`` in exact arithmetic for a sympy polynomial ``u``."""
    lap = lambda f: sp.diff(f, x, 2) + sp.diff(f, y, 2)
    lhs = sum(
        _q(S.INTERIOR[k + 2][l + 2]) * _q(u.subs({x: x0 + k * h, y: y0 + l * h}))
        for k in range(-2, 3) for l in range(-2, 3)
    )
    psi = -lap(lap(u))
    lookup = {
        ("psi", a, b): _q(sp.diff(psi, x, a, y, b).subs({x: x0, y: y0})) for a in range(5) for b in range(5)
    }
    return lhs - Fr(h) ** 4 * S.eval_rhs_series(S.PSI_SERIES, Fr(h), lookup)


def interior_exact_through(deg, x0=sp.Rational(1, 3), y0=sp.Rational(-2, 7), h=sp.Rational(1, 5)):
    """Monomials of total degree <= ``deg`` with a nonzero rational residual."""
    return [(a, d - a) for d in range(deg + 1) for a in range(d + 1)
            if interior_residual(x ** a * y ** (d - a), x0, y0, h) != 0]
