"""Offline check of the boundary/corner right-hand-side series.

Expands each stencil in a Taylor series about its base point, subtracts the
tabulated series (written for homogeneous Dirichlet data) and solves for the
remaining coefficients on the tangential derivatives of the boundary data g.
The printed tables are frozen into ``stokes_fdm.stencils``.

Run:  python tools/derive_boundary_terms.py
"""
from fractions import Fraction as F
from math import factorial
import sys

sys.path.insert(0, "src")
from stokes_fdm import stencils as S  # noqa: E402

ORDER = 9


def add(a, b, s=1):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + s * v
        if out[k] == 0:
            del out[k]
    return out


def stencil_functional(points):
    """points: list of (coef, dx, dy) in units of h. Returns {order: {(p,n): c}}."""
    res = {}
    for k in range(ORDER + 1):
        f = {}
        for p in range(k + 1):
            n = k - p
            c = sum(F(cf) * F(dx) ** p * F(dy) ** n for cf, dx, dy in points)
            c /= factorial(p) * factorial(n)
            if c:
                f[(p, n)] = c
        res[k] = f
    return res


def term_functional(term, r):
    kind = term[0]
    if kind == "psi":
        a, b = term[1], term[2]
        return {(a + 4, b): -1, (a + 2, b + 2): -2, (a, b + 4): -1}
    if kind == "dphi1":  # d^k/dy^k of varphi^(r)_1
        k = term[1]
        if r == 1:
            return {(1, k + 2): 1}
        return add({(3, k): 1}, {(1, k + 2): 2})
    if kind == "dphi2":  # d^k/dx^k of varphi^(r)_2
        k = term[1]
        if r == 1:
            return add({(k, 3): 1}, {(k + 2, 1): 2})
        return {(k + 2, 1): 1}
    if kind == "gy":
        return {(0, term[1]): 1}
    if kind == "gx":
        return {(term[1], 0): 1}
    raise ValueError(term)


def series_functional(series, r, hscale=3):
    res = {}
    for hp, coef, term in series:
        f = term_functional(term, r)
        order = hp + hscale
        res[order] = add(res.get(order, {}), {k: coef * v for k, v in f.items()})
    return res


def check(name, points, series, r, gkeys, hscale=3):
    T = stencil_functional(points)
    P = series_functional(series, r, hscale)
    print(f"== {name}")
    corr = []
    for k in range(ORDER + 1):
        R = add(T.get(k, {}), P.get(k, {}), -1)
        rem = dict(R)
        for kind in gkeys if k < ORDER else ():
            key = (0, k) if kind == "gy" else (k, 0)
            if key in rem:
                corr.append((k - hscale, rem.pop(key), (kind, k)))
        if rem:
            print(f"  order {k}: unexplained residual {rem}")
    print("  missing g-terms:", corr)
    return corr


def main():
    # interior
    pts = [(S.INTERIOR[k + 2][l + 2], k, l) for k in range(-2, 3) for l in range(-2, 3)]
    check("interior", pts, S.PSI_SERIES, 1, [], hscale=4)
    for r, table in ((1, S.SIDE_C1), (2, S.SIDE_C2)):
        pts = [(table[k][l + 2], k + 1, l) for k in range(3) for l in range(-2, 3)]
        check(f"side X r={r}", pts, S.SIDE_X_SERIES[r], r, ["gy"])
    for r in (1, 2):
        lam = S.CORNER_LAMBDA[r]
        lb = [(lam, 1, 1), (-F(lam, 2), 2, 1)]
        lu = [(F(lam, 2), 2, -1), (-lam, 1, -1)]
        check(f"corner left-bot r={r}", lb, S.CORNER_SERIES["left-bot"][r], r, ["gy", "gx"])
        check(f"corner left-up r={r}", lu, S.CORNER_SERIES["left-up"][r], r, ["gy", "gx"])


if __name__ == "__main__":
    main()
