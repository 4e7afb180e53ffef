"""Coefficient tables and right-hand-side series for the sixth-order scheme.

Everything here is exact rational data (``fractions.Fraction``) plus small
evaluators. Grids, fields and assembly live elsewhere; this module only knows
about offsets, weights and which field partials a series needs.

Series terms are tuples ``(power_of_h, coefficient, term)`` where ``term`` is
one of

``("psi", a, b)``
    the partial d^(a+b) psi / dx^a dy^b of the biharmonic source,
``("dphi1", k)``
    the k-th tangential (y) derivative of the X-edge boundary function,
``("dphi2", k)``
    the k-th tangential (x) derivative of the Y-edge boundary function,
``("gy", k)`` / ``("gx", k)``
    the k-th y- / x-derivative of the Dirichlet data along the edge through
    the base point. These carry the inhomogeneous-boundary corrections.
"""
from __future__ import annotations

from fractions import Fraction as F
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "INTERIOR",
    "SIDE_C1",
    "SIDE_C2",
    "CORNER_LAMBDA",
    "PSI_SERIES",
    "SIDE_X_SERIES",
    "SIDE_Y_SERIES",
    "CORNER_SERIES",
    "D2_STENCILS",
    "MissingPartial",
    "SegmentTooShort",
    "apply_interior",
    "eval_rhs_series",
    "corner_operator",
    "corner_series",
    "side_x_points",
    "side_y_points",
    "interior_points",
    "second_derivative_1d",
]


class MissingPartial(KeyError):
    """A series referenced a field partial the caller cannot supply."""


class SegmentTooShort(ValueError):
    """A grid line segment has too few nodes for the one-sided stencils."""


# ---------------------------------------------------------------------------
# 25-point interior operator, indexed [k + 2][l + 2]

def _interior_table():
    t = [[F(0)] * 5 for _ in range(5)]
    vals = {
        (0, 0): F(-13),
        (2, 2): F(-1, 36),
        (2, 0): F(-1, 2),
        (2, 1): F(-2, 9),
        (1, 1): F(2, 9),
        (1, 0): F(4),
    }
    for (a, b), v in vals.items():
        for sa in (-1, 1):
            for sb in (-1, 1):
                for k, l in ((a, b), (b, a)):
                    t[sa * k + 2][sb * l + 2] = v
    return tuple(tuple(row) for row in t)


INTERIOR = _interior_table()

# 15-point side operators, indexed [k][l + 2] with k the step away from the edge
SIDE_C1 = (
    (F(-2), F(11), F(-18), F(11), F(-2)),
    (F(17, 20), F(-49, 10), F(81, 10), F(-49, 10), F(17, 20)),
    (F(-2, 45), F(23, 45), F(-14, 15), F(23, 45), F(-2, 45)),
)
SIDE_C2 = (
    (F(107, 120), F(-67, 15), F(203, 20), F(-67, 15), F(107, 120)),
    (F(7, 30), F(-1, 30), F(-17, 5), F(-1, 30), F(7, 30)),
    (F(1, 24), F(1, 5), F(31, 60), F(1, 5), F(1, 24)),
)
_SIDE = {1: SIDE_C1, 2: SIDE_C2}

CORNER_LAMBDA = {1: -4, 2: -2}


def _psi(a, b):
    return ("psi", a, b)


def _p1(k):
    return ("dphi1", k)


def _p2(k):
    return ("dphi2", k)


def _scaled(power, scale, items):
    return [(power, F(scale) * F(c), t) for c, t in items]


# psi + h^2/6 lap(psi) + h^4 (bilap(psi)/80 + psi_xxyy/90)
PSI_SERIES = tuple(
    [(0, F(1), _psi(0, 0))]
    + _scaled(2, F(1, 6), [(1, _psi(2, 0)), (1, _psi(0, 2))])
    + [
        (4, F(1, 80), _psi(4, 0)),
        (4, F(2, 80) + F(1, 90), _psi(2, 2)),
        (4, F(1, 80), _psi(0, 4)),
    ]
)

# Inhomogeneous-boundary corrections. Derived offline by expanding each
# stencil about its base point (tools/derive_boundary_terms.py).
_SIDE_G = {
    1: [(-1, F(11, 6), ('gy', 2)), (1, F(-25, 24), ('gy', 4)), (3, F(-959, 2160), ('gy', 6)), (5, F(1153, 24192), ('gy', 8))],
    2: [(-3, F(1, 1), ('gy', 0)), (-1, F(11, 30), ('gy', 2)), (1, F(-109, 360), ('gy', 4)), (3, F(-1129, 10800), ('gy', 6)), (5, F(11, 604800), ('gy', 8))],
}

SIDE_X_SERIES = {
    1: tuple(
        [
            (0, F(1), _p1(0)),
            (2, F(-7, 20), _p1(2)),
            (3, F(-1, 4), _psi(0, 2)),
            (4, F(-133, 360), _p1(4)),
            (4, F(-3, 10), _psi(1, 2)),
            (5, F(-5, 24), _psi(2, 2)),
            (5, F(1, 16), _psi(0, 4)),
        ]
        + _SIDE_G[1]
    ),
    2: tuple(
        [
            (0, F(1), _p1(0)),
            (1, F(-3, 2), _psi(0, 0)),
            (2, F(1, 5), _p1(2)),
            (2, F(-5, 4), _psi(1, 0)),
            (3, F(-3, 4), _psi(2, 0)),
            (3, F(-3, 10), _psi(0, 2)),
            (4, F(-1, 360), _p1(4)),
            (4, F(-43, 120), _psi(3, 0)),
            (4, F(-31, 120), _psi(1, 2)),
            (5, F(-23, 160), _psi(4, 0)),
            (5, F(-13, 80), _psi(2, 2)),
            (5, F(-7, 480), _psi(0, 4)),
        ]
        + _SIDE_G[2]
    ),
}


def _transpose_term(term):
    kind = term[0]
    if kind == "psi":
        return ("psi", term[2], term[1])
    return {"dphi1": "dphi2", "dphi2": "dphi1", "gy": "gx", "gx": "gy"}[kind], term[1]


# Y-edge series are the x<->y transposes of the X-edge series of the other
# component; the transcribed Y-edge series are checked against this in tests.
SIDE_Y_TRANSCRIBED = {
    2: (
        (0, F(1), _p2(0)),
        (2, F(-7, 20), _p2(2)),
        (3, F(-1, 4), _psi(2, 0)),
        (4, F(-133, 360), _p2(4)),
        (4, F(-3, 10), _psi(2, 1)),
        (5, F(1, 16), _psi(4, 0)),
        (5, F(-5, 24), _psi(2, 2)),
    ),
    1: (
        (0, F(1), _p2(0)),
        (1, F(-3, 2), _psi(0, 0)),
        (2, F(1, 5), _p2(2)),
        (2, F(-5, 4), _psi(0, 1)),
        (3, F(-3, 10), _psi(2, 0)),
        (3, F(-3, 4), _psi(0, 2)),
        (4, F(-1, 360), _p2(4)),
        (4, F(-31, 120), _psi(2, 1)),
        (4, F(-43, 120), _psi(0, 3)),
        (5, F(-7, 480), _psi(4, 0)),
        (5, F(-13, 80), _psi(2, 2)),
        (5, F(-23, 160), _psi(0, 4)),
    ),
}

SIDE_Y_SERIES = {
    r: tuple((p, c, _transpose_term(t)) for p, c, t in SIDE_X_SERIES[3 - r]) for r in (1, 2)
}


def _corner_left_bot_1():
    return (
        [(0, 1, _p2(0))]
        + _scaled(1, 1, [(1, _p2(1)), (-1, _p1(1)), (F(-1, 2), _psi(0, 0))])
        + _scaled(2, 1, [(F(2, 3), _p2(2)), (F(-1, 2), _p1(2)), (F(-1, 2), _psi(1, 0)),
                         (F(1, 6), _psi(0, 1))])
        + _scaled(3, F(1, 9), [(2, _p2(3)), (F(-1, 2), _p1(3)), (F(-13, 4), _psi(2, 0)),
                               (F(-1, 2), _psi(1, 1)), (F(5, 4), _psi(0, 2))])
        + _scaled(4, 1, [(F(13, 360), _p2(4)), (F(1, 36), _p1(4)), (F(-5, 36), _psi(3, 0)),
                         (F(-1, 10), _psi(2, 1)), (F(1, 36), _psi(1, 2)),
                         (F(1, 24), _psi(0, 3))])
        + _scaled(5, F(1, 60), [(1, _p1(5)), (F(-59, 24), _psi(4, 0)), (-3, _psi(3, 1)),
                                (F(-1, 4), _psi(2, 2)), (1, _psi(1, 3)),
                                (F(1, 24), _psi(0, 4))])
    )


def _corner_left_bot_2():
    return (
        [(0, 1, _p2(0))]
        + _scaled(1, 1, [(1, _p2(1)), (F(-1, 4), _psi(0, 0))])
        + _scaled(2, 1, [(F(1, 2), _p2(2)), (F(-1, 6), _p1(2)), (F(-1, 3), _psi(1, 0)),
                         (F(-1, 12), _psi(0, 1))])
        + _scaled(3, F(1, 36), [(5, _p2(3)), (-2, _p1(3)), (F(-13, 2), _psi(2, 0)),
                                (-4, _psi(1, 1)), (F(5, 2), _psi(0, 2))])
        + _scaled(4, F(1, 12), [(F(13, 45), _p2(4)), (F(1, 8), _p1(4)), (F(-7, 8), _psi(3, 0)),
                                (F(-67, 90), _psi(2, 1)), (F(1, 4), _psi(1, 2)),
                                (F(29, 90), _psi(0, 3))])
        + _scaled(5, F(-1, 80), [(F(1, 6), _p2(5)), (F(-1, 2), _p1(5)),
                                 (F(59, 36), _psi(4, 0)), (F(13, 6), _psi(3, 1)),
                                 (F(1, 6), _psi(2, 2)), (-1, _psi(1, 3)),
                                 (F(-1, 36), _psi(0, 4))])
    )


def _corner_left_up_1():
    return (
        [(0, 1, _p2(0))]
        + _scaled(1, 1, [(1, _p2(1)), (-1, _p1(1)), (F(1, 2), _psi(0, 0))])
        + _scaled(2, 1, [(F(2, 3), _p2(2)), (F(1, 2), _p1(2)), (F(1, 2), _psi(1, 0)),
                         (F(1, 6), _psi(0, 1))])
        + _scaled(3, F(1, 9), [(2, _p2(3)), (F(-1, 2), _p1(3)), (F(13, 4), _psi(2, 0)),
                               (F(-1, 2), _psi(1, 1)), (F(-5, 4), _psi(0, 2))])
        + _scaled(4, 1, [(F(13, 360), _p2(4)), (F(-1, 36), _p1(4)), (F(5, 36), _psi(3, 0)),
                         (F(-1, 10), _psi(2, 1)), (F(-1, 36), _psi(1, 2)),
                         (F(1, 24), _psi(0, 3))])
        + _scaled(5, F(1, 60), [(1, _p1(5)), (F(59, 24), _psi(4, 0)), (-3, _psi(3, 1)),
                                (F(1, 4), _psi(2, 2)), (1, _psi(1, 3)),
                                (F(-1, 24), _psi(0, 4))])
    )


def _corner_left_up_2():
    return (
        [(0, 1, _p2(0))]
        + _scaled(1, 1, [(1, _p2(1)), (F(1, 4), _psi(0, 0))])
        + _scaled(2, 1, [(F(1, 2), _p2(2)), (F(1, 6), _p1(2)), (F(1, 3), _psi(1, 0)),
                         (F(-1, 12), _psi(0, 1))])
        + _scaled(3, F(1, 36), [(5, _p2(3)), (-2, _p1(3)), (F(13, 2), _psi(2, 0)),
                                (-4, _psi(1, 1)), (F(-5, 2), _psi(0, 2))])
        + _scaled(4, F(1, 12), [(F(13, 45), _p2(4)), (F(-1, 8), _p1(4)), (F(7, 8), _psi(3, 0)),
                                (F(-67, 90), _psi(2, 1)), (F(-1, 4), _psi(1, 2)),
                                (F(29, 90), _psi(0, 3))])
        + _scaled(5, F(-1, 80), [(F(1, 6), _p2(5)), (F(-1, 2), _p1(5)),
                                 (F(-59, 36), _psi(4, 0)), (F(13, 6), _psi(3, 1)),
                                 (F(-1, 6), _psi(2, 2)), (-1, _psi(1, 3)),
                                 (F(1, 36), _psi(0, 4))])
    )


_CORNER_G = {
    ("left-bot", 1): [(-3, F(-2, 1), ('gy', 0)), (-2, F(-2, 1), ('gy', 1)), (-1, F(-1, 1), ('gy', 2)), (-1, F(2, 1), ('gx', 2)), (0, F(-4, 3), ('gy', 3)), (0, F(2, 1), ('gx', 3)), (1, F(-7, 12), ('gy', 4)), (1, F(2, 3), ('gx', 4)), (2, F(3, 20), ('gy', 5)), (3, F(49, 360), ('gy', 6)), (3, F(-17, 90), ('gx', 6)), (4, F(13, 315), ('gy', 7)), (4, F(-4, 45), ('gx', 7)), (5, F(13, 20160), ('gy', 8)), (5, F(-143, 5040), ('gx', 8))],
    ("left-bot", 2): [(-3, F(-1, 1), ('gy', 0)), (-2, F(-1, 1), ('gy', 1)), (-1, F(-1, 2), ('gy', 2)), (-1, F(1, 1), ('gx', 2)), (0, F(-1, 6), ('gy', 3)), (0, F(1, 1), ('gx', 3)), (1, F(-7, 24), ('gy', 4)), (1, F(1, 3), ('gx', 4)), (2, F(-11, 120), ('gy', 5)), (2, F(-1, 12), ('gx', 5)), (3, F(49, 720), ('gy', 6)), (3, F(-17, 180), ('gx', 6)), (4, F(403, 15120), ('gy', 7)), (4, F(-23, 480), ('gx', 7)), (5, F(13, 40320), ('gy', 8)), (5, F(-143, 10080), ('gx', 8))],
    ("left-up", 1): [(-3, F(2, 1), ('gy', 0)), (-2, F(-2, 1), ('gy', 1)), (-1, F(1, 1), ('gy', 2)), (-1, F(-2, 1), ('gx', 2)), (0, F(-4, 3), ('gy', 3)), (0, F(-2, 1), ('gx', 3)), (1, F(7, 12), ('gy', 4)), (1, F(-2, 3), ('gx', 4)), (2, F(3, 20), ('gy', 5)), (3, F(-49, 360), ('gy', 6)), (3, F(17, 90), ('gx', 6)), (4, F(13, 315), ('gy', 7)), (4, F(4, 45), ('gx', 7)), (5, F(-13, 20160), ('gy', 8)), (5, F(143, 5040), ('gx', 8))],
    ("left-up", 2): [(-3, F(1, 1), ('gy', 0)), (-2, F(-1, 1), ('gy', 1)), (-1, F(1, 2), ('gy', 2)), (-1, F(-1, 1), ('gx', 2)), (0, F(-1, 6), ('gy', 3)), (0, F(-1, 1), ('gx', 3)), (1, F(7, 24), ('gy', 4)), (1, F(-1, 3), ('gx', 4)), (2, F(-11, 120), ('gy', 5)), (2, F(1, 12), ('gx', 5)), (3, F(-49, 720), ('gy', 6)), (3, F(17, 180), ('gx', 6)), (4, F(403, 15120), ('gy', 7)), (4, F(23, 480), ('gx', 7)), (5, F(-13, 40320), ('gy', 8)), (5, F(143, 10080), ('gx', 8))],
}


def _frac(series):
    return tuple((p, F(c), t) for p, c, t in series)


CORNER_SERIES = {
    "left-bot": {
        1: _frac(_corner_left_bot_1() + _CORNER_G[("left-bot", 1)]),
        2: _frac(_corner_left_bot_2() + _CORNER_G[("left-bot", 2)]),
    },
    "left-up": {
        1: _frac(_corner_left_up_1() + _CORNER_G[("left-up", 1)]),
        2: _frac(_corner_left_up_2() + _CORNER_G[("left-up", 2)]),
    },
}

# right variants evaluate a left series at -h
_CORNER_SOURCE = {
    "left-bot": ("left-bot", 1),
    "left-up": ("left-up", 1),
    "right-bot": ("left-up", -1),
    "right-up": ("left-bot", -1),
}

# diagonal direction from the node to its corner; partner step along x
CORNER_OFFSET = {
    "left-bot": (-1, -1),
    "left-up": (-1, 1),
    "right-bot": (1, -1),
    "right-up": (1, 1),
}

# sixth-order second-derivative weights: offsets -> weight
D2_STENCILS = {
    "central-7pt": dict(zip(range(-3, 4), (
        F(1, 90), F(-3, 20), F(3, 2), F(-49, 18), F(3, 2), F(-3, 20), F(1, 90)))),
    "boundary-8pt-offset0": dict(zip(range(0, 8), (
        F(469, 90), F(-223, 10), F(879, 20), F(-949, 18), F(41), F(-201, 10),
        F(1019, 180), F(-7, 10)))),
    "boundary-8pt-offset1": dict(zip(range(-1, 7), (
        F(7, 10), F(-7, 18), F(-27, 10), F(19, 4), F(-67, 18), F(9, 5), F(-1, 2),
        F(11, 180)))),
    "boundary-8pt-offset2": dict(zip(range(-2, 6), (
        F(-11, 180), F(107, 90), F(-21, 10), F(13, 18), F(17, 36), F(-3, 10),
        F(4, 45), F(-1, 90)))),
}


# ---------------------------------------------------------------------------
# stencil geometry as (weight, di, dj) lists

def interior_points():
    return [(INTERIOR[k + 2][l + 2], k, l) for k in range(-2, 3) for l in range(-2, 3)]


def side_x_points(r: int, sigma: int):
    """Offsets of the X-edge operator for component ``r``, relative to the node."""
    t = _SIDE[r]
    return [(t[k][l + 2], sigma * k, l) for k in range(3) for l in range(-2, 3)]


def side_y_points(r: int, sigma: int):
    """Offsets of the Y-edge operator: the transposed table of the other component."""
    t = _SIDE[3 - r]
    return [(t[l][k + 2], k, sigma * l) for k in range(-2, 3) for l in range(3)]


def corner_operator(variant: str, r: int):
    """Return ``(lambda_r, partner_offset, (w_node, w_partner))`` for a corner row."""
    lam = CORNER_LAMBDA[r]
    if variant not in CORNER_OFFSET:
        raise ValueError(f"unknown corner variant {variant!r}")
    step = 1 if variant.startswith("left") else -1
    if variant.endswith("bot"):
        w = (F(lam), -F(lam, 2))
    else:
        w = (-F(lam), F(lam, 2))
    return lam, (step, 0), w


def corner_series(variant: str, r: int):
    """Series and the sign of h it is evaluated with, for a corner variant."""
    src, sign = _CORNER_SOURCE[variant]
    return CORNER_SERIES[src][r], sign


# ---------------------------------------------------------------------------
# evaluators

def apply_interior(values) -> float:
    """Weighted sum of a 5x5 block of samples, ``values[k + 2][l + 2]``.

    ``k`` runs along x and ``l`` along y. Works on nested lists of Fractions
    (exact) or on arrays whose first two axes are the 5x5 block.
    """
    if isinstance(values, np.ndarray):
        w = np.array(INTERIOR, dtype=float)
        return np.tensordot(w, values, axes=([0, 1], [0, 1]))
    return sum(INTERIOR[a][b] * values[a][b] for a in range(5) for b in range(5))


def eval_rhs_series(series: Sequence, signed_h, lookup: Callable | Mapping):
    """Evaluate ``sum coeff * signed_h**power * partial`` over a series.

    ``lookup`` maps term descriptors to values (scalars or arrays); a mapping
    or a callable are both accepted. Missing terms raise :class:`MissingPartial`.
    """
    get = lookup.__getitem__ if isinstance(lookup, Mapping) else lookup
    total = 0
    for power, coeff, term in series:
        try:
            val = get(term)
        except (KeyError, IndexError) as exc:
            raise MissingPartial(term) from exc
        if isinstance(signed_h, F) or isinstance(val, F):
            total = total + coeff * F(signed_h) ** power * val
        else:
            total = total + float(coeff) * signed_h ** power * val
    return total


def second_derivative_1d(samples, position_case: str, h=1.0, index: int | None = None):
    """Sixth-order approximation of a'' at one node of a uniform 1D line.

    ``samples`` is the whole line segment and ``index`` the node. For the
    one-sided cases the stencil opens toward increasing index; reverse the
    samples to open the other way. With ``index=None`` the stencil is centred
    so that its leftmost weight hits ``samples[0]``.
    """
    w = D2_STENCILS[position_case]
    lo = min(w)
    if index is None:
        index = -lo
    if index + lo < 0 or index + max(w) >= len(samples):
        raise SegmentTooShort(
            f"{position_case} needs offsets {lo}..{max(w)} around index {index}, "
            f"segment has {len(samples)} samples"
        )
    exact = all(isinstance(samples[index + k], (int, F)) for k in w) and isinstance(h, (int, F))
    if exact:
        return sum(c * samples[index + k] for k, c in w.items()) / F(h) ** 2
    return sum(float(c) * samples[index + k] for k, c in w.items()) / h ** 2
