"""Axis-aligned (rectilinear) polygonal domains, possibly with holes."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TAU_GEOM = 1e-12

INSIDE, BOUNDARY, OUTSIDE = "inside", "boundary", "outside"

_DIAGONALS = ((1, 1), (-1, 1), (-1, -1), (1, -1))


class InvalidDomain(ValueError):
    """Raised when a domain violates the rectilinear-domain invariants."""


@dataclass(frozen=True)
class BoundaryEdge:
    """A maximal straight boundary segment.

    ``orientation`` is ``"x"`` for an X-edge (the line x = fixed, spanning y in
    ``[a, b]``) and ``"y"`` for a Y-edge (y = fixed, spanning x). ``sigma`` is the
    direction, along the normal axis, that points from the edge into the domain.
    """

    orientation: str
    fixed: float
    a: float
    b: float
    sigma: int
    loop: int = 0

    @property
    def span(self):
        return (self.a, self.b)

    @property
    def length(self):
        return self.b - self.a

    def endpoints(self):
        if self.orientation == "x":
            return (self.fixed, self.a), (self.fixed, self.b)
        return (self.a, self.fixed), (self.b, self.fixed)


@dataclass(frozen=True)
class CornerPoint:
    location: tuple
    x_edge: BoundaryEdge
    y_edge: BoundaryEdge
    quadrant: frozenset = field(default_factory=frozenset)

    @property
    def adjacent_edges(self):
        return (self.x_edge, self.y_edge)

    @property
    def reentrant(self):
        return len(self.quadrant) == 3


def _signed_area(loop):
    p = np.asarray(loop, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _clean(loop, tol=TAU_GEOM):
    """Drop repeated and collinear vertices so every vertex is a true corner."""
    pts = [tuple(float(c) for c in p) for p in loop]
    if len(pts) > 1 and _close(pts[0], pts[-1], tol):
        pts.pop()
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        n = len(pts)
        for k in range(n):
            p0, p1, p2 = pts[k - 1], pts[k], pts[(k + 1) % n]
            if _close(p0, p1, tol):
                del pts[k]
                changed = True
                break
            same_x = abs(p0[0] - p1[0]) <= tol and abs(p1[0] - p2[0]) <= tol
            same_y = abs(p0[1] - p1[1]) <= tol and abs(p1[1] - p2[1]) <= tol
            if same_x or same_y:
                del pts[k]
                changed = True
                break
    return pts


def _close(p, q, tol):
    return abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol


def _loop_edges(loop):
    n = len(loop)
    return [(loop[k], loop[(k + 1) % n]) for k in range(n)]


def _segments_touch(s, t, tol):
    """Do two axis-aligned closed segments share any point?"""
    (x0, y0), (x1, y1) = s
    (u0, v0), (u1, v1) = t
    ax = (min(x0, x1), max(x0, x1))
    ay = (min(y0, y1), max(y0, y1))
    bx = (min(u0, u1), max(u0, u1))
    by = (min(v0, v1), max(v0, v1))
    return ax[0] <= bx[1] + tol and bx[0] <= ax[1] + tol and ay[0] <= by[1] + tol and by[0] <= ay[1] + tol


def _loop_violations(loop, name, tol):
    out = []
    if len(loop) < 2:
        return [f"{name}: fewer than 4 distinct corners {loop}"]
    edges = _loop_edges(loop)
    for p, q in edges:
        dx, dy = abs(p[0] - q[0]) > tol, abs(p[1] - q[1]) > tol
        if dx and dy:
            out.append(f"{name}: non-axis-aligned edge {p} -> {q}")
        elif not (dx or dy):
            out.append(f"{name}: degenerate edge at {p}")
    if out:
        return out
    if len(loop) < 4:
        return [f"{name}: fewer than 4 distinct corners {loop}"]
    n = len(edges)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_touch(edges[i], edges[j], tol):
                out.append(f"{name}: self-intersection between {edges[i]} and {edges[j]}")
    return out


def _point_in_loop(px, py, loop):
    """Even-odd test for points strictly off the loop (vectorized, vertical edges only)."""
    inside = np.zeros(np.broadcast(px, py).shape, dtype=bool)
    for (x0, y0), (x1, y1) in _loop_edges(loop):
        if x0 != x1:
            continue
        lo, hi = min(y0, y1), max(y0, y1)
        crosses = (py >= lo) & (py < hi) & (px < x0)
        inside ^= crosses
    return inside


def _on_loop(px, py, loop, tol):
    on = np.zeros(np.broadcast(px, py).shape, dtype=bool)
    for (x0, y0), (x1, y1) in _loop_edges(loop):
        if x0 == x1:
            lo, hi = min(y0, y1), max(y0, y1)
            on |= (np.abs(px - x0) <= tol) & (py >= lo - tol) & (py <= hi + tol)
        else:
            lo, hi = min(x0, x1), max(x0, x1)
            on |= (np.abs(py - y0) <= tol) & (px >= lo - tol) & (px <= hi + tol)
    return on


class RectilinearDomain:
    """Outer vertex loop plus hole loops, all edges parallel to the axes.

    Loops are cleaned of repeated/collinear vertices and reoriented on
    construction (outer counterclockwise, holes clockwise). Construction
    raises :class:`InvalidDomain` unless ``check=False``.
    """

    def __init__(self, outer: Sequence, holes: Sequence = (), check: bool = True, tol: float = TAU_GEOM):
        self.tol = tol
        outer = _clean(outer, tol)
        holes = [_clean(h, tol) for h in holes]
        if len(outer) >= 3 and _signed_area(outer) < 0:
            outer = outer[::-1]
        holes = [h[::-1] if len(h) >= 3 and _signed_area(h) > 0 else h for h in holes]
        self.outer = tuple(outer)
        self.holes = tuple(tuple(h) for h in holes)
        if check:
            bad = validate(self)
            if bad:
                raise InvalidDomain("; ".join(bad))

    @classmethod
    def rectangle(cls, x0, x1, y0, y1, holes=()):
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], holes)

    @property
    def loops(self):
        return (self.outer,) + self.holes

    def bounding_box(self):
        p = np.asarray(self.outer)
        return float(p[:, 0].min()), float(p[:, 0].max()), float(p[:, 1].min()), float(p[:, 1].max())

    def vertices(self):
        return [v for loop in self.loops for v in loop]

    def normalized(self):
        return RectilinearDomain(self.outer, self.holes, check=False, tol=self.tol)

    def __eq__(self, other):
        return isinstance(other, RectilinearDomain) and self.outer == other.outer and self.holes == other.holes

    def __hash__(self):
        return hash((self.outer, self.holes))

    def __repr__(self):
        return f"RectilinearDomain(outer={list(self.outer)}, holes={[list(h) for h in self.holes]})"

    def scaled(self, origin, h):
        """Copy expressed in lattice units ``(p - origin) / h`` (no validation)."""
        ox, oy = origin
        f = lambda loop: [((x - ox) / h, (y - oy) / h) for x, y in loop]
        d = RectilinearDomain.__new__(RectilinearDomain)
        d.tol = self.tol / h
        d.outer = tuple(f(self.outer))
        d.holes = tuple(tuple(f(hl)) for hl in self.holes)
        return d

    # convenience wrappers
    def edges(self):
        return edges(self)

    def corners(self):
        return corners(self)

    def contains(self, point):
        return contains(self, point)


def validate(domain: RectilinearDomain) -> list[str]:
    """List of invariant violations; empty when the domain is valid."""
    tol = domain.tol
    out = _loop_violations(list(domain.outer), "outer", tol)
    for k, h in enumerate(domain.holes):
        out += _loop_violations(list(h), f"hole {k}", tol)
    if out:
        return out
    if _signed_area(domain.outer) <= 0:
        out.append("outer: loop not counterclockwise")
    for k, h in enumerate(domain.holes):
        if _signed_area(h) >= 0:
            out.append(f"hole {k}: loop not clockwise")
        hx = np.array([p[0] for p in h])
        hy = np.array([p[1] for p in h])
        if _on_loop(hx, hy, domain.outer, tol).any() or not _point_in_loop(hx, hy, domain.outer).all():
            out.append(f"hole {k}: not strictly inside the outer loop {h}")
        for e in _loop_edges(list(h)):
            for f in _loop_edges(list(domain.outer)):
                if _segments_touch(e, f, tol):
                    out.append(f"hole {k}: edge {e} touches the outer loop")
    for i in range(len(domain.holes)):
        for j in range(i + 1, len(domain.holes)):
            a, b = domain.holes[i], domain.holes[j]
            touch = any(_segments_touch(e, f, tol) for e in _loop_edges(list(a)) for f in _loop_edges(list(b)))
            nested = _point_in_loop(np.array([a[0][0]]), np.array([a[0][1]]), b)[0] or _point_in_loop(
                np.array([b[0][0]]), np.array([b[0][1]]), a
            )[0]
            if touch or nested:
                out.append(f"holes {i} and {j} overlap")
    return out


def _edge_of(p, q, loop_id, hole):
    # outer loops run counterclockwise and holes clockwise, so the domain
    # always lies to the left of the direction of travel
    if p[0] == q[0]:
        going_up = q[1] > p[1]
        return BoundaryEdge("x", p[0], min(p[1], q[1]), max(p[1], q[1]), -1 if going_up else 1, loop_id)
    going_right = q[0] > p[0]
    return BoundaryEdge("y", p[1], min(p[0], q[0]), max(p[0], q[0]), 1 if going_right else -1, loop_id)


def edges(domain: RectilinearDomain) -> list[BoundaryEdge]:
    out = []
    for k, loop in enumerate(domain.loops):
        for p, q in _loop_edges(list(loop)):
            out.append(_edge_of(p, q, k, k > 0))
    return out


def contains(domain: RectilinearDomain, point):
    """Classify ``point`` (or arrays of x, y) as inside, boundary or outside."""
    px, py = point
    scalar = np.isscalar(px) and np.isscalar(py)
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    code = classify_points(domain, px, py)
    names = np.array([INSIDE, BOUNDARY, OUTSIDE])
    return str(names[code]) if scalar else names[code]


def classify_points(domain: RectilinearDomain, px, py):
    """Vectorized containment: 0 inside, 1 boundary, 2 outside."""
    tol = domain.tol
    on = np.zeros(np.broadcast(px, py).shape, dtype=bool)
    inside = np.zeros_like(on)
    for loop in domain.loops:
        on |= _on_loop(px, py, loop, tol)
        inside ^= _point_in_loop(px, py, loop)
    return np.where(on, 1, np.where(inside, 0, 2))


def corners(domain: RectilinearDomain) -> list[CornerPoint]:
    es = edges(domain)
    out = []
    x0, x1, y0, y1 = domain.bounding_box()
    eps = 1e-6 * max(x1 - x0, y1 - y0)
    idx = 0
    for loop in domain.loops:
        n = len(loop)
        loop_edges = es[idx: idx + n]
        idx += n
        for k, v in enumerate(loop):
            e_in, e_out = loop_edges[k - 1], loop_edges[k]
            ex = e_in if e_in.orientation == "x" else e_out
            ey = e_out if ex is e_in else e_in
            # probe distance smaller than any edge touching this vertex
            d = min(eps, 0.25 * ex.length, 0.25 * ey.length)
            quad = frozenset(
                dg for dg in _DIAGONALS if contains(domain, (v[0] + d * dg[0], v[1] + d * dg[1])) == INSIDE
            )
            out.append(CornerPoint(tuple(v), ex, ey, quad))
    return out


def load_domain(path_or_obj) -> RectilinearDomain:
    """Read ``{"outer": [[x,y],...], "holes": [[[x,y],...],...]}`` from a path, string or dict."""
    if isinstance(path_or_obj, dict):
        obj = path_or_obj
    else:
        text = str(path_or_obj)
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
        else:
            with open(text) as fh:
                obj = json.load(fh)
    if "outer" not in obj:
        raise InvalidDomain("domain file lacks an 'outer' loop")
    return RectilinearDomain(obj["outer"], obj.get("holes", []))


def dump_domain(domain: RectilinearDomain) -> str:
    return json.dumps({"outer": [list(p) for p in domain.outer], "holes": [[list(p) for p in h] for h in domain.holes]})


# built-in domains of the numerical experiments

def square_domain(a=-1.0, b=1.0):
    return RectilinearDomain.rectangle(a, b, a, b)


def lshape_domain():
    """(-1,1)^2 with the quadrant [0,1) x (-1,0] removed."""
    return RectilinearDomain([(-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1)])


def triply_connected_domain():
    """(-1,1)^2 with three rectangular holes."""
    rect = lambda x0, x1, y0, y1: [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    holes = [
        rect(-0.5, 0.25, -0.5, -0.25),
        rect(0.5, 0.75, -0.75, 0.5),
        rect(-0.75, 0.0, 0.0, 0.75),
    ]
    return RectilinearDomain(rect(-1, 1, -1, 1), holes)
