"""Uniform grids on rectilinear domains and the node classification of the scheme.

All geometry is converted to integer lattice units anchored at the lower-left
corner of the bounding box, so every membership test is an exact integer
comparison.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo

INTERIOR, SIDE_X, SIDE_Y, CORNER_ADJ, SPECIAL, BOUNDARY = range(6)
CLASS_NAMES = {
    INTERIOR: "interior",
    SIDE_X: "side-x",
    SIDE_Y: "side-y",
    CORNER_ADJ: "corner-adj",
    SPECIAL: "special",
    BOUNDARY: "boundary",
}
# precedence level of each class, higher wins
_LEVEL = {SPECIAL: 3, CORNER_ADJ: 2, SIDE_X: 1, SIDE_Y: 1, INTERIOR: 0}

# direction from the node to its diagonal corner -> variant name
VARIANT_OF_DIRECTION = {(-1, -1): "left-bot", (-1, 1): "left-up", (1, -1): "right-bot", (1, 1): "right-up"}


class GridError(ValueError):
    pass


class NonconformingMesh(GridError):
    pass


class FeatureTooSmall(GridError):
    pass


class AmbiguousClassification(GridError):
    def __init__(self, msg, nodes=()):
        super().__init__(msg)
        self.nodes = list(nodes)


class UncoveredNode(GridError):
    def __init__(self, msg, nodes=()):
        super().__init__(msg)
        self.nodes = list(nodes)


@dataclass(frozen=True)
class LatticeEdge:
    orientation: str
    fixed: int
    a: int
    b: int
    sigma: int


@dataclass(frozen=True)
class LatticeCorner:
    i: int
    j: int
    quadrant: frozenset
    x_dir: int  # direction (+1/-1 in y) in which the adjacent X-edge leaves the corner
    y_dir: int  # direction (+1/-1 in x) in which the adjacent Y-edge leaves the corner


@dataclass(frozen=True)
class NodeClass:
    kind: int
    edge: Optional[int] = None
    sigma: Optional[int] = None
    corner: Optional[int] = None
    variant: Optional[str] = None
    axis: Optional[str] = None
    direction: Optional[int] = None

    @property
    def name(self):
        return CLASS_NAMES[self.kind]

    def detail(self):
        if self.kind in (SIDE_X, SIDE_Y):
            return f"edge={self.edge};sigma={self.sigma:+d}"
        if self.kind == CORNER_ADJ:
            return f"corner={self.corner};variant={self.variant}"
        if self.kind == SPECIAL:
            return f"corner={self.corner};axis={self.axis};direction={self.direction:+d}"
        return ""


def _to_int(v, origin, h, tol):
    k = (v - origin) / h
    r = round(k)
    if abs(k - r) * h > tol:
        raise NonconformingMesh(f"coordinate {v} is not on the grid of size h={h}")
    return int(r)


class Grid:
    """Nodes of the closed domain on the lattice ``origin + h * (i, j)``.

    ``code[j, i]`` is 0 for strictly interior nodes, 1 on the boundary and 2
    outside. ``index[j, i]`` is the unknown ordinal of interior nodes (row
    major, j outer) and -1 elsewhere.
    """

    def __init__(self, domain: geo.RectilinearDomain, h: float, check_features: bool = True):
        if not h > 0:
            raise GridError("mesh size must be positive")
        self.domain = domain
        self.h = float(h)
        x0, x1, y0, y1 = domain.bounding_box()
        self.origin = (x0, y0)
        tol = domain.tol
        self.nx = _to_int(x1, x0, h, tol)
        self.ny = _to_int(y1, y0, h, tol)
        loops = [[(_to_int(x, x0, h, tol), _to_int(y, y0, h, tol)) for x, y in loop] for loop in domain.loops]
        self.int_domain = geo.RectilinearDomain(loops[0], loops[1:], check=False, tol=0.0)

        self.edges = [LatticeEdge(e.orientation, int(e.fixed), int(e.a), int(e.b), e.sigma) for e in geo.edges(self.int_domain)]
        self.real_edges = geo.edges(domain)
        self.corners = []
        for c in geo.corners(self.int_domain):
            i, j = int(c.location[0]), int(c.location[1])
            xe, ye = c.x_edge, c.y_edge
            x_dir = 1 if max(xe.a, xe.b) > j else -1
            y_dir = 1 if max(ye.a, ye.b) > i else -1
            self.corners.append(LatticeCorner(i, j, c.quadrant, x_dir, y_dir))
        if check_features:
            self._check_features()

        J, I = np.mgrid[0: self.ny + 1, 0: self.nx + 1]
        self.code = geo.classify_points(self.int_domain, I.astype(float), J.astype(float))
        interior = self.code == 0
        self.index = np.full(self.code.shape, -1, dtype=np.int64)
        self.index[interior] = np.arange(int(interior.sum()))
        jj, ii = np.nonzero(interior)  # row-major: j outer, i inner
        self.nodes_i = ii
        self.nodes_j = jj
        bj, bi = np.nonzero(self.code == 1)
        self.boundary_i = bi
        self.boundary_j = bj

    # -- geometry helpers -------------------------------------------------------
    def _check_features(self):
        small = [e for e in self.edges if e.b - e.a < 4]
        if small:
            e = small[0]
            raise FeatureTooSmall(
                f"edge {self._edge_str(e)} has length {(e.b - e.a) * self.h:g} < 4h = {4 * self.h:g}"
            )
        for o in ("x", "y"):
            es = [e for e in self.edges if e.orientation == o]
            for p in range(len(es)):
                for q in range(p + 1, len(es)):
                    e, f = es[p], es[q]
                    gap = abs(e.fixed - f.fixed)
                    if gap == 0 or gap >= 4:
                        continue
                    lo, hi = max(e.a, f.a), min(e.b, f.b)
                    if hi <= lo:
                        continue
                    mid_fixed = 0.5 * (e.fixed + f.fixed)
                    mid_span = 0.5 * (lo + hi)
                    pt = (mid_fixed, mid_span) if o == "x" else (mid_span, mid_fixed)
                    if geo.contains(self.int_domain, pt) == geo.INSIDE:
                        raise FeatureTooSmall(
                            f"gap {gap * self.h:g} between {self._edge_str(e)} and {self._edge_str(f)} is below 4h"
                        )

    def _edge_str(self, e):
        x0, y0 = self.origin
        h = self.h
        if e.orientation == "x":
            return f"x={x0 + e.fixed * h:g} y in [{y0 + e.a * h:g},{y0 + e.b * h:g}]"
        return f"y={y0 + e.fixed * h:g} x in [{x0 + e.a * h:g},{x0 + e.b * h:g}]"

    @property
    def n_unknowns(self):
        return len(self.nodes_i)

    @property
    def n_nodes(self):
        return int((self.code <= 1).sum())

    def x(self, i):
        return self.origin[0] + np.asarray(i) * self.h

    def y(self, j):
        return self.origin[1] + np.asarray(j) * self.h

    def code_at(self, i, j):
        """Containment code with out-of-range indices reported as outside."""
        i = np.asarray(i)
        j = np.asarray(j)
        ok = (i >= 0) & (i <= self.nx) & (j >= 0) & (j <= self.ny)
        out = np.full(np.broadcast(i, j).shape, 2, dtype=self.code.dtype)
        ic = np.clip(i, 0, self.nx)
        jc = np.clip(j, 0, self.ny)
        out[ok] = self.code[jc, ic][ok] if out.ndim else self.code[jc, ic]
        return out if out.ndim else int(out)

    def index_at(self, i, j):
        i = np.asarray(i)
        j = np.asarray(j)
        ok = (i >= 0) & (i <= self.nx) & (j >= 0) & (j <= self.ny)
        ic = np.clip(i, 0, self.nx)
        jc = np.clip(j, 0, self.ny)
        return np.where(ok, self.index[jc, ic], -1)

    def node_index(self):
        """Map ``(i, j) -> ordinal`` for the strictly interior nodes."""
        return {(int(i), int(j)): k for k, (i, j) in enumerate(zip(self.nodes_i, self.nodes_j))}

    def boundary_nodes(self):
        return {(int(i), int(j)) for i, j in zip(self.boundary_i, self.boundary_j)}

    def __repr__(self):
        return f"Grid(h={self.h:g}, nodes={self.n_nodes}, unknowns={self.n_unknowns})"


def build(domain: geo.RectilinearDomain, h: float) -> Grid:
    return Grid(domain, h)


class Classification:
    """Per-unknown node classes stored as arrays (ordered like the unknowns)."""

    def __init__(self, grid, kind, edge, sigma, corner, variant, axis, direction):
        self.grid = grid
        self.kind = kind
        self.edge = edge
        self.sigma = sigma
        self.corner = corner
        self.variant = variant  # index into VARIANTS, -1 if unused
        self.axis = axis  # 0 for x, 1 for y, -1 unused
        self.direction = direction

    VARIANTS = ("left-bot", "left-up", "right-bot", "right-up")

    def __len__(self):
        return len(self.kind)

    def node_class(self, k) -> NodeClass:
        kind = int(self.kind[k])
        if kind in (SIDE_X, SIDE_Y):
            return NodeClass(kind, edge=int(self.edge[k]), sigma=int(self.sigma[k]))
        if kind == CORNER_ADJ:
            return NodeClass(kind, corner=int(self.corner[k]), variant=self.VARIANTS[self.variant[k]])
        if kind == SPECIAL:
            return NodeClass(
                kind, corner=int(self.corner[k]), axis="xy"[self.axis[k]], direction=int(self.direction[k])
            )
        return NodeClass(kind)

    def __getitem__(self, ij):
        k = int(self.grid.index_at(*ij))
        if k < 0:
            if self.grid.code_at(*ij) == 1:
                return NodeClass(BOUNDARY)
            raise KeyError(f"{ij} is not a grid node")
        return self.node_class(k)

    def counts(self):
        return {CLASS_NAMES[c]: int((self.kind == c).sum()) for c in (INTERIOR, SIDE_X, SIDE_Y, CORNER_ADJ, SPECIAL)}

    def members(self, kind):
        return np.nonzero(self.kind == kind)[0]


def classify(grid: Grid, domain=None) -> Classification:
    """Assign every strictly interior node its row class.

    Precedence is special > corner-adjacent > side > interior; conflicts on a
    single level raise :class:`AmbiguousClassification` and nodes matching no
    class raise :class:`UncoveredNode`.
    """
    n = grid.n_unknowns
    ni, nj = grid.nodes_i, grid.nodes_j
    hits = {lvl: np.zeros(n, dtype=np.int64) for lvl in (0, 1, 2, 3)}
    kind = np.full(n, -1, dtype=np.int64)
    level = np.full(n, -1, dtype=np.int64)
    edge = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n, dtype=np.int64)
    corner = np.full(n, -1, dtype=np.int64)
    variant = np.full(n, -1, dtype=np.int64)
    axis = np.full(n, -1, dtype=np.int64)
    direction = np.zeros(n, dtype=np.int64)

    arrays = {"edge": edge, "sigma": sigma, "corner": corner, "variant": variant, "axis": axis,
              "direction": direction}

    def mark(k, cls, **detail):
        lvl = _LEVEL[cls]
        hits[lvl][k] += 1
        if lvl > level[k]:
            level[k] = lvl
            kind[k] = cls
            for name, val in detail.items():
                arrays[name][k] = val

    # interior: all 25 offsets in the closed domain
    ok = np.ones(n, dtype=bool)
    for di in range(-2, 3):
        for dj in range(-2, 3):
            ok &= grid.code_at(ni + di, nj + dj) <= 1
    k_int = np.nonzero(ok)[0]
    hits[0][k_int] += 1
    level[k_int] = 0
    kind[k_int] = INTERIOR

    # sides
    for e_id, e in enumerate(grid.edges):
        span = np.arange(e.a + 2, e.b - 1)
        if e.orientation == "x":
            idx = grid.index_at(np.full_like(span, e.fixed + e.sigma), span)
            cls = SIDE_X
        else:
            idx = grid.index_at(span, np.full_like(span, e.fixed + e.sigma))
            cls = SIDE_Y
        idx = idx[idx >= 0]
        for k in idx:
            mark(int(k), cls, edge=e_id, sigma=e.sigma)

    # corner-adjacent and special nodes
    for c_id, c in enumerate(grid.corners):
        for d in c.quadrant:
            k = int(grid.index_at(c.i + d[0], c.j + d[1]))
            if k >= 0:
                v = Classification.VARIANTS.index(VARIANT_OF_DIRECTION[(-d[0], -d[1])])
                mark(k, CORNER_ADJ, corner=c_id, variant=v)
        # node one step before the corner, on the line of the Y-edge
        s = c.y_dir
        k = int(grid.index_at(c.i - s, c.j))
        if k >= 0 and grid.code_at(c.i + s, c.j) == 1:
            mark(k, SPECIAL, corner=c_id, axis=0, direction=s)
        s = c.x_dir
        k = int(grid.index_at(c.i, c.j - s))
        if k >= 0 and grid.code_at(c.i, c.j + s) == 1:
            mark(k, SPECIAL, corner=c_id, axis=1, direction=s)

    dup = np.zeros(n, dtype=bool)
    for lvl in (0, 1, 2, 3):
        dup |= (level == lvl) & (hits[lvl] > 1)
    if dup.any():
        bad = [(int(ni[k]), int(nj[k])) for k in np.nonzero(dup)[0]]
        raise AmbiguousClassification(f"{len(bad)} node(s) match two classes of equal precedence: {bad[:8]}", bad)
    if (kind < 0).any():
        bad = [(int(ni[k]), int(nj[k])) for k in np.nonzero(kind < 0)[0]]
        raise UncoveredNode(f"{len(bad)} node(s) fit no stencil class: {bad[:8]}", bad)
    return Classification(grid, kind, edge, sigma, corner, variant, axis, direction)


def dump_csv(grid: Grid, cls: Classification, path=None) -> str:
    """CSV rows ``i,j,x,y,class,detail`` for every node of the closed domain."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "x", "y", "class", "detail"])
    jj, ii = np.nonzero(grid.code <= 1)
    for i, j in zip(ii, jj):
        nc = cls[(int(i), int(j))]
        w.writerow([int(i), int(j), repr(float(grid.x(i))), repr(float(grid.y(j))), nc.name, nc.detail()])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
