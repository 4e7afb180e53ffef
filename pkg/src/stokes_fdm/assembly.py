"""Assembly of the two decoupled sparse systems ``A_r u_r = b_r``."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import grid as G
from . import stencils as S
from .fields import StokesProblem
from .taylor import DEFAULT_ORDER

SPECIAL_RULES = ("taylor", "extrapolate")


class DroppedTerm(NamedTuple):
    component: int
    row_kind: str
    node: tuple
    point: tuple
    term: tuple


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    component: int
    grid: G.Grid
    classes: G.Classification
    row_kind: np.ndarray
    boundary_values: np.ndarray  # g_r on the lattice, NaN off the boundary
    dropped: list = field(default_factory=list)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def row_meta(self):
        return [G.CLASS_NAMES[int(k)] for k in self.row_kind]

    def export_matrix(self, path):
        scipy.io.mmwrite(str(path), self.matrix, comment=f"component {self.component}, h={self.grid.h!r}")

    def export_rhs(self, path):
        np.savetxt(str(path), self.rhs, fmt="%.17e")


def _lagrange_weights_at(target, nodes):
    out = []
    for m in nodes:
        w = Fraction(1)
        for q in nodes:
            if q != m:
                w *= Fraction(target - q, m - q)
        out.append(w)
    return out


class _Sampler:
    """Evaluates (and sanitizes) the field partials a set of series needs."""

    def __init__(self, problem: StokesProblem, order: int, components, chunk: int, log: list):
        self.problem = problem
        self.order = order
        self.components = tuple(components)
        self.chunk = chunk
        self.log = log

    def _limits(self):
        return {"psi": self.order - 4, "dphi1": self.order - 3, "dphi2": self.order - 3, "gx": self.order,
                "gy": self.order}

    def sample(self, series_by_r, x, y, row_kind, nodes):
        """Return ``{r: {term: values}}`` for the base points ``(x, y)``."""
        lim = self._limits()
        need = {}
        for r in self.components:
            for _, _, t in series_by_r[r]:
                need.setdefault(t[0], 0)
                deg = t[1] + t[2] if t[0] == "psi" else t[1]
                need[t[0]] = max(need[t[0]], deg)
                if deg > lim[t[0]]:
                    raise S.MissingPartial(t)
        out = {r: {} for r in self.components}
        n = len(x)
        p = self.problem
        for s in range(0, n, self.chunk):
            xs, ys = x[s: s + self.chunk], y[s: s + self.chunk]
            jets = {}
            if "psi" in need:
                psi = p.psi(xs, ys, need["psi"])
                for r in self.components:
                    jets[("psi", r)] = psi[r - 1]
            for r in self.components:
                if "dphi1" in need:
                    jets[("dphi1", r)] = p.varphi("x", r, xs, ys, need["dphi1"])
                if "dphi2" in need:
                    jets[("dphi2", r)] = p.varphi("y", r, xs, ys, need["dphi2"])
                if "gx" in need or "gy" in need:
                    jets[("g", r)] = p.g(r, xs, ys, max(need.get("gx", 0), need.get("gy", 0)))
            for r in self.components:
                for t in dict.fromkeys(t for _, _, t in series_by_r[r]):
                    if t[0] == "psi":
                        v = jets[("psi", r)].partial(t[1], t[2])
                    elif t[0] == "dphi1":
                        v = jets[("dphi1", r)].partial(0, t[1])
                    elif t[0] == "dphi2":
                        v = jets[("dphi2", r)].partial(t[1], 0)
                    elif t[0] == "gy":
                        v = jets[("g", r)].partial(0, t[1])
                    else:
                        v = jets[("g", r)].partial(t[1], 0)
                    out[r].setdefault(t, []).append(v)
        res = {}
        for r in self.components:
            res[r] = {}
            for t, parts in out[r].items():
                v = np.concatenate(parts) if parts else np.zeros(0)
                bad = ~np.isfinite(v)
                if bad.any():
                    v = np.where(bad, 0.0, v)
                    for k in np.nonzero(bad)[0]:
                        self.log.append(
                            DroppedTerm(r, row_kind, tuple(int(c) for c in nodes[k]), (float(x[k]), float(y[k])), t)
                        )
                res[r][t] = v
        return res


def assemble_components(domain, grid: G.Grid, problem: StokesProblem, components=(1, 2), classes=None,
                        order: int = DEFAULT_ORDER, special_rule: str = "taylor", chunk: int = 4096,
                        special_degree: int = 7):
    """Assemble the systems for the requested velocity components.

    Field jets are evaluated once per base point and shared by both
    components. Returns ``{r: SparseSystem}``.
    """
    if special_rule not in SPECIAL_RULES:
        raise ValueError(f"special_rule must be one of {SPECIAL_RULES}")
    cls = classes if classes is not None else G.classify(grid, domain)
    h = grid.h
    n = grid.n_unknowns
    ni, nj = grid.nodes_i, grid.nodes_j
    log_all: list = []
    sampler = _Sampler(problem, order, components, chunk, log_all)

    # Dirichlet data on the boundary lattice nodes
    bx, by = grid.x(grid.boundary_i), grid.y(grid.boundary_j)
    gval = {}
    for r in components:
        arr = np.full(grid.code.shape, np.nan)
        v = np.asarray(problem.g(r, bx, by, 0).value, dtype=float) if len(bx) else np.zeros(0)
        bad = ~np.isfinite(v)
        for k in np.nonzero(bad)[0]:
            log_all.append(DroppedTerm(r, "boundary", (int(grid.boundary_i[k]), int(grid.boundary_j[k])),
                                       (float(bx[k]), float(by[k])), ("g", 0, 0)))
        arr[grid.boundary_j, grid.boundary_i] = np.where(bad, 0.0, v)
        gval[r] = arr

    rows = {r: [] for r in components}
    cols = {r: [] for r in components}
    vals = {r: [] for r in components}
    rhs = {r: np.zeros(n) for r in components}

    def stencil(r, ks, points):
        """Scatter weighted offsets for rows ``ks``; boundary hits go to the rhs."""
        for w, di, dj in points:
            w = float(w)
            if w == 0.0:
                continue
            ii, jj = ni[ks] + di, nj[ks] + dj
            idx = grid.index_at(ii, jj)
            inside = idx >= 0
            rows[r].append(ks[inside])
            cols[r].append(idx[inside])
            vals[r].append(np.full(int(inside.sum()), w))
            bnd = ~inside
            if bnd.any():
                code = grid.code_at(ii[bnd], jj[bnd])
                if (code != 1).any():
                    bad = ks[bnd][code != 1]
                    raise G.UncoveredNode(
                        "stencil reaches outside the closed domain at nodes "
                        f"{[(int(ni[k]), int(nj[k])) for k in bad[:5]]}",
                        [(int(ni[k]), int(nj[k])) for k in bad],
                    )
                rhs[r][ks[bnd]] -= w * gval[r][jj[bnd], ii[bnd]]

    # interior rows
    ks = cls.members(G.INTERIOR)
    if len(ks):
        nodes = np.stack([ni[ks], nj[ks]], 1)
        sam = sampler.sample({r: S.PSI_SERIES for r in components}, grid.x(ni[ks]), grid.y(nj[ks]), "interior",
                             nodes)
        for r in components:
            stencil(r, ks, S.interior_points())
            rhs[r][ks] += h ** 4 * S.eval_rhs_series(S.PSI_SERIES, h, sam[r])

    # side rows, grouped by edge
    for kind, orient in ((G.SIDE_X, "x"), (G.SIDE_Y, "y")):
        ks_all = cls.members(kind)
        for e_id in np.unique(cls.edge[ks_all]):
            ks = ks_all[cls.edge[ks_all] == e_id]
            e = grid.edges[int(e_id)]
            sigma = e.sigma
            if orient == "x":
                bxp = np.full(len(ks), grid.x(e.fixed))
                byp = grid.y(nj[ks])
                series = S.SIDE_X_SERIES
                pts = S.side_x_points
            else:
                bxp = grid.x(ni[ks])
                byp = np.full(len(ks), grid.y(e.fixed))
                series = S.SIDE_Y_SERIES
                pts = S.side_y_points
            nodes = np.stack([ni[ks], nj[ks]], 1)
            sam = sampler.sample(series, bxp, byp, G.CLASS_NAMES[kind], nodes)
            sh = sigma * h
            for r in components:
                stencil(r, ks, pts(r, sigma))
                rhs[r][ks] += sh ** 3 * S.eval_rhs_series(series[r], sh, sam[r])

    # corner rows
    for k in cls.members(G.CORNER_ADJ):
        c = grid.corners[int(cls.corner[k])]
        variant = G.Classification.VARIANTS[int(cls.variant[k])]
        ks = np.array([k])
        nodes = np.array([[ni[k], nj[k]]])
        by_r = {}
        for r in components:
            series, sign = S.corner_series(variant, r)
            by_r[r] = series
        sam = sampler.sample(by_r, np.array([grid.x(c.i)]), np.array([grid.y(c.j)]), "corner-adj", nodes)
        for r in components:
            lam, (pdi, pdj), (w0, w1) = S.corner_operator(variant, r)
            partner = int(grid.index_at(ni[k] + pdi, nj[k] + pdj))
            if partner < 0:
                raise G.UncoveredNode(f"corner partner of node {(int(ni[k]), int(nj[k]))} is not an unknown")
            stencil(r, ks, [(w0, 0, 0), (w1, pdi, pdj)])
            series, sign = S.corner_series(variant, r)
            rhs[r][k] += h ** 3 * S.eval_rhs_series(series, sign * h, sam[r])[0]

    # special rows: identity with a boundary-line value one step past the corner
    for k in cls.members(G.SPECIAL):
        c = grid.corners[int(cls.corner[k])]
        s = int(cls.direction[k])
        axis = int(cls.axis[k])
        ks = np.array([k])
        for r in components:
            rows[r].append(ks)
            cols[r].append(ks)
            vals[r].append(np.ones(1))
            if special_rule == "taylor":
                jet = problem.g(r, np.array([grid.x(c.i)]), np.array([grid.y(c.j)]), order)
                total = 0.0
                fact = 1.0
                for q in range(min(order, special_degree) + 1):
                    if q:
                        fact *= q
                    d = jet.partial(q, 0)[0] if axis == 0 else jet.partial(0, q)[0]
                    if not np.isfinite(d):
                        log_all.append(DroppedTerm(r, "special", (int(ni[k]), int(nj[k])),
                                                   (float(grid.x(c.i)), float(grid.y(c.j))),
                                                   ("gx" if axis == 0 else "gy", q)))
                        continue
                    total += d * (-s * h) ** q / fact
                rhs[r][k] = total
            else:
                e_len = _edge_length_from(grid, c, axis, s)
                deg = min(special_degree, e_len)
                ms = list(range(deg + 1))
                wts = _lagrange_weights_at(-1, ms)
                if axis == 0:
                    gv = [gval[r][c.j, c.i + s * m] for m in ms]
                else:
                    gv = [gval[r][c.j + s * m, c.i] for m in ms]
                rhs[r][k] = float(sum(float(w) * v for w, v in zip(wts, gv)))

    out = {}
    for r in components:
        rr = np.concatenate(rows[r]) if rows[r] else np.zeros(0, dtype=np.int64)
        cc = np.concatenate(cols[r]) if cols[r] else np.zeros(0, dtype=np.int64)
        vv = np.concatenate(vals[r]) if vals[r] else np.zeros(0)
        A = sp.csr_matrix((vv, (rr, cc)), shape=(n, n))
        A.sum_duplicates()
        A.sort_indices()
        dropped = [d for d in log_all if d.component == r]
        out[r] = SparseSystem(A, rhs[r], r, grid, cls, cls.kind.copy(), gval[r], dropped)
    return out


def _edge_length_from(grid, c, axis, s):
    """Number of lattice steps along the edge leaving corner ``c`` in direction ``s``."""
    m = 0
    if axis == 0:
        while grid.code_at(c.i + s * (m + 1), c.j) == 1 and m < 12:
            m += 1
    else:
        while grid.code_at(c.i, c.j + s * (m + 1)) == 1 and m < 12:
            m += 1
    return m


def assemble(domain, grid: G.Grid, problem: StokesProblem, r: int, **kw) -> SparseSystem:
    """The system ``A_r u_r = b_r`` for one velocity component."""
    return assemble_components(domain, grid, problem, (r,), **kw)[r]
