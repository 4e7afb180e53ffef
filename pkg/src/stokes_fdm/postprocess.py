"""Pressure-gradient recovery, error norms and convergence tables."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import assembly as A
from . import grid as G
from . import solver as S
from .fields import NoExactSolution
from .stencils import D2_STENCILS, SegmentTooShort

log = logging.getLogger(__name__)

_W = {name: (min(w), np.array([float(c) for _, c in sorted(w.items())])) for name, w in D2_STENCILS.items()}
_ONE_SIDED = ("boundary-8pt-offset0", "boundary-8pt-offset1", "boundary-8pt-offset2")
MIN_SEGMENT = 8


@dataclass
class SolutionField:
    """Velocity on the full lattice (NaN outside the closed domain)."""

    grid: G.Grid
    u1: np.ndarray
    u2: np.ndarray
    px: np.ndarray | None = None
    py: np.ndarray | None = None
    flagged: np.ndarray | None = None

    def u(self, r):
        return self.u1 if r == 1 else self.u2

    @property
    def mask(self):
        return self.grid.code <= 1


def lattice_values(grid: G.Grid, boundary_values, unknowns):
    """Scatter solved unknowns into a lattice array already holding g on the boundary."""
    out = np.array(boundary_values, dtype=float, copy=True)
    out[grid.code == 2] = np.nan
    out[grid.nodes_j, grid.nodes_i] = unknowns
    return out


def _segments(mask_line):
    """Maximal runs of True as (start, stop) pairs."""
    m = np.concatenate(([False], mask_line, [False])).astype(np.int8)
    d = np.diff(m)
    return list(zip(np.nonzero(d == 1)[0], np.nonzero(d == -1)[0]))


def second_derivative_segment(values, h):
    """Sixth-order a'' at every node of one grid-line segment.

    Central 7-point weights where three neighbours exist on both sides and the
    one-sided 8-point variants near the two ends.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < MIN_SEGMENT:
        raise SegmentTooShort(f"segment has {n} nodes, need at least {MIN_SEGMENT}")
    out = np.empty(n)
    lo, w = _W["central-7pt"]
    if n >= 7:
        out[3:n - 3] = np.correlate(v, w, mode="valid")
    for t in range(3):
        lo, w = _W[_ONE_SIDED[t]]
        out[t] = w @ v[t + lo: t + lo + len(w)]
        out[n - 1 - t] = w @ v[::-1][t + lo: t + lo + len(w)]
    return out / h ** 2


def laplacian(grid: G.Grid, values):
    """Per-node Laplacian from x- and y-line second differences.

    Returns ``(lap, flagged)``. Nodes on a line segment shorter than eight
    nodes are flagged and get NaN.
    """
    V = np.asarray(values, dtype=float)
    mask = grid.code <= 1
    dxx = np.full(V.shape, np.nan)
    dyy = np.full(V.shape, np.nan)
    flagged = np.zeros(V.shape, dtype=bool)
    short = 0
    for j in range(V.shape[0]):
        for a, b in _segments(mask[j]):
            try:
                dxx[j, a:b] = second_derivative_segment(V[j, a:b], grid.h)
            except SegmentTooShort:
                flagged[j, a:b] = True
                short += 1
    for i in range(V.shape[1]):
        for a, b in _segments(mask[:, i]):
            try:
                dyy[a:b, i] = second_derivative_segment(V[a:b, i], grid.h)
            except SegmentTooShort:
                flagged[a:b, i] = True
                short += 1
    if short:
        log.warning("%d grid-line segments shorter than %d nodes; their nodes are flagged", short, MIN_SEGMENT)
    lap = dxx + dyy
    lap[flagged | ~mask] = np.nan
    return lap, flagged


def pressure_gradient(problem, grid: G.Grid, solution: SolutionField, nu=None):
    """``(p_x)_h = f1 + nu Lap_h u1`` and ``(p_y)_h = f2 + nu Lap_h u2`` on the lattice."""
    nu = problem.nu if nu is None else nu
    prob = problem if nu == problem.nu else problem.with_nu(nu)
    jj, ii = np.nonzero(solution.mask)
    F1, F2 = prob.f(grid.x(ii), grid.y(jj), 0)
    out = []
    flagged = np.zeros(grid.code.shape, dtype=bool)
    for r, Fr in ((1, F1), (2, F2)):
        lap, fl = laplacian(grid, solution.u(r))
        flagged |= fl
        g = np.full(grid.code.shape, np.nan)
        g[jj, ii] = np.asarray(Fr.value, dtype=float) + nu * lap[jj, ii]
        out.append(g)
    solution.px, solution.py = out
    solution.flagged = flagged
    return out[0], out[1]


def linf_errors(problem, solution: SolutionField):
    """Max-norm velocity errors per component and the pressure-gradient error.

    Returns ``{"u1", "u2", "u", "gradp"}``; nodes where the exact value is not
    finite (singular points) are skipped, as are flagged nodes for the gradient.
    """
    if not problem.has_exact:
        raise NoExactSolution("errors need an exact solution")
    grid = solution.grid
    jj, ii = np.nonzero(solution.mask)
    x, y = grid.x(ii), grid.y(jj)
    out = {}
    for r in (1, 2):
        ex = np.asarray(problem.exact_velocity(r, x, y), dtype=float)
        e = np.abs(solution.u(r)[jj, ii] - ex)
        out[f"u{r}"] = float(np.max(e[np.isfinite(ex)], initial=0.0))
    out["u"] = max(out["u1"], out["u2"])
    out["gradp"] = float("nan")
    if solution.px is not None and problem.p is not None:
        keep = ~solution.flagged[jj, ii]
        gx, gy = problem.exact_grad_p(x, y)
        e = [np.abs(solution.px[jj, ii] - gx), np.abs(solution.py[jj, ii] - gy)]
        # singular data (f not finite) leaves NaN in the recovered gradient
        ok = keep & np.isfinite(gx) & np.isfinite(gy) & np.isfinite(e[0]) & np.isfinite(e[1])
        out["gradp"] = float(max(np.max(e[0][ok], initial=0.0), np.max(e[1][ok], initial=0.0)))
    return out


def error_fields(problem, solution: SolutionField):
    """Signed nodal errors ``u_h - u`` per component on the lattice."""
    grid = solution.grid
    jj, ii = np.nonzero(solution.mask)
    res = []
    for r in (1, 2):
        e = np.full(grid.code.shape, np.nan)
        e[jj, ii] = solution.u(r)[jj, ii] - problem.exact_velocity(r, grid.x(ii), grid.y(jj))
        res.append(e)
    return res


# ---------------------------------------------------------------------------
# one level and a whole study


@dataclass
class LevelResult:
    level: int
    h: float
    n_unknowns: int = 0
    errors: dict = field(default_factory=dict)
    gradp: dict = field(default_factory=dict)  # nu -> error
    kappa: dict = field(default_factory=dict)  # 1, 2, "block"
    residual: dict = field(default_factory=dict)
    runtime: float = 0.0
    dropped: int = 0
    flagged: int = 0
    status: str = "ok"
    solution: SolutionField | None = None
    systems: dict | None = None


def solve_level(domain, problem, h, components=(1, 2), order=A.DEFAULT_ORDER, special_rule="taylor",
                refine=1, compute_kappa=True, keep_systems=False):
    """Build, classify, assemble, factor and solve one mesh size.

    The factors are released component by component to bound memory; the
    1D norms needed for the block condition estimate are kept.
    """
    grid = G.build(domain, h)
    cls = G.classify(grid, domain)
    systems = A.assemble_components(domain, grid, problem, components, classes=cls, order=order,
                                    special_rule=special_rule)
    lattice = {}
    kappa = {}
    residual = {}
    norms, inv_norms = [], []
    for r in components:
        sy = systems[r]
        fact = S.factor(sy.matrix)
        u = S.solve(fact, sy.rhs, refine=refine)
        residual[r] = S.residual(sy.matrix, u, sy.rhs)
        if compute_kappa:
            norms.append(S.norm1(sy.matrix))
            inv_norms.append(S.inv_norm1_estimate(fact))
            kappa[r] = norms[-1] * inv_norms[-1]
        lattice[r] = lattice_values(grid, sy.boundary_values, u)
        del fact
    if compute_kappa and len(components) > 1:
        kappa["block"] = max(norms) * max(inv_norms)
    elif compute_kappa:
        kappa["block"] = kappa[components[0]]
    nan = np.where(grid.code <= 1, 0.0, np.nan)
    sol = SolutionField(grid, lattice.get(1, nan), lattice.get(2, nan))
    dropped = sum(len(systems[r].dropped) for r in components)
    return sol, systems if keep_systems else None, kappa, residual, dropped


def convergence_study(problem, domain, levels, nus=None, components=(1, 2), order=A.DEFAULT_ORDER,
                      special_rule="taylor", refine=1, compute_kappa=True, gradient=True, keep=False):
    """Run every level ``k`` (``h = 2**-k``) and collect a :class:`ConvergenceReport`.

    A failing level is recorded with its error message and the study goes on.
    """
    levels = list(levels)
    if len(levels) < 2:
        raise ValueError("a convergence study needs at least two levels")
    nus = list(nus) if nus else [problem.nu]
    rows = []
    for k in levels:
        h = 2.0 ** -k
        t0 = time.perf_counter()
        res = LevelResult(k, h)
        try:
            sol, systems, res.kappa, res.residual, res.dropped = solve_level(
                domain, problem, h, components, order, special_rule, refine, compute_kappa, keep)
            res.n_unknowns = sol.grid.n_unknowns
            if problem.has_exact:
                res.errors = linf_errors(problem, sol)
                for name in ("u1", "u2"):
                    if int(name[1]) not in components:
                        res.errors[name] = float("nan")
                res.errors["u"] = max(res.errors[f"u{r}"] for r in components)
            if gradient and problem.p is not None and set(components) == {1, 2}:
                for nu in nus:
                    pressure_gradient(problem, sol.grid, sol, nu)
                    prob = problem if nu == problem.nu else problem.with_nu(nu)
                    res.gradp[nu] = linf_errors(prob, sol)["gradp"] if problem.has_exact else float("nan")
                res.flagged = int(sol.flagged[sol.mask].sum())
            if keep:
                res.solution, res.systems = sol, systems
        except (G.GridError, S.SingularMatrix, SegmentTooShort) as exc:
            res.status = f"{type(exc).__name__}: {exc}"
            log.warning("level %d skipped: %s", k, res.status)
        res.runtime = time.perf_counter() - t0
        rows.append(res)
    return ConvergenceReport(rows, nus, tuple(components), problem.name)


def observed_order(e_coarse, e_fine, h_coarse, h_fine):
    if not (e_coarse > 0 and e_fine > 0 and math.isfinite(e_coarse) and math.isfinite(e_fine)):
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass
class ConvergenceReport:
    rows: list
    nus: list
    components: tuple = (1, 2)
    name: str = ""

    def ok_rows(self):
        return [r for r in self.rows if r.status == "ok"]

    def orders(self, key):
        """Observed orders between consecutive successful levels for an error key."""
        get = _getter(key)
        out = {}
        prev = None
        for r in self.rows:
            if r.status != "ok":
                prev = None
                continue
            if prev is not None:
                out[r.level] = observed_order(get(prev), get(r), prev.h, r.h)
            prev = r
        return out

    def kappa_ratios(self, key="block"):
        out = {}
        prev = None
        for r in self.rows:
            if r.status != "ok" or key not in r.kappa:
                prev = None
                continue
            if prev is not None:
                out[r.level] = r.kappa[key] / prev.kappa[key]
            prev = r
        return out

    # -- tabular output ------------------------------------------------------
    def columns(self, split=False):
        cols = ["level", "h", "unknowns"]
        err = ["u1", "u2"] if split else ["u"]
        for e in err:
            cols += [f"err_{e}", f"order_{e}"]
        for nu in self.nus if self._has_gradp() else []:
            cols += [f"err_gradp_nu={nu:g}", f"order_gradp_nu={nu:g}"]
        cols += ["kappa", "kappa_ratio"]
        if len(self.components) > 1:
            cols += ["kappa_1", "kappa_2"]
        cols += ["dropped", "flagged", "status"]
        return cols

    def _has_gradp(self):
        return any(r.gradp for r in self.rows)

    def records(self, split=False):
        """Formatted table rows (strings), deterministic for identical runs."""
        ords = {e: self.orders(e) for e in ("u", "u1", "u2")}
        gords = {nu: self.orders(("gradp", nu)) for nu in self.nus}
        kr = self.kappa_ratios()
        out = []
        for r in self.rows:
            rec = {"level": str(r.level), "h": f"1/{2 ** r.level}", "unknowns": str(r.n_unknowns)}
            for e in (["u1", "u2"] if split else ["u"]):
                rec[f"err_{e}"] = _fe(r.errors.get(e))
                rec[f"order_{e}"] = _fo(ords[e].get(r.level))
            if self._has_gradp():
                for nu in self.nus:
                    rec[f"err_gradp_nu={nu:g}"] = _fe(r.gradp.get(nu))
                    rec[f"order_gradp_nu={nu:g}"] = _fo(gords[nu].get(r.level))
            rec["kappa"] = _fk(r.kappa.get("block"))
            rec["kappa_ratio"] = "" if r.level not in kr else f"{kr[r.level]:.1f}"
            if len(self.components) > 1:
                rec["kappa_1"] = _fk(r.kappa.get(1))
                rec["kappa_2"] = _fk(r.kappa.get(2))
            rec["dropped"] = str(r.dropped)
            rec["flagged"] = str(r.flagged)
            rec["status"] = r.status
            out.append(rec)
        return out

    def to_csv(self, split=False):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns(split), lineterminator="\n")
        w.writeheader()
        w.writerows(self.records(split))
        return buf.getvalue()

    def to_markdown(self, split=False):
        cols = self.columns(split) + ["runtime_s"]
        recs = self.records(split)
        for rec, r in zip(recs, self.rows):
            rec["runtime_s"] = f"{r.runtime:.2f}"
        width = {c: max(len(c), *(len(rec[c]) for rec in recs)) for c in cols}
        line = lambda vals: "| " + " | ".join(v.ljust(width[c]) for c, v in zip(cols, vals)) + " |"
        out = [line(cols), "|" + "|".join("-" * (width[c] + 2) for c in cols) + "|"]
        out += [line([rec[c] for c in cols]) for rec in recs]
        return "\n".join(out) + "\n"

    def to_json(self):
        rows = []
        for r in self.rows:
            rows.append({
                "level": r.level, "h": r.h, "unknowns": r.n_unknowns, "errors": r.errors,
                "gradp": {f"{nu:g}": v for nu, v in r.gradp.items()},
                "kappa": {str(k): v for k, v in r.kappa.items()}, "residual": {str(k): v for k, v in r.residual.items()},
                "runtime": r.runtime, "dropped": r.dropped, "flagged": r.flagged, "status": r.status,
            })
        return json.dumps({"problem": self.name, "nus": self.nus, "rows": rows}, indent=2, default=_json_default)

    def timings_csv(self):
        return "level,runtime_s\n" + "".join(f"{r.level},{r.runtime:.3f}\n" for r in self.rows)


def _getter(key):
    if isinstance(key, tuple):
        nu = key[1]
        return lambda r: r.gradp.get(nu, float("nan"))
    return lambda r: r.errors.get(key, float("nan"))


def _fe(v):
    return "" if v is None or not math.isfinite(v) else f"{v:.4E}"


def _fo(v):
    return "" if v is None or not math.isfinite(v) else f"{v:.2f}"


def _fk(v):
    return "" if v is None or not math.isfinite(v) else f"{v:.2E}"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def dump_fields(problem, solution: SolutionField, path):
    """Write ``x,y,u1,u2,px,py,err_u1,err_u2`` for every node of the closed domain."""
    grid = solution.grid
    jj, ii = np.nonzero(solution.mask)
    x, y = grid.x(ii), grid.y(jj)
    cols = [x, y, solution.u1[jj, ii], solution.u2[jj, ii]]
    nanv = np.full(len(x), np.nan)
    cols += [solution.px[jj, ii] if solution.px is not None else nanv,
             solution.py[jj, ii] if solution.py is not None else nanv]
    if problem.has_exact:
        e1, e2 = error_fields(problem, solution)
        cols += [e1[jj, ii], e2[jj, ii]]
    else:
        cols += [nanv, nanv]
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.10e",
               header="x,y,u1,u2,px,py,err_u1,err_u2", comments="")
