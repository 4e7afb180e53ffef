"""Command-line front end: ``stokes-fdm run|study|dump-grid|export-matrix``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("stokes_fdm")


class ConfigError(ValueError):
    pass


def _apply_thread_cap():
    n = os.environ.get("STOKES_FDM_THREADS")
    if not n:
        return
    try:
        k = max(1, int(n))
    except ValueError:
        raise ConfigError(f"STOKES_FDM_THREADS must be an integer, got {n!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ[var] = str(k)
    if "numba" in sys.modules:
        import numba

        numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


def parse_levels(text):
    """``"2..6"`` or ``"2,3,5"`` to an increasing list of exponents."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..", 1)
        levels = list(range(int(a), int(b) + 1))
    else:
        levels = [int(t) for t in text.split(",") if t.strip()]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError(f"level exponents must be increasing, got {text!r}")
    if levels[0] < 1:
        raise ConfigError("level exponents must be positive")
    return levels


def parse_nus(text):
    nus = [float(t) for t in text.split(",") if t.strip()]
    if not nus or any(not nu > 0 for nu in nus):
        raise ConfigError(f"viscosities must be positive, got {text!r}")
    return nus


def build_parser():
    p = argparse.ArgumentParser(prog="stokes-fdm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--example", type=int, choices=(1, 2, 3), default=1, help="built-in problem data")
        sp.add_argument("--domain", type=Path, help="domain JSON file (overrides the example's domain)")
        sp.add_argument("--nu", default="1", help="comma-separated viscosities")
        sp.add_argument("--pressure", default="exp", help="Example 2 pressure: exp, exp-large or log")
        sp.add_argument("--order", type=int, default=8, help="jet truncation order")
        sp.add_argument("--special-rule", choices=("taylor", "extrapolate"), default="taylor")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--error-json", type=Path, help="write failures as JSON to this path")
        sp.add_argument("-v", "--verbose", action="store_true")

    for name in ("run", "study"):
        sp = sub.add_parser(name)
        common(sp)
        if name == "run":
            sp.add_argument("--level", type=int, required=True, help="exponent k of h = 2^-k")
            sp.add_argument("--dump-fields", type=Path, help="directory for the nodal field CSV")
        else:
            sp.add_argument("--levels", required=True, help="range a..b or list of exponents")
        sp.add_argument("--format", default="csv", help="comma-separated: csv, md, json")
        sp.add_argument("--no-refine", action="store_true", help="skip iterative refinement")
        sp.add_argument("--split-components", action="store_true", help="report u1 and u2 separately")
        sp.add_argument("--no-kappa", action="store_true", help="skip condition estimates")

    for name in ("dump-grid", "export-matrix"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--level", type=int, required=True)
    return p


def _problem_and_domain(args, nu):
    from . import fields as F
    from . import geometry as geo

    if args.example == 1:
        prob, dom = F.example1(nu), geo.square_domain()
    elif args.example == 2:
        if args.pressure not in F.PRESSURE_VARIANTS:
            raise ConfigError(f"--pressure must be one of {F.PRESSURE_VARIANTS}")
        prob, dom = F.example2(p_variant=args.pressure, nu=nu), geo.triply_connected_domain()
    else:
        prob, dom = F.example3(nu), geo.lshape_domain()
    if args.domain is not None:
        try:
            dom = geo.load_domain(args.domain)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read domain file: {exc}")
    return prob, dom


def _formats(text):
    fm = [f.strip() for f in text.split(",") if f.strip()]
    bad = set(fm) - {"csv", "md", "json"}
    if bad or not fm:
        raise ConfigError(f"unknown format(s) {sorted(bad)}")
    return fm


def _write_report(report, out: Path, stem, formats, split):
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fm in formats:
        path = out / f"{stem}.{fm}"
        text = {"csv": lambda: report.to_csv(split), "md": lambda: report.to_markdown(split),
                "json": report.to_json}[fm]()
        path.write_text(text)
        written.append(path)
    (out / f"{stem}_timings.csv").write_text(report.timings_csv())
    return written


def _cmd_study(args, levels):
    from . import postprocess as PP

    nus = parse_nus(args.nu)
    prob, dom = _problem_and_domain(args, nus[0])
    formats = _formats(args.format)
    report = PP.convergence_study(prob, dom, levels, nus=nus, order=args.order, special_rule=args.special_rule,
                                  refine=0 if args.no_refine else 1, compute_kappa=not args.no_kappa)
    for path in _write_report(report, args.out, f"example{args.example}", formats, args.split_components):
        log.info("wrote %s", path)
    print(report.to_markdown(args.split_components), end="")
    if not report.ok_rows():
        raise _LevelFailure(report.rows[0].status)
    return EXIT_OK


class _LevelFailure(RuntimeError):
    pass


def _cmd_run(args):
    from . import postprocess as PP

    nus = parse_nus(args.nu)
    prob, dom = _problem_and_domain(args, nus[0])
    formats = _formats(args.format)
    report = PP.ConvergenceReport([], nus, (1, 2), prob.name)
    row = _single_level(PP, prob, dom, args, nus)
    report.rows.append(row)
    if row.status != "ok":
        raise _LevelFailure(row.status)
    stem = f"example{args.example}_level{args.level}"
    for path in _write_report(report, args.out, stem, formats, args.split_components):
        log.info("wrote %s", path)
    print(report.to_markdown(args.split_components), end="")
    if args.dump_fields is not None:
        args.dump_fields.mkdir(parents=True, exist_ok=True)
        path = args.dump_fields / f"{stem}_fields.csv"
        PP.dump_fields(prob, row.solution, path)
        log.info("wrote %s", path)
    return EXIT_OK


def _single_level(PP, prob, dom, args, nus):
    import time

    h = 2.0 ** -args.level
    row = PP.LevelResult(args.level, h)
    t0 = time.perf_counter()
    sol, _, row.kappa, row.residual, row.dropped = PP.solve_level(
        dom, prob, h, order=args.order, special_rule=args.special_rule, refine=0 if args.no_refine else 1,
        compute_kappa=not args.no_kappa)
    row.n_unknowns = sol.grid.n_unknowns
    if prob.has_exact:
        row.errors = PP.linf_errors(prob, sol)
    if prob.p is not None:
        for nu in nus:
            PP.pressure_gradient(prob, sol.grid, sol, nu)
            if prob.has_exact:
                row.gradp[nu] = PP.linf_errors(prob.with_nu(nu), sol)["gradp"]
        row.flagged = int(sol.flagged[sol.mask].sum())
        PP.pressure_gradient(prob, sol.grid, sol, nus[0])
    row.solution = sol
    row.runtime = time.perf_counter() - t0
    return row


def _cmd_dump_grid(args):
    from . import grid as G

    prob, dom = _problem_and_domain(args, 1.0)
    grid = G.build(dom, 2.0 ** -args.level)
    cls = G.classify(grid, dom)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"grid_level{args.level}.csv"
    G.dump_csv(grid, cls, path)
    print(json.dumps({"path": str(path), "unknowns": grid.n_unknowns, **cls.counts()}))
    return EXIT_OK


def _cmd_export_matrix(args):
    from . import assembly as A
    from . import grid as G

    nu = parse_nus(args.nu)[0]
    prob, dom = _problem_and_domain(args, nu)
    grid = G.build(dom, 2.0 ** -args.level)
    systems = A.assemble_components(dom, grid, prob, order=args.order, special_rule=args.special_rule)
    args.out.mkdir(parents=True, exist_ok=True)
    for r, sy in systems.items():
        sy.export_matrix(args.out / f"A{r}_level{args.level}.mtx")
        sy.export_rhs(args.out / f"b{r}_level{args.level}.txt")
    print(json.dumps({"out": str(args.out), "unknowns": grid.n_unknowns}))
    return EXIT_OK


def _classify_error(exc):
    from . import geometry as geo
    from . import grid as G
    from . import solver as S
    from .fields import InsufficientOrder
    from .stencils import MissingPartial

    numeric = (S.SingularMatrix, G.AmbiguousClassification, G.UncoveredNode)
    config = (ConfigError, geo.InvalidDomain, G.FeatureTooSmall, G.NonconformingMesh, InsufficientOrder,
              MissingPartial, ValueError)
    if isinstance(exc, numeric):
        return EXIT_NUMERIC
    if isinstance(exc, _LevelFailure):
        text = str(exc)
        return EXIT_NUMERIC if text.split(":")[0] in {c.__name__ for c in numeric} else EXIT_CONFIG
    if isinstance(exc, config):
        return EXIT_CONFIG
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_thread_cap()
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "study":
            return _cmd_study(args, parse_levels(args.levels))
        if args.command == "dump-grid":
            return _cmd_dump_grid(args)
        return _cmd_export_matrix(args)
    except Exception as exc:
        code = _classify_error(exc)
        if code is None:
            raise
        msg = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.error_json is not None:
            args.error_json.parent.mkdir(parents=True, exist_ok=True)
            args.error_json.write_text(json.dumps(msg, indent=2) + "\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
