"""Command-line front end.

Exit codes: 0 superposable / success, 1 violating verdict or failed check,
2 usage or input error, 3 internal error.  Options fall back to
``SUPERPOSE_<OPTION>`` environment variables before their defaults.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback
from pathlib import Path
from typing import Callable, Sequence

from . import __version__, catalog
from .classify import EXISTENTIAL, PER_FIELD, CollapseError, classify_lagrangian
from .eom import EulerLagrangeError
from .gauge import TableError, antisymmetry_check, builtin_table, format_table, jacobi_residual, load_table
from .kernels import (
    KernelError,
    QuadraturePlan,
    chapman_kolmogorov_residual,
    drifted_heat,
    fixed_width,
    forward_difference,
    heat,
    load_tabulated,
    moments,
    moments_csv,
    reconstruct_time_derivative,
    time_derivative,
)
from .parser import ParseError, parse_lagrangian, render
from .report import build_report, render_text

EXIT_OK, EXIT_VIOLATING, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
ENV_PREFIX = "SUPERPOSE_"


class UsageError(Exception):
    pass


def _env(name: str, default=None, conv: Callable = str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    try:
        return conv(raw)
    except ValueError:
        raise UsageError(f"bad value {raw!r} in {ENV_PREFIX}{name.upper()}") from None


def _floats(raw: str) -> list[float]:
    return [float(x) for x in raw.replace(",", " ").split()]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--catalog", metavar="NAME", help="built-in Lagrangian (see 'catalog list')")
    src.add_argument("--file", metavar="PATH", help="Lagrangian source file")
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def _add_quadrature(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=["heat", "drifted-heat", "tabulated", "fixed-width"],
                   default=_env("family", "heat"))
    p.add_argument("--D", type=float, default=_env("D", 0.5, float), help="diffusivity")
    p.add_argument("--v", type=float, default=_env("v", 0.0, float), help="drift velocity")
    p.add_argument("--sigma", type=float, default=_env("sigma", 1.0, float),
                   help="width of the fixed-width control kernel")
    p.add_argument("--table", metavar="PATH", default=_env("table"),
                   help="two-column displacement density for --family tabulated")
    p.add_argument("--nodes", type=int, default=_env("nodes", 256, int))
    p.add_argument("--half-width", type=float, default=_env("half-width", 12.0, float))
    p.add_argument("--rule", choices=["gauss-legendre", "simpson"], default=_env("rule", "gauss-legendre"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superpose", description="Superposability checks for Lagrangians.")
    parser.add_argument("--version", action="version", version=f"superpose {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="classify terms and derive equations of motion")
    _add_input(check)
    check.add_argument("--mode", choices=[EXISTENTIAL, PER_FIELD], default=None)
    check.add_argument("--field", metavar="NAME", help="target field (implies per-field mode)")
    check.add_argument("--group-table", metavar="[GROUP=]PATH", action="append", default=None,
                       help="structure constants for a gauge group (repeatable)")

    eom = sub.add_parser("eom", help="derive equations of motion only")
    _add_input(eom)

    kernel = sub.add_parser("kernel", help="transition-kernel lab")
    ksub = kernel.add_subparsers(dest="kernel_command", required=True)
    km = ksub.add_parser("moments", help="moments G(x, n) and S1n as CSV")
    _add_quadrature(km)
    km.add_argument("--x", type=_floats, default=_env("x", [0.0], _floats))
    km.add_argument("--t", type=_floats, default=_env("t", [0.0], _floats))
    km.add_argument("--dt", type=_floats, default=_env("dt", [0.01], _floats))
    km.add_argument("--max-n", type=int, default=_env("max-n", 4, int))

    kc = ksub.add_parser("compose", help="composition residual over intermediate times")
    _add_quadrature(kc)
    kc.add_argument("--x", type=float, nargs=2, metavar=("X1", "X3"), default=[0.1, 0.7])
    kc.add_argument("--t", type=float, nargs=2, metavar=("T1", "T3"), default=[0.5, 2.0])
    kc.add_argument("--t2", type=_floats, default=None, help="intermediate times (default: three)")
    kc.add_argument("--tol", type=float, default=_env("tol", 1e-8, float))

    kr = ksub.add_parser("reconstruct", help="moment expansion of dK/dt against closed form")
    _add_quadrature(kr)
    kr.add_argument("--x", type=float, default=_env("x", 1.0, float))
    kr.add_argument("--t", type=float, default=_env("t", 1.0, float))
    kr.add_argument("--dt", type=_floats, default=_env("dt", [1e-2, 1e-3, 1e-4], _floats))
    kr.add_argument("--trunc-n", type=int, default=_env("trunc-n", 2, int))

    cat = sub.add_parser("catalog", help="built-in Lagrangians")
    csub = cat.add_subparsers(dest="catalog_command", required=True)
    csub.add_parser("list")
    show = csub.add_parser("show")
    show.add_argument("name")

    gauge = sub.add_parser("gauge", help="structure-constant tables")
    gsub = gauge.add_subparsers(dest="gauge_command", required=True)
    gv = gsub.add_parser("verify", help="antisymmetry and Jacobi checks")
    gv.add_argument("table", nargs="?", default="SU3", help="SU2, SU3 or a table file")
    gv.add_argument("--dim", type=int, default=None)
    gv.add_argument("--print", dest="show", action="store_true", help="print the nonzero entries")
    gv.add_argument("--json", action="store_true")
    gv.add_argument("--out", metavar="PATH")
    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _load_input(args) -> tuple[str, str, str]:
    name = args.catalog or (None if args.file else _env("catalog"))
    path = args.file or (None if args.catalog else _env("file"))
    if name:
        try:
            return "catalog", name, catalog.get(name).source
        except KeyError as err:
            raise UsageError(err.args[0]) from None
    if path:
        try:
            return "file", path, Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as err:
            raise UsageError(f"cannot read {path}: {err}") from None
    raise UsageError("one of --catalog or --file is required")


def _parse(kind: str, name: str, source: str):
    try:
        return parse_lagrangian(source)
    except ParseError as err:
        lines = source.splitlines()
        msg = f"{name}:{err.span.line}:{err.span.column}: {err.kind} error: {err.message}"
        if 1 <= err.span.line <= len(lines):
            line = lines[err.span.line - 1]
            msg += "\n  " + line + "\n  " + " " * (err.span.column - 1) + "^" * max(1, err.span.length)
        raise UsageError(msg) from None


def _tables(specs: Sequence[str] | None, L) -> dict:
    out = {}
    groups = [g.name for g in L.declarations.groups]
    for spec in specs or []:
        group, sep, path = spec.partition("=")
        if not sep:
            group, path = None, spec
        try:
            table = load_table(path)
        except (OSError, TableError, ValueError) as err:
            raise UsageError(f"cannot load group table {path}: {err}") from None
        for g in [group] if group else groups:
            if g not in groups:
                raise UsageError(f"group {g!r} is not declared")
            out[g] = table
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    kind, name, source = _load_input(args)
    L = _parse(kind, name, source)
    target = args.field or _env("field")
    mode = args.mode or _env("mode") or (PER_FIELD if target else EXISTENTIAL)
    if mode not in (EXISTENTIAL, PER_FIELD):
        raise UsageError(f"unknown mode {mode!r}")
    if mode == PER_FIELD and not target:
        raise UsageError("per-field mode needs --field")
    if target and L.declarations.field(target) is None:
        raise UsageError(f"field {target!r} is not declared")
    group_specs = args.group_table
    if group_specs is None and _env("group-table"):
        group_specs = [_env("group-table")]
    tables = _tables(group_specs, L)
    try:
        verdict = classify_lagrangian(L, mode, target if mode == PER_FIELD else None, tables)
    except CollapseError as err:
        raise UsageError(f"{err}; pass --group-table") from None
    report = build_report(L, verdict, source, kind, name, mode, target if mode == PER_FIELD else None)
    _emit(json.dumps(report, indent=2) + "\n" if args.json else render_text(report), args.out)
    return EXIT_OK if verdict.superposable else EXIT_VIOLATING


def cmd_eom(args) -> int:
    kind, name, source = _load_input(args)
    L = _parse(kind, name, source)
    report = build_report(L, None, source, kind, name)
    _emit(json.dumps(report, indent=2) + "\n" if args.json else render_text(report), args.out)
    if report["equation_error"]:
        raise UsageError(report["equation_error"])
    return EXIT_OK


def _kernel(args, dt: float | None = None):
    if args.family == "heat":
        return heat(args.D)
    if args.family == "drifted-heat":
        return drifted_heat(args.D, args.v)
    if args.family == "fixed-width":
        return fixed_width(args.sigma)
    if not args.table:
        raise UsageError("--family tabulated needs --table PATH")
    if dt is None:
        raise UsageError("tabulated kernels need a single --dt")
    try:
        return load_tabulated(args.table, dt)
    except (OSError, ValueError) as err:
        raise UsageError(f"cannot load {args.table}: {err}") from None


def _plan(args) -> QuadraturePlan:
    return QuadraturePlan(args.half_width, args.nodes, args.rule)


def cmd_kernel_moments(args) -> int:
    plan = _plan(args)
    tables = []
    for dt in args.dt:
        spec = _kernel(args, dt)
        for t in args.t:
            for x in args.x:
                tables.append(moments(spec, x, t, dt, args.max_n, plan))
    if args.json:
        rows = [
            {"x": m.x, "t": m.t, "dt": m.dt, "G": list(m.G),
             "S1": [None] + [g / (math.factorial(n) * m.dt) for n, g in enumerate(m.G) if n]}
            for m in tables
        ]
        _emit(json.dumps({"family": args.family, "moments": rows}, indent=2) + "\n", args.out)
    else:
        _emit(moments_csv(tables), args.out)
    return EXIT_OK


def cmd_kernel_compose(args) -> int:
    spec = _kernel(args)
    plan = _plan(args)
    (x1, x3), (t1, t3) = args.x, args.t
    t2s = args.t2 or [t1 + (t3 - t1) * f for f in (0.25, 0.5, 0.75)]
    rows = [
        {"t2": t2, "residual": chapman_kolmogorov_residual(spec, x3, t3, x1, t1, t2, plan)}
        for t2 in t2s
    ]
    ok = all(r["residual"] < args.tol for r in rows)
    if args.json:
        text = json.dumps({"family": args.family, "tol": args.tol, "holds": ok, "rows": rows}, indent=2) + "\n"
    else:
        text = "t2,residual\n" + "".join(f"{r['t2']!r},{r['residual']!r}\n" for r in rows)
        text += f"# composition {'holds' if ok else 'fails'} at tol {args.tol:g}\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_VIOLATING


def cmd_kernel_reconstruct(args) -> int:
    spec = _kernel(args)
    plan = _plan(args)
    exact = time_derivative(spec, args.x, args.t)
    rows = []
    for dt in args.dt:
        rec = reconstruct_time_derivative(spec, args.x, args.t, dt, args.trunc_n, plan)
        rows.append({
            "dt": dt,
            "reconstructed": rec,
            "analytic": exact,
            "forward_difference": forward_difference(spec, args.x, args.t, dt),
            "abs_error": abs(rec - exact),
        })
    if args.json:
        _emit(json.dumps({"family": args.family, "x": args.x, "t": args.t,
                          "trunc_n": args.trunc_n, "rows": rows}, indent=2) + "\n", args.out)
    else:
        keys = list(rows[0])
        text = ",".join(keys) + "\n" + "".join(",".join(repr(r[k]) for k in keys) + "\n" for r in rows)
        _emit(text, args.out)
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.catalog_command == "list":
        width = max(map(len, catalog.names()))
        for name in catalog.names():
            entry = catalog.get(name)
            print(f"{name:<{width}}  {entry.expected_verdict:<12}  {entry.location}")
        return EXIT_OK
    try:
        entry = catalog.get(args.name)
    except KeyError as err:
        raise UsageError(err.args[0]) from None
    print(f"# {entry.name}: {entry.location}; expected {entry.expected_verdict}")
    print(render(entry.lagrangian()), end="")
    return EXIT_OK


def cmd_gauge_verify(args) -> int:
    table = builtin_table(args.table, args.dim)
    if table is None:
        try:
            table = load_table(args.table, args.dim)
        except (OSError, TableError, ValueError) as err:
            raise UsageError(f"cannot load table {args.table}: {err}") from None
    anti = antisymmetry_check(table, 1e-12)
    jacobi = float(abs(jacobi_residual(table)).max())
    result = {
        "table": table.label,
        "dim": table.dim,
        "antisymmetric": anti,
        "jacobi_max_residual": jacobi,
        "jacobi": jacobi <= 1e-10,
    }
    ok = result["antisymmetric"] and result["jacobi"]
    if args.json:
        text = json.dumps(result, indent=2) + "\n"
    else:
        text = (f"{table.label} (dim {table.dim}): antisymmetry {'ok' if anti else 'FAILS'}, "
                f"Jacobi max residual {jacobi:.3g} ({'ok' if result['jacobi'] else 'FAILS'})\n")
        if args.show:
            text += format_table(table)
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_VIOLATING


def _dispatch(args) -> int:
    if args.command == "check":
        return cmd_check(args)
    if args.command == "eom":
        return cmd_eom(args)
    if args.command == "kernel":
        return {
            "moments": cmd_kernel_moments,
            "compose": cmd_kernel_compose,
            "reconstruct": cmd_kernel_reconstruct,
        }[args.kernel_command](args)
    if args.command == "catalog":
        return cmd_catalog(args)
    return cmd_gauge_verify(args)


def run(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
    except UsageError as err:
        print(f"superpose: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _dispatch(args)
    except (UsageError, KernelError, EulerLagrangeError) as err:
        print(f"superpose: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
