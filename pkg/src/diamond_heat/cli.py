"""``diamond-heat`` command line.

Scalars are written as JSON, grids as CSV.  Every output carries the
resolved run configuration.  Exit codes: 0 success, 2 validation failure,
3 configuration error, 4 capacity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__, fractal_kernel as fk, semigroup, verify
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    InsufficientDepthError,
    LevelRangeError,
    PrecisionWarning,
)
from .geometry import Address, PointArray, enumerate_cells
from .params import ParameterSequences, check_assumption, hausdorff_dimension

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CAPACITY = 0, 2, 3, 4

DEFAULT_PARAMS = '{"j_const": 2, "n_const": 2, "depth": 4}'


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, times: bool = True) -> None:
    p.add_argument("--params", default=DEFAULT_PARAMS, help="inline JSON or path to a JSON file")
    p.add_argument("--tol", type=float, default=1e-12, help="absolute truncation tolerance (default 1e-12)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--workers", type=int, help="worker threads (default: $DIAMOND_HEAT_WORKERS or CPU count)")
    if times:
        p.add_argument("--t", type=float, action="append", required=True, help="time; repeat for several")


def _level_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--level", type=int, help="evaluate on F_i")
    g.add_argument("--limit", action="store_true", help="evaluate on the limit fractal (default)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diamond-heat", description="Heat kernels on generalized diamond fractals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="kernel value p_t(x, y)")
    _common(p)
    _level_args(p)
    p.add_argument("--x", required=True, help="address 'p/q:w1,w2' (angle pi*p/q), 'radians:w1,..' or JSON")
    p.add_argument("--y", required=True)

    p = sub.add_parser("grid", help="CSV of p_t(x, .) over midpoint nodes of every cell")
    _common(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--m", type=int, default=16, help="nodes per cell")
    p.add_argument("--x", required=True)

    p = sub.add_parser("solve", help="heat equation from a grid initial condition")
    _common(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--u0", default="const:1", help="'const:C', 'cos' (cos of the base angle) or a grid CSV path")
    p.add_argument("--x", action="append", required=True, help="evaluation point; repeat for several")

    p = sub.add_parser("schrodinger", help="free Schrodinger kernel at eps + i t")
    _common(p)
    _level_args(p)
    p.add_argument("--eps", type=float, help="regularization (default 1e-3 |t|)")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)

    p = sub.add_parser("dim", help="Hausdorff dimension of the constant-parameter fractal")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("bound", help="uniform correction bounds and limit tail")
    _common(p)
    p.add_argument("--level", type=int, help="single level (default: all configured levels)")

    p = sub.add_parser("verify", help="run a verification suite")
    _common(p, times=False)
    p.add_argument("suite", choices=sorted(verify.SUITES))
    return parser


# Helpers.


def _workers(args) -> int:
    return args.workers if args.workers else verify.default_workers()


def _config(args) -> dict:
    out = {k: v for k, v in vars(args).items() if v is not None and k != "out"}
    if "limit" in out:
        out["limit"] = args.level is None
    if "params" in out:
        out["params"] = ParameterSequences.load(args.params).to_config()
    return out


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _seq(args) -> ParameterSequences:
    return ParameterSequences.load(args.params)


def _result(seq, args, x, y, t):
    if args.level is not None:
        return fk.heat_kernel_level(seq, args.level, x, y, t, args.tol)
    return fk.heat_kernel_limit(seq, x, y, t, args.tol)


# Commands.


def cmd_eval(args) -> int:
    seq = _seq(args)
    x, y = Address.parse(args.x), Address.parse(args.y)
    rows = []
    for t in args.t:
        res = _result(seq, args, x, y, t)
        rows.append({"t": t, **res.to_json()})
    body = rows[0] if len(rows) == 1 else {"results": rows}
    _emit(args, _json({**body, "config": _config(args)}))
    return EXIT_OK


def cmd_grid(args) -> int:
    seq = _seq(args)
    i, m = args.level, args.m
    seq._check(i)
    X = PointArray.from_addresses(seq, [Address.parse(args.x)], i)
    Y = semigroup.grid_points(seq, i, m)
    labels = [c.label(seq) for c in enumerate_cells(seq, i)]
    w = seq.L(i) / (seq.N(i) * m)

    def row(t):
        return fk.kernel_matrix(seq, i, X, Y, t, args.tol)[0]

    values = verify.fan_out(row, args.t, _workers(args))
    buf = io.StringIO()
    buf.write("# " + json.dumps({"config": _config(args), "weight": w}, sort_keys=True) + "\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["t", "cell", "theta", "value"])
    for t, vals in zip(args.t, values):
        for idx in range(len(Y)):
            out.writerow([repr(t), labels[idx // m], repr(float(Y.theta[idx])), repr(float(vals[idx]))])
    _emit(args, buf.getvalue())
    return EXIT_OK


def _initial(seq, args) -> semigroup.GridField:
    source = args.u0
    if source.startswith("const:"):
        try:
            c = float(source.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad constant in --u0 {source!r}") from None
        return semigroup.GridField.constant(seq, args.level, args.m, c)
    if source == "cos":
        return semigroup.cos_pullback(seq, args.level, args.m)
    try:
        field = semigroup.GridField.from_csv(source)
    except OSError as exc:
        raise ConfigError(f"cannot read --u0 {source!r}: {exc}") from None
    if field.level != args.level:
        raise ConfigError(f"--u0 grid is at level {field.level}, not {args.level}")
    return field


def cmd_solve(args) -> int:
    seq = _seq(args)
    u0 = _initial(seq, args)
    points = [Address.parse(x) for x in args.x]
    results = []
    for t in args.t:
        vals = semigroup.heat_solve(u0, t, points, args.tol, _workers(args))
        results.append({"t": t, "values": [float(v) for v in vals]})
    meta = {"integral_u0": semigroup.integrate(u0), "m": u0.m, "level": u0.level}
    _emit(args, _json({"points": args.x, "results": results, **meta, "config": _config(args)}))
    return EXIT_OK


def cmd_schrodinger(args) -> int:
    seq = _seq(args)
    x, y = Address.parse(args.x), Address.parse(args.y)
    rows = []
    for t in args.t:
        eps = args.eps if args.eps is not None else 1e-3 * abs(t)
        if args.level is not None:
            res = fk.heat_kernel_level(seq, args.level, x, y, complex(eps, t), args.tol)
            res.eps = eps
        else:
            res = fk.schrodinger_kernel(seq, x, y, t, eps, args.tol)
        v = complex(res.value)
        rows.append({"t": t, "eps": eps, "re": v.real, "im": v.imag, "abs2": abs(v) ** 2, "tail_bound": res.tail_bound,
                     "i_star": res.i_star, "levels_used": res.levels_used})
    body = rows[0] if len(rows) == 1 else {"results": rows}
    _emit(args, _json({**body, "config": _config(args)}))
    return EXIT_OK


def cmd_dim(args) -> int:
    d = hausdorff_dimension(args.j, args.n)
    out = {"j": args.j, "n": args.n, "dimension": int(d) if d.is_integer() else d,
           "formula": "1 + log(n)/log(j)"}
    _emit(args, _json(out))
    return EXIT_OK


def cmd_bound(args) -> int:
    seq = _seq(args)
    levels = [args.level] if args.level is not None else list(range(1, seq.depth + 1))
    rows = []
    for t in args.t:
        rep = check_assumption(seq, t)
        rows.append({
            "t": t,
            "bounds": {str(i): fk.uniform_bound(seq, i, t) for i in levels},
            "tail_after_depth": fk.limit_tail(seq, seq.depth, t),
            "assumption_ok": rep.ok,
            "assumption_proxy_ok": rep.proxy_ok,
        })
    body = rows[0] if len(rows) == 1 else {"results": rows}
    _emit(args, _json({**body, "config": _config(args)}))
    return EXIT_OK


def cmd_verify(args) -> int:
    seq = _seq(args) if args.params != DEFAULT_PARAMS else None
    report = verify.run(args.suite, seq, _workers(args), args.seed, args.tol)
    _emit(args, _json({**report.to_json(), "config": _config(args)}))
    print(report.table(), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VALIDATION


COMMANDS = {
    "eval": cmd_eval,
    "grid": cmd_grid,
    "solve": cmd_solve,
    "schrodinger": cmd_schrodinger,
    "dim": cmd_dim,
    "bound": cmd_bound,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", PrecisionWarning)
            return COMMANDS[args.command](args)
    except (ConfigError, LevelRangeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, InsufficientDepthError) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
