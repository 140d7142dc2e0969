"""Command-line entry point.

Exit codes: 0 success (or non-bi-contextual verdict), 2 bad input,
3 bi-contextual verdict from ``decide``, ``simulate`` or ``ingest``.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
import time
from pathlib import Path

from . import __version__, _accel
from .behavior import Behavior
from .decision import decide_single
from .errors import BictxError, ContractError, PreconditionError
from .oracle import (
    OracleConfig,
    bisect_violation_boundary,
    compare_random,
    enumerate_deterministic,
    grid_feasibility,
)
from .quantum import SETTINGS, QubitState, ideal_behavior, sample_setting, verify_mermin_peres
from .stats import CountTable, exact_report, load_counts, propagate_uncertainty
from .sweeps import (
    DEFAULT_BALL_RESOLUTION,
    DEFAULT_STEPS,
    DEFAULT_SURFACE_RESOLUTION,
    DEFAULT_SWEEP_RESAMPLES,
    RegionSpec,
    SweepSpec,
    format_value,
    region_rows,
    run_region,
    run_sweep,
    write_region,
    write_sweep,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BICONTEXTUAL = 3


class InputError(BictxError):
    pass


# ---------------------------------------------------------------- angle expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    raise ValueError("unsupported expression")


def parse_real(text: str) -> float:
    """A float or an arithmetic expression in ``pi`` such as ``3*pi/4``."""
    try:
        value = _eval_node(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or pi expression: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def parse_range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"range must be 'lo,hi', got {text!r}")
    return parse_real(parts[0]), parse_real(parts[1])


def _count(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {value}")
        return value

    return parse


# ---------------------------------------------------------------- output helpers


def _clean(obj):
    """Replace NaN/inf by ``None`` so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _emit_json(obj, out):
    text = dumps(obj)
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)
    return [out] if out else []


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def write_manifest(args, argv, outputs, seconds) -> Path:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "backend": _accel.BACKEND,
        "outputs": [str(p) for p in outputs],
        "durationSeconds": seconds,
    }
    path = manifest_path(outputs[0])
    path.write_text(dumps(manifest))
    return path


def _verdict_code(bicontextual: bool) -> int:
    return EXIT_BICONTEXTUAL if bicontextual else EXIT_OK


def _read_json(path):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _threads(args):
    n = args.threads if args.threads is not None else _accel.default_threads()
    if n is not None and n < 1:
        raise InputError("threads must be at least 1")
    _accel.set_threads(n)
    return n


# ---------------------------------------------------------------- commands


def cmd_decide(args):
    b = Behavior.from_dict(_read_json(args.behavior))
    report = decide_single(b)
    return _emit_json(report.to_dict(), args.out), _verdict_code(report.bicontextual)


def cmd_simulate(args):
    threads = _threads(args)
    if args.shots == 0:
        report = exact_report(ideal_behavior(args.theta, args.phi))
        counts = None
    else:
        if args.shots < 2:
            raise InputError("shots must be 0 (exact) or at least 2")
        state = QubitState(args.theta, args.phi)
        counts = CountTable.from_settings(
            sample_setting((state, state), s, args.shots, args.seed) for s in SETTINGS
        )
        report = propagate_uncertainty(counts, args.resamples, args.seed, threads)
    doc = {
        "theta": args.theta,
        "phi": args.phi,
        "shots": args.shots,
        "seed": args.seed,
        "counts": counts.to_dict() if counts is not None else None,
        "report": report.to_dict(),
    }
    return _emit_json(doc, args.out), _verdict_code(report.decision.bicontextual)


def cmd_ingest(args):
    threads = _threads(args)
    counts = load_counts(args.counts)
    report = propagate_uncertainty(counts, args.resamples, args.seed, threads)
    doc = {"counts": counts.to_dict(), "report": report.to_dict()}
    return _emit_json(doc, args.out), _verdict_code(report.decision.bicontextual)


def _sweep_spec(args) -> SweepSpec:
    fixed_value = args.theta if args.fixed == "theta" else args.phi
    if fixed_value is None:
        raise InputError(f"--fixed {args.fixed} needs --{args.fixed} VALUE")
    if args.range is not None:
        lo, hi = args.range
    else:
        lo, hi = (0.0, math.pi) if args.fixed == "theta" else (0.0, math.pi / 2)
    return SweepSpec(
        fixed=args.fixed,
        fixed_value=fixed_value,
        lo=lo,
        hi=hi,
        steps=args.steps,
        shots=args.shots,
        seed=args.seed,
        resamples=args.resamples,
    )


def cmd_sweep(args):
    threads = _threads(args)
    table = run_sweep(_sweep_spec(args), threads)
    if args.out:
        sidecar = write_sweep(args.out, table)
        n_bc = sum(1 for r in table.rows if r[table.columns.index("verdict")] == "BiContextual")
        sys.stdout.write(f"{len(table.rows)} rows, {n_bc} BiContextual -> {args.out}\n")
        return [args.out, str(sidecar)], EXIT_OK
    _write_rows(table.columns, table.rows)
    return [], EXIT_OK


def cmd_region(args):
    resolution = args.resolution
    if resolution is None:
        resolution = DEFAULT_SURFACE_RESOLUTION if args.surface_only else DEFAULT_BALL_RESOLUTION
    table = run_region(RegionSpec(resolution, args.surface_only), _threads(args))
    if args.out:
        sidecar = write_region(args.out, table)
        n_bc = int((~table.non_bicontextual).sum())
        sys.stdout.write(f"{len(table.points)} points, {n_bc} BiContextual -> {args.out}\n")
        return [args.out, str(sidecar)], EXIT_OK
    _write_rows(("x", "y", "z", "single_lhs", "verdict"), region_rows(table))
    return [], EXIT_OK


def _write_rows(columns, rows):
    out = sys.stdout
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(format_value(v) for v in row) + "\n")


def cmd_oracle(args):
    _threads(args)
    cfg = OracleConfig(grid_points=args.grid_points)
    if args.behavior:
        b = Behavior.from_dict(_read_json(args.behavior))
        grid = grid_feasibility(b, cfg)
        dec = enumerate_deterministic(b)
        doc = {
            "gridFeasible": grid.exists,
            "gridPoint": list(grid.point) if grid.point else None,
            "deterministic": {"w1": list(dec.w1), "w2": list(dec.w2)} if dec else None,
            "verdict": decide_single(b, witness=False).verdict.value,
        }
    elif args.bisect:
        if args.phi is None or args.range is None:
            raise InputError("--bisect needs --phi and --range lo,hi")
        theta = bisect_violation_boundary(args.phi, *args.range, cfg)
        doc = {"phi": args.phi, "range": list(args.range), "thetaStar": theta,
               "sin2ThetaStar": math.sin(2 * theta)}
    else:
        doc = compare_random(args.random, args.seed, cfg, scalar=args.scalar).to_dict()
    return _emit_json(doc, args.out), EXIT_OK


def cmd_mpsquare(args):
    report = verify_mermin_peres()
    return _emit_json(report.to_dict(), args.out), EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p, seed=True, threads=True):
    p.add_argument("--out", help="write output here and a run manifest next to it")
    if seed:
        p.add_argument("--seed", type=_count(0), default=0)
    if threads:
        p.add_argument("--threads", type=_count(1), default=None,
                       help="worker threads (default: $BICTX_THREADS); never changes results")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bictx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide a behavior given as JSON")
    p.add_argument("behavior", help="behavior JSON file, or - for stdin")
    _common(p, seed=False, threads=False)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("simulate", help="sample psi(x)psi and report with bootstrap errors")
    p.add_argument("--theta", type=parse_real, required=True)
    p.add_argument("--phi", type=parse_real, required=True)
    p.add_argument("--shots", type=_count(0), default=10000, help="per setting; 0 means exact")
    p.add_argument("--resamples", type=_count(100), default=1000)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one angle with the other fixed")
    p.add_argument("--fixed", choices=("theta", "phi"), required=True)
    p.add_argument("--theta", type=parse_real)
    p.add_argument("--phi", type=parse_real)
    p.add_argument("--range", type=parse_range, help="lo,hi of the varying angle")
    p.add_argument("--steps", type=_count(2), default=DEFAULT_STEPS)
    p.add_argument("--shots", type=_count(0), default=0)
    p.add_argument("--resamples", type=_count(100), default=DEFAULT_SWEEP_RESAMPLES)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("region", help="classify Bloch-ball (or sphere) states")
    p.add_argument("--resolution", type=_count(2))
    p.add_argument("--surface-only", action="store_true")
    _common(p, seed=False)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("oracle", help="brute-force cross-checks")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--random", type=_count(1), default=100000,
                      help="compare on this many random behaviors (default mode)")
    mode.add_argument("--bisect", action="store_true", help="locate a verdict flip along theta")
    mode.add_argument("--behavior", help="grid and deterministic checks for one behavior JSON")
    p.add_argument("--phi", type=parse_real)
    p.add_argument("--range", type=parse_range)
    p.add_argument("--grid-points", type=_count(3), default=10001)
    p.add_argument("--scalar", type=_count(0), default=0,
                   help="also run this many rows through the per-behavior decider")
    _common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("mpsquare", help="verify the Mermin-Peres square")
    _common(p, seed=False, threads=False)
    p.set_defaults(func=cmd_mpsquare)

    p = sub.add_parser("ingest", help="counts (JSON) or per-shot records (CSV) to a report")
    p.add_argument("counts")
    p.add_argument("--resamples", type=_count(100), default=1000)
    _common(p)
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        outputs, code = args.func(args)
    except (BictxError, ValueError, OSError) as exc:
        # a bad bisection bracket is user input; other contract breaches are bugs
        if isinstance(exc, ContractError) and not isinstance(exc, PreconditionError):
            raise
        sys.stderr.write(f"bictx {args.command}: error: {exc}\n")
        return EXIT_INPUT
    if outputs:
        write_manifest(args, argv, outputs, time.perf_counter() - start)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
