"""``raysearch`` command line: grover | vsearch | sweep | bounds | adjudicate.

Exit codes are shared by every subcommand: 0 success, 2 threshold not
reached, 64 usage error, 65 degenerate problem, 66 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import adjudicate, qsl
from .corevec import DegenerateFrameError, StateVector
from .geometry import grover_steps_eq2, v_steps_eq5, v_steps_eq7
from .grover import DEFAULT_THRESHOLD, NoCouplingError, SearchSpec, run_grover
from .vrotor import loglog_slope, run_vsearch

EXIT_OK = 0
EXIT_NOT_REACHED = 2
EXIT_USAGE = 64
EXIT_DEGENERATE = 65
EXIT_NUMERIC = 66

TRACE_COLUMNS = ("step", "overlap", "success_prob", "fs_from_initial", "bargmann_from_initial")
SWEEP_COLUMNS = ("N", "grover_s", "eq2_estimate", "vsearch_s", "eq5_estimate", "eq7_estimate")
WORKERS_ENV = "RAYSEARCH_MAX_WORKERS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# Formatting
# --------------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits, so CSV output round-trips exactly."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return "divergent"
    return f"{x:.17g}"


def finite_or_divergent(obj):
    """Recursively map inf/nan floats to the string ``"divergent"`` and numpy to builtins."""
    if isinstance(obj, dict):
        return {k: finite_or_divergent(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [finite_or_divergent(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [finite_or_divergent(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else "divergent"
    return obj


def dump_json(obj) -> str:
    return json.dumps(finite_or_divergent(obj), indent=2, sort_keys=True) + "\n"


def write_output(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def csv_text(columns, rows, footer=()) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    for rec in footer:
        buf.write("# " + ",".join(fmt(v) if not isinstance(v, str) else v for v in rec) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# Config helpers
# --------------------------------------------------------------------------

def _spec_from_args(args, p: float = 1.0) -> SearchSpec:
    if args.n is None:
        raise UsageError("--n is required")
    if args.target is None:
        raise UsageError("--target is required")
    if not 1 <= args.n <= 20:
        raise UsageError(f"--n must lie in [1, 20], got {args.n}")
    if not 0 <= args.target < 2 ** args.n:
        raise UsageError(f"--target must lie in [0, {2 ** args.n - 1}], got {args.target}")
    if not 0.0 < p <= 1.0:
        raise UsageError(f"--p must lie in (0, 1], got {p}")
    if args.prep == "haar":
        if args.seed is None:
            raise UsageError("--prep haar requires --seed")
        return SearchSpec.haar(args.n, args.target, args.seed, p)
    return SearchSpec.exhaustive(args.n, args.target, p)


def _check_run_args(args) -> None:
    if args.max_steps < 1:
        raise UsageError(f"--max-steps must be >= 1, got {args.max_steps}")
    if args.stop_threshold <= 0:
        raise UsageError(f"--stop-threshold must be positive, got {args.stop_threshold}")


def parse_n_range(text: str) -> list[int]:
    """``"4..12"`` (inclusive), ``"4:13"`` (half-open) or ``"4,6,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi)))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--n-range: cannot parse {text!r}") from None


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _trace_output(args, trace, meta: dict) -> str:
    if args.format == "json":
        rows = [dict(zip(TRACE_COLUMNS, r)) for r in trace.rows()]
        return dump_json({"schema": "raysearch.trace/1", "meta": meta, "rows": rows})
    footer = [(k, meta[k]) for k in sorted(meta)]
    return csv_text(TRACE_COLUMNS, trace.rows(), footer)


def cmd_grover(args) -> int:
    _check_run_args(args)
    spec = _spec_from_args(args)
    trace = run_grover(spec, args.max_steps, args.stop_threshold)
    meta = {
        "engine": "grover",
        "n_qubits": spec.n_qubits,
        "target": spec.target,
        "u_if": spec.u_abs,
        "first_passage": trace.first_passage,
        "eq2_estimate": grover_steps_eq2(spec.u_abs).steps,
        "stop_threshold": args.stop_threshold,
    }
    write_output(args.output, _trace_output(args, trace, meta))
    print(f"first_passage={fmt(trace.first_passage)} eq2_estimate={fmt(meta['eq2_estimate'])}",
          file=sys.stderr)
    return EXIT_OK if trace.reached else EXIT_NOT_REACHED


def cmd_vsearch(args) -> int:
    _check_run_args(args)
    spec = _spec_from_args(args, args.p)
    trace = run_vsearch(spec, args.max_steps, args.stop_threshold)
    meta = {
        "engine": "vsearch",
        "p": spec.p,
        "n_qubits": spec.n_qubits,
        "target": spec.target,
        "u_if": spec.u_abs,
        "first_passage": trace.first_passage,
        "eq5_estimate": v_steps_eq5(spec.u_abs, spec.p).steps,
        "eq7_estimate": v_steps_eq7(spec.u_abs, spec.p).steps,
        "stop_threshold": args.stop_threshold,
    }
    write_output(args.output, _trace_output(args, trace, meta))
    print(f"first_passage={fmt(trace.first_passage)} eq7_estimate={fmt(meta['eq7_estimate'])}",
          file=sys.stderr)
    return EXIT_OK if trace.reached else EXIT_NOT_REACHED


def sweep_row(n: int, p: float, target: int, threshold: float, max_steps: int) -> tuple:
    g_spec = SearchSpec.exhaustive(n, target % 2 ** n)
    v_spec = SearchSpec.exhaustive(n, target % 2 ** n, p)
    u = g_spec.u_abs
    g = run_grover(g_spec, max_steps, threshold).first_passage
    v = run_vsearch(v_spec, max_steps, threshold).first_passage
    return (2 ** n, g, grover_steps_eq2(u).steps, v,
            v_steps_eq5(u, p).steps, v_steps_eq7(u, p).steps)


def cmd_sweep(args) -> int:
    _check_run_args(args)
    ns = parse_n_range(args.n_range)
    if len(ns) < 3:
        raise UsageError(f"--n-range needs at least 3 sizes, got {len(ns)}")
    if min(ns) < 1 or max(ns) > 20:
        raise UsageError("--n-range sizes must lie in [1, 20]")
    if not 0.0 < args.p <= 1.0:
        raise UsageError(f"--p must lie in (0, 1], got {args.p}")
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(
            lambda n: sweep_row(n, args.p, args.target or 0, args.stop_threshold, args.max_steps),
            sorted(ns),
        ))
    if any(r[1] is None or r[3] is None for r in rows):
        write_output(args.output, csv_text(SWEEP_COLUMNS, rows))
        return EXIT_NOT_REACHED
    dims = [r[0] for r in rows]
    g_slope = loglog_slope(dims, [r[1] for r in rows])
    v_slope = loglog_slope(dims, [r[3] for r in rows])
    if args.format == "json":
        text = dump_json({
            "schema": "raysearch.sweep/1",
            "p": args.p,
            "stop_threshold": args.stop_threshold,
            "rows": [dict(zip(SWEEP_COLUMNS, r)) for r in rows],
            "fit": {"grover_slope": g_slope, "vsearch_slope": v_slope},
        })
    else:
        footer = [("fit", "grover_slope", g_slope), ("fit", "vsearch_slope", v_slope),
                  ("p", args.p)]
        text = csv_text(SWEEP_COLUMNS, rows, footer)
    write_output(args.output, text)
    return EXIT_OK


PRESETS = ("constant_rabi", "detuned_rabi", "driven", "random_smooth", "farhi_gutmann")


def build_preset(args):
    """Return ``(hamiltonian, initial, target)`` for the chosen preset."""
    name = args.preset
    if name in ("constant_rabi", "detuned_rabi", "driven"):
        psi0, tgt = StateVector.basis(1, 0), StateVector.basis(1, 1)
        if name == "constant_rabi":
            h = qsl.constant_rabi(args.omega)
        elif name == "detuned_rabi":
            h = qsl.detuned_rabi(args.omega, args.delta)
        else:
            h = qsl.driven(args.a, args.b, args.drive_freq)
        return h, psi0, tgt
    if name == "random_smooth":
        if args.seed is None:
            raise UsageError("random_smooth requires --seed")
        if args.dim < 2:
            raise UsageError(f"--dim must be >= 2, got {args.dim}")
        h = qsl.random_smooth(args.seed, args.dim, args.terms)
        psi0, tgt = qsl.random_pair(args.seed, args.dim)
        return h, psi0, tgt
    if name == "farhi_gutmann":
        if args.n is None:
            raise UsageError("farhi_gutmann requires --n")
        target = args.target if args.target is not None else 0
        if not 0 <= target < 2 ** args.n:
            raise UsageError(f"--target out of range for --n {args.n}")
        psi0 = StateVector.uniform(args.n)
        tgt = StateVector.basis(args.n, target)
        return qsl.farhi_gutmann(args.energy, psi0, tgt), psi0, tgt
    raise UsageError(f"unknown preset {name!r}")


def bounds_report_dict(args, h, trace, report) -> dict:
    b = report.bounds
    rate = report.rate
    return {
        "schema": "raysearch.bounds/1",
        "preset": h.tag,
        "params": h.params,
        "t_end": args.t_end,
        "n_steps": args.n_steps,
        "theta0": report.theta0,
        "grid": trace.times,
        "P": trace.prob,
        "P_minus": report.p_minus,
        "P_plus": report.p_plus,
        "delta_h": trace.delta_h,
        "action": trace.action,
        "rate": {
            "tol": rate.tol,
            "max_excess": rate.max_excess,
            "max_fd_gap": rate.max_fd_gap,
            "violations": [list(v) for v in rate.violations],
        },
        "step_bounds": {"p": b.p, "s_min": b.s_min,
                        "s_max": "divergent" if b.divergent else b.s_max},
        "violations": [list(v) for v in report.violations],
        "saturation": {"max_gap": report.saturation_gap,
                       "saturated": bool(report.saturation_gap <= 1e-8)},
        "max_norm_drift": float(trace.drift.max()),
        "orientation": report.orientation,
        "orientation_note": report.orientation_note,
    }


def cmd_bounds(args) -> int:
    if args.n_steps < qsl.MIN_STEPS:
        raise UsageError(f"--n-steps must be >= {qsl.MIN_STEPS}, got {args.n_steps}")
    if not args.t_end > 0:
        raise UsageError(f"--t-end must be positive, got {args.t_end}")
    if not 0.0 < args.p <= 1.0:
        raise UsageError(f"--p must lie in (0, 1], got {args.p}")
    h, psi0, tgt = build_preset(args)
    trace = qsl.evolve(h, psi0, args.t_end, args.n_steps, tgt)
    report = qsl.envelope_report(trace, h, args.p)
    write_output(args.output, dump_json(bounds_report_dict(args, h, trace, report)))
    clean = not report.violations and not report.rate.violations
    return EXIT_OK if clean else 1


def cmd_adjudicate(args) -> int:
    report = adjudicate.run_suite()
    if args.format == "md":
        text = adjudicate.to_markdown(finite_or_divergent(report))
    else:
        text = dump_json(report)
    write_output(args.output, text)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="raysearch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def search_flags(sp, fmt_choices=("csv", "json")):
        sp.add_argument("--n", type=int, help="number of qubits")
        sp.add_argument("--target", type=int)
        sp.add_argument("--prep", choices=("walsh-hadamard", "haar"), default="walsh-hadamard")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--max-steps", type=int, default=10_000)
        sp.add_argument("--stop-threshold", type=float, default=DEFAULT_THRESHOLD)
        sp.add_argument("--output", default="-")
        sp.add_argument("--format", choices=fmt_choices, default="csv")

    g = sub.add_parser("grover", help="iterate Q and trace the geometry")
    search_flags(g)
    g.set_defaults(func=cmd_grover)

    v = sub.add_parser("vsearch", help="iterate the controlled rotation V")
    search_flags(v)
    v.add_argument("--p", type=float, default=1.0)
    v.set_defaults(func=cmd_vsearch)

    s = sub.add_parser("sweep", help="first-passage scaling over register sizes")
    s.add_argument("--n-range", required=True)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--target", type=int, default=0)
    s.add_argument("--max-steps", type=int, default=100_000)
    s.add_argument("--stop-threshold", type=float, default=DEFAULT_THRESHOLD)
    s.add_argument("--output", default="-")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bounds", help="speed-limit envelopes for a Hamiltonian preset")
    b.add_argument("--preset", choices=PRESETS, default="constant_rabi")
    b.add_argument("--omega", type=float, default=math.pi)
    b.add_argument("--delta", type=float, default=0.0)
    b.add_argument("--a", type=float, default=1.0)
    b.add_argument("--b", type=float, default=1.0)
    b.add_argument("--drive-freq", type=float, default=1.0)
    b.add_argument("--seed", type=int)
    b.add_argument("--dim", type=int, default=2)
    b.add_argument("--terms", type=int, default=3)
    b.add_argument("--energy", type=float, default=1.0)
    b.add_argument("--n", type=int)
    b.add_argument("--target", type=int)
    b.add_argument("--t-end", type=float, default=1.0)
    b.add_argument("--n-steps", type=int, default=2048)
    b.add_argument("--p", type=float, default=1.0)
    b.add_argument("--output", default="-")
    b.set_defaults(func=cmd_bounds)

    a = sub.add_parser("adjudicate", help="run the fixed claim-checking suite")
    a.add_argument("--output", default="-")
    a.add_argument("--format", choices=("json", "md"), default="json")
    a.set_defaults(func=cmd_adjudicate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"raysearch {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoCouplingError, DegenerateFrameError) as exc:
        print(f"raysearch {args.command}: degenerate problem: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (qsl.IntegrationError, FloatingPointError) as exc:
        print(f"raysearch {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
