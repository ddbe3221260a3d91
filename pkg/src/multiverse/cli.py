"""Command-line entry points: run, debug (scripted or listening), analyze,
and the trace-vs-snapshot benchmark.

Exit codes: 0 success, 1 assertion/script failure, 2 usage or parse error,
3 solver failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from . import vm
from .concolic import Bounds, concolic, expand
from .session import Session, run_script
from .solver import SolverConfig, SolverUnavailableError
from .tree import to_dot, to_json
from .wat import WatError, parse_module

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _load_module(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    try:
        module = parse_module(text)
    except WatError as e:
        print(f"error: {path}: {e}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if module.entry is None:
        print(f"error: {path}: no entry function; export or name one 'main'",
              file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return module


def _make_env(spec: str, prims: vm.PrimitiveTable) -> vm.Environment:
    kind, _, arg = spec.partition(":")
    if kind == "seeded":
        return vm.Environment(mode="seeded", seed=int(arg or 0), prims=prims)
    if kind == "constant":
        return vm.Environment(mode="constant", constant=int(arg or 0), prims=prims)
    if kind == "scripted":
        values: dict[str, list[int]] = {}
        for part in arg.split(";"):
            if not part:
                continue
            name, _, nums = part.partition("=")
            values[name] = [int(v) for v in nums.split(",") if v]
        return vm.Environment(mode="scripted", values=values, prims=prims)
    print(f"error: unknown environment spec {spec!r}", file=sys.stderr)
    raise SystemExit(EXIT_USAGE)


def _prims(args) -> vm.PrimitiveTable:
    analog_max = getattr(args, "analog_max", None)
    return vm.PrimitiveTable(analog_max=analog_max) if analog_max else vm.PrimitiveTable()


def _solver(args) -> SolverConfig:
    return SolverConfig(cmd=getattr(args, "solver_cmd", None),
                        timeout_ms=getattr(args, "solver_timeout_ms", 10_000))


def _bounds(args) -> Bounds:
    return Bounds(max_instr=args.max_instr, max_syms=args.max_syms,
                  max_iterations=args.max_iter)


def cmd_run(args) -> int:
    module = _load_module(args.program)
    prims = _prims(args)
    env = _make_env(args.env, prims)
    state = vm.instantiate(module, env)
    steps = vm.run_plain(state, env, max_steps=args.max_steps)
    for ordinal, name, prim_args, value in env.effect_log:
        shown = "" if value is None else f" -> {value}"
        print(f"[{ordinal}] {name}{tuple(prim_args)}{shown}")
    print(f"status={state.status} steps={steps}")
    if state.status == "trapped":
        print(f"trap: {state.trap_reason}")
    return EXIT_OK


def cmd_debug(args) -> int:
    module = _load_module(args.program)
    prims = _prims(args)
    env = _make_env(args.env, prims)
    trace_log = [] if args.trace_log else None
    session = Session.create(module, env, prims, _solver(args), trace_log=trace_log)
    try:
        if args.script:
            lines = Path(args.script).read_text().splitlines()
            result = run_script(session, lines, base_dir=Path(args.script).parent,
                                max_ticks=args.max_ticks)
            for line in result.failures:
                print(f"FAIL {line}", file=sys.stderr)
            return EXIT_OK if result.ok else EXIT_ASSERTION
        if args.listen:
            from .remote import serve
            return serve(session, args.listen)
        print("error: debug needs --script or --listen", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if trace_log is not None:
            Path(args.trace_log).write_bytes(b"".join(trace_log))


def cmd_analyze(args) -> int:
    module = _load_module(args.program)
    prims = _prims(args)
    state = vm.instantiate(module)
    start = time.perf_counter()
    try:
        report = concolic(expand(state, prims), _bounds(args), _solver(args))
    except SolverUnavailableError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    elapsed_ms = int((time.perf_counter() - start) * 1000)
    tree = report.tree
    if args.out:
        data = to_dot(tree, tree.root, [i.name for i in module.imports]) \
            if args.format == "dot" else \
            to_json(tree, tree.root, [i.name for i in module.imports])
        Path(args.out).write_bytes(data)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"paths={tree.leaf_count()} maxOpts={tree.max_options()} timeMs={elapsed_ms}")
    return EXIT_OK


def cmd_bench(args) -> int:
    module = _load_module(args.program)
    rows = bench_mod.run_bench(module, args.instructions, seed=args.seed)
    csv = bench_mod.to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv)
    print(csv, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvdbg",
        description="Trace-based multiverse debugger for the WAT subset")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("program", help="path to a .wat program")
        p.add_argument("--env", default="seeded:0",
                       help="environment: seeded:SEED | constant:V | "
                            "scripted:name=v1,v2;name2=v3")
        p.add_argument("--analog-max", type=int, default=None,
                       help="shrink the analog read codomain to [0,N]")

    p_run = sub.add_parser("run", help="execute a program and print its effects")
    common(p_run)
    p_run.add_argument("--max-steps", type=int, default=1_000_000)
    p_run.set_defaults(fn=cmd_run)

    p_dbg = sub.add_parser("debug", help="host a debug session")
    common(p_dbg)
    p_dbg.add_argument("--script", help="session script to execute")
    p_dbg.add_argument("--listen", help="tcp:PORT for the wire protocol or "
                                        "http:PORT for the browser frontend")
    p_dbg.add_argument("--trace-log", help="dump emitted messages to a file")
    p_dbg.add_argument("--max-ticks", type=int, default=1_000_000)
    p_dbg.add_argument("--solver-cmd", default=None)
    p_dbg.add_argument("--solver-timeout-ms", type=int, default=10_000)
    p_dbg.set_defaults(fn=cmd_debug)

    p_an = sub.add_parser("analyze", help="concolic path analysis from the start state")
    common(p_an)
    p_an.add_argument("--max-iter", type=int, default=64)
    p_an.add_argument("--max-syms", type=int, default=16)
    p_an.add_argument("--max-instr", type=int, default=10_000)
    p_an.add_argument("--solver-cmd", default=None)
    p_an.add_argument("--solver-timeout-ms", type=int, default=10_000)
    p_an.add_argument("--out", help="write the tree to this file")
    p_an.add_argument("--format", choices=("json", "dot"), default="json")
    p_an.set_defaults(fn=cmd_analyze)

    p_bench = sub.add_parser("bench", help="plain vs trace vs snapshot-per-prim timing")
    p_bench.add_argument("program")
    p_bench.add_argument("--instructions", type=int, default=50_000)
    p_bench.add_argument("--seed", type=int, default=1)
    p_bench.add_argument("--out", help="write CSV here")
    p_bench.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors already
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.fn(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
