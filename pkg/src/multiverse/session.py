"""In-process debugging sessions and the headless session script runner."""
from __future__ import annotations

import shlex
from dataclasses import dataclass
from pathlib import Path

from . import protocol as p
from . import vm
from .client import ClientError, DebugClient
from .concolic import Bounds, ConcolicError
from .server import DebugServer
from .solver import SolverConfig, SolverError
from .tree import TreeError
from .wat import InstrId, Module


class ScriptError(Exception):
    pass


@dataclass
class Session:
    module: Module
    server: DebugServer
    client: DebugClient
    scheduler: p.SessionScheduler

    @classmethod
    def create(cls, module: Module, env: vm.Environment | None = None,
               prims: vm.PrimitiveTable | None = None,
               solver: SolverConfig | None = None,
               trace_log: list | None = None) -> "Session":
        prims = prims or vm.PrimitiveTable()
        env = env or vm.Environment(prims=prims)
        server = DebugServer(module, env, trace_log=trace_log)
        client = DebugClient(module, prims, solver)
        return cls(module, server, client, p.SessionScheduler(client, server))

    def settle(self, max_ticks: int = 1_000_000):
        """Run scheduler rules until the session quiesces."""
        self.scheduler.run_until_idle(max_ticks)

    def drive(self, msg, max_ticks: int = 1_000_000):
        self.client.send(msg)
        self.settle(max_ticks)


def parse_instr_id(module: Module, text: str) -> InstrId:
    func_part, sep, instr_part = text.partition(":")
    if not sep:
        raise ScriptError(f"expected FUNC:INSTR, got {text!r}")
    if func_part.isdigit():
        func = int(func_part)
    else:
        func = module.defined_index(func_part)
    return InstrId(func, int(instr_part))


@dataclass
class ScriptResult:
    ok: bool
    failures: list[str]
    log: list[str]


def run_script(session: Session, lines, base_dir: Path | None = None,
               max_ticks: int = 1_000_000) -> ScriptResult:
    """Execute a session script; every command settles the session before
    the next one runs, so scripts are deterministic."""
    failures: list[str] = []
    log: list[str] = []
    client = session.client
    server = session.server
    seen_errors = len(client.session_errors)

    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = shlex.split(line)
        cmd, args = parts[0], parts[1:]
        log.append(line)

        def fail(msg):
            failures.append(f"line {lineno}: {line!r}: {msg}")

        try:
            if cmd == "step":
                session.drive(p.Step(), max_ticks)
            elif cmd == "play":
                session.drive(p.Play(), max_ticks)
            elif cmd == "pause":
                if server.es == "running":
                    session.drive(p.Pause(), max_ticks)
                # already paused: the message would be incompatible, skip it
            elif cmd == "break+":
                session.drive(p.BreakAdd(parse_instr_id(session.module, args[0])),
                              max_ticks)
            elif cmd == "break-":
                session.drive(p.BreakRem(parse_instr_id(session.module, args[0])),
                              max_ticks)
            elif cmd == "mock":
                session.drive(p.Mock(int(args[0])), max_ticks)
            elif cmd == "reset":
                client.restart()
                session.settle(max_ticks)
            elif cmd == "suggest":
                bounds = Bounds()
                if args:
                    bounds = Bounds(max_iterations=int(args[0]),
                                    max_syms=int(args[1]) if len(args) > 1 else 16,
                                    max_instr=int(args[2]) if len(args) > 2 else 10_000)
                client.suggest(bounds)
                session.settle(max_ticks)
            elif cmd == "slide":
                client.slide(int(args[0]))
                session.settle(max_ticks)
            elif cmd == "export":
                path = Path(args[0])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                fmt = args[1] if len(args) > 1 else \
                    ("dot" if path.suffix == ".dot" else "json")
                path.write_bytes(client.export_tree(fmt))
            elif cmd == "expect-node-count":
                got = client.tree.node_count()
                if got != int(args[0]):
                    fail(f"expected {args[0]} nodes, tree has {got}")
            elif cmd == "expect-path-count":
                got = client.tree.leaf_count()
                if got != int(args[0]):
                    fail(f"expected {args[0]} leaf paths, tree has {got}")
            elif cmd == "expect-current-classify":
                got = vm.classify(server.K).kind
                want = {
                    "NonPrim": vm.Kind.NON_PRIM,
                    "InputPrim": vm.Kind.INPUT_PRIM,
                    "OutputPrim": vm.Kind.OUTPUT_PRIM,
                    "Terminated": vm.Kind.TERMINATED,
                }.get(args[0])
                if want is None:
                    fail(f"unknown classify kind {args[0]!r}")
                elif got != want:
                    fail(f"expected {args[0]}, server is at {got.value}")
            else:
                fail(f"unknown script command {cmd!r}")
        except (p.ProtocolError, ScriptError, vm.VmError, TreeError,
                ClientError, ConcolicError, SolverError, IndexError,
                ValueError) as e:
            fail(str(e))
        for err in client.session_errors[seen_errors:]:
            fail(err)
        seen_errors = len(client.session_errors)
    for err in session.scheduler.errors:
        failures.append(f"session error: {err}")
    return ScriptResult(not failures, failures, log)
