"""The remote debugger stub.

Executes the program, counts deterministic instructions between
synchronisations with the client, honors breakpoints, and implements the
paused-mode debug operations (step, mock, inspect, reset, ...).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import protocol as p
from . import vm
from .snapshot import snapshot
from .wat import InstrId, Module


@dataclass
class DebugServer:
    module: Module
    env: vm.Environment
    es: str = "paused"            # sessions start paused at K_start
    bps: set[InstrId] = field(default_factory=set)
    c_instr: int = 0
    K: vm.ProgramState = None
    inbox: deque = field(default_factory=deque)
    outbox: deque = field(default_factory=deque)
    trace_log: list[bytes] | None = None
    baseline_snapshots: bool = False
    baseline_count: int = 0
    diagnostics: list[str] = field(default_factory=list)
    _terminal_notified: bool = False

    def __post_init__(self):
        if self.K is None:
            self.K = vm.instantiate(self.module, self.env)

    # -- helpers -------------------------------------------------------------

    def _emit(self, msg):
        self.outbox.append(msg)
        if self.trace_log is not None:
            self.trace_log.append(p.encode(msg))

    def _pause(self):
        self._emit(p.Executed(self.c_instr))
        self.es = "paused"
        self.c_instr = 0

    def _after_prim(self):
        if self.baseline_snapshots:
            snapshot(self.K)  # timing-only baseline, result discarded
            self.baseline_count += 1

    def _terminated(self):
        return self.K.status != "running"

    # -- running-mode step (one tick of the global Server-Step rule) ---------

    def run_step(self):
        if self.es != "running":
            raise p.ProtocolError("run_step requires the running state")
        if self._terminated():
            if self._terminal_notified:
                self.es = "paused"  # nothing left to notify
            else:
                self._pause()
                self._terminal_notified = True
            return
        if vm.instr_id(self.K) in self.bps:
            self._pause()
            return
        cls = vm.classify(self.K)
        if cls.kind == vm.Kind.NON_PRIM:
            vm.step_det(self.K)
            self.c_instr += 1
        elif cls.kind == vm.Kind.OUTPUT_PRIM:
            vm.step_prim(self.K, self.env)
            self.c_instr += 1
            self._after_prim()
        else:
            _, event = vm.step_prim(self.K, self.env)
            if event is None:  # empty codomain trapped the state
                return
            self._emit(p.Prim(self.c_instr + 1, event.prim, event.args, event.value))
            self.c_instr = 0
            self._after_prim()

    # -- paused-mode message handling -----------------------------------------

    def handle(self, msg):
        if isinstance(msg, p.BreakAdd):
            self.bps.add(msg.id)
            return
        if isinstance(msg, p.BreakRem):
            self.bps.discard(msg.id)
            return
        if isinstance(msg, p.Pause):
            self._pause()
            return
        if isinstance(msg, p.Play):
            self.es = "running"
            return
        if isinstance(msg, p.Inspect):
            self._emit(p.Snapshot(snapshot(self.K)))
            return
        if isinstance(msg, p.Reset):
            self.env.reset()
            self.K = vm.instantiate(self.module, self.env)
            self.c_instr = 0
            self._terminal_notified = False
            return
        if isinstance(msg, p.Step):
            self._handle_step()
            return
        if isinstance(msg, p.Mock):
            self._handle_mock(msg.value)
            return
        raise p.ProtocolError(f"server cannot handle {msg!r}")

    def _handle_step(self):
        if self._terminated():
            if not self._terminal_notified:
                self._pause()
                self._terminal_notified = True
            else:
                self._emit(p.Executed(0))
            return
        cls = vm.classify(self.K)
        if cls.kind == vm.Kind.NON_PRIM:
            vm.step_det(self.K)
            self._emit(p.Executed(1))
        elif cls.kind == vm.Kind.OUTPUT_PRIM:
            vm.step_prim(self.K, self.env)
            self._emit(p.Executed(1))
            self._after_prim()
        else:
            _, event = vm.step_prim(self.K, self.env)
            if event is None:
                self._emit(p.Executed(1))
                return
            self._emit(p.Prim(1, event.prim, event.args, event.value))
            self._after_prim()

    def _handle_mock(self, value: int):
        try:
            cls = vm.classify(self.K)
            vm.step_mocked(self.K, value, self.env.prims)
        except (vm.MockOnNonPrimError, vm.MockOutOfCodomainError) as e:
            self.diagnostics.append(str(e))
            self._emit(p.SessionError(str(e)))
            return
        imp = self.module.imports[cls.prim]
        self._emit(p.Prim(1, cls.prim, cls.args, value))

    # -- benchmarking hook -----------------------------------------------------

    def set_baseline_mode(self, on: bool):
        """When on, a full snapshot is serialized after every primitive call."""
        self.baseline_snapshots = on
