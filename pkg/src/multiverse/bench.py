"""Execution-mode benchmark: plain run vs trace emission vs a
snapshot-after-every-primitive baseline, measured at the wire-message level.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from . import protocol as p
from . import vm
from .snapshot import snapshot
from .wat import Module

CSV_HEADER = "mode,instructions,prims,seconds,bytes_emitted"


@dataclass
class BenchRow:
    mode: str
    instructions: int
    prims: int
    seconds: float
    bytes_emitted: int

    def csv(self) -> str:
        return (f"{self.mode},{self.instructions},{self.prims},"
                f"{self.seconds:.6f},{self.bytes_emitted}")


def _run(module: Module, env: vm.Environment, n_instr: int, mode: str) -> BenchRow:
    state = vm.instantiate(module, env)
    executed = 0
    prims = 0
    emitted = 0
    c_instr = 0
    start = time.perf_counter()
    while executed < n_instr:
        if state.status != "running":
            break
        cls = vm.classify(state)
        if cls.kind == vm.Kind.NON_PRIM:
            vm.step_det(state)
            c_instr += 1
        else:
            _, event = vm.step_prim(state, env)
            prims += 1
            if mode != "plain":
                if event.kind == "in":
                    frame = p.encode(p.Prim(c_instr + 1, event.prim,
                                            event.args, event.value))
                    emitted += len(frame)
                    c_instr = 0
                else:
                    c_instr += 1
                if mode == "snapshot":
                    frame = p.encode(p.Snapshot(snapshot(state)))
                    emitted += len(frame)
            else:
                c_instr += 1
        executed += 1
    seconds = time.perf_counter() - start
    return BenchRow(mode, executed, prims, seconds, emitted)


def run_bench(module: Module, n_instr: int, seed: int = 1) -> list[BenchRow]:
    """Run the three modes sequentially on fresh environments."""
    rows = []
    for mode in ("plain", "trace", "snapshot"):
        env = vm.Environment(mode="seeded", seed=seed)
        rows.append(_run(module, env, n_instr, mode))
    return rows


def to_csv(rows: list[BenchRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv() for r in rows]) + "\n"
