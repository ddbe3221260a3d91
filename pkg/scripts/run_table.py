#!/usr/bin/env python3
"""Reproduce the path-count table over the ported example programs."""
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from multiverse import vm
from multiverse.concolic import Bounds, concolic, expand
from multiverse.wat import parse_module

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"

ROWS = [
    # program, analog shrink, bounds, loop iterations shown
    ("knock", None, dict(max_syms=1), 1),
    ("knock", 7, dict(max_syms=2), 2),
    ("switch_map", None, dict(max_syms=1), 1),
    ("keyboard", None, dict(max_syms=1), 1),
    ("love_o_meter", None, dict(max_syms=1), 1),
    ("while_no_calibrate", None, dict(max_syms=1), 1),
    ("crystal_ball", None, dict(), 2),
    ("knock_lock", 7, dict(), 2),
    ("zoetrope", None, dict(), 2),
    ("loop_if", 7, dict(), 3),
    ("gesture_robot", 2, dict(), 1),
]


def main():
    print(f"{'program':22s} {'iters':>5s} {'paths':>5s} {'maxOpts':>7s} {'time':>8s}")
    for name, analog_max, bounds, iters in ROWS:
        module = parse_module((PROGRAMS / f"{name}.wat").read_text())
        prims = vm.PrimitiveTable(analog_max=analog_max) if analog_max \
            else vm.PrimitiveTable()
        start = time.perf_counter()
        result = concolic(expand(vm.instantiate(module), prims), Bounds(**bounds))
        elapsed = time.perf_counter() - start
        tree = result.tree
        print(f"{name:22s} {iters:>5d} {tree.leaf_count():>5d} "
              f"{tree.max_options():>7d} {elapsed:>7.3f}s")


if __name__ == "__main__":
    main()
