#!/usr/bin/env python3
"""Trace-vs-snapshot overhead benchmark on the I/O-heavy workload."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from multiverse.bench import run_bench, to_csv
from multiverse.wat import parse_module

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 50_000
    module = parse_module((PROGRAMS / "io_heavy.wat").read_text())
    rows = run_bench(module, n)
    print(to_csv(rows), end="")
    plain, trace, snap = rows
    print(f"# trace overhead over plain: "
          f"{(trace.seconds / plain.seconds - 1) * 100:.1f}%", file=sys.stderr)
    print(f"# snapshot-per-prim vs trace: "
          f"{snap.seconds / trace.seconds:.1f}x", file=sys.stderr)


if __name__ == "__main__":
    main()
