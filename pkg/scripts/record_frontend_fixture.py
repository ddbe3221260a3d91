#!/usr/bin/env python3
"""Record a knock debugging session as the frontend's replay fixture:
the treeDelta/session event log plus the exported tree JSON."""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from multiverse.remote import FrontendSession
from multiverse.session import Session
from multiverse.wat import parse_module

EVENTS = [
    {"type": "breakAdd", "id": "main:2"},
    {"type": "play"},
    {"type": "suggest", "bounds": {"maxSyms": 1}},
    {"type": "mock", "value": 224},
    {"type": "step"},
    {"type": "step"},
    {"type": "slide", "nodeId": 2},
    {"type": "reset"},
]


def main():
    module = parse_module((ROOT / "programs" / "knock.wat").read_text())
    session = Session.create(module)
    frontend = FrontendSession(session)

    log = []

    def push():
        client = frontend.session.client
        doc = frontend._delta_doc(full=False)
        frontend.pushed_rev = client.tree.rev
        log.append(doc)
        log.extend(frontend._session_docs())
        for msg in client.diagnostics[frontend.pushed_diag:]:
            log.append({"type": "diagnostics", "message": msg})
        frontend.pushed_diag = len(client.diagnostics)

    log.append(frontend._delta_doc(full=True))
    log.extend(frontend._session_docs())
    frontend.pushed_rev = frontend.session.client.tree.rev
    for event in EVENTS:
        frontend._apply(event)
        session.settle()
        push()

    out_dir = ROOT / "frontend" / "test" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "knock_deltas.jsonl", "w") as fh:
        for doc in log:
            fh.write(json.dumps(doc) + "\n")
    (out_dir / "knock_tree.json").write_bytes(
        frontend.session.client.export_tree("json"))
    print(f"recorded {len(log)} events; tree nodes:",
          frontend.session.client.tree.node_count())


if __name__ == "__main__":
    main()
