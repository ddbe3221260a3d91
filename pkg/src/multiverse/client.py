"""The desk-side debugger: builds the multiverse tree from the server's
trace messages, navigates it with slide, and grafts concolic suggestions.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import protocol as p
from . import vm
from .concolic import Bounds, concolic, expand
from .snapshot import restore
from .solver import SolverConfig
from .tree import DesyncError, MockLabel, StepLabel, Tree, to_dot, to_json
from .wat import Module


class ClientError(Exception):
    pass


@dataclass
class SuggestReport:
    iterations: int
    paths: int
    warnings: list[str]


class DebugClient:
    """Client state: the tree, the current node, and the message queues.

    The position inside a compressed step run is tracked as an offset and
    only materialized into a real node when something needs to observe it
    (slide, suggest, export); pure replay traffic therefore never splits
    compressed edges.
    """

    def __init__(self, module: Module, prims: vm.PrimitiveTable | None = None,
                 solver: SolverConfig | None = None):
        self.module = module
        self.prims = prims or vm.PrimitiveTable()
        self.solver = solver
        self.tree = Tree()
        self.current = self.tree.root
        self._offset = 0  # consumed steps of current's outgoing step run
        self.inbox: deque = deque()
        self.outbox: deque = deque()
        self.pending_slide: int | None = None
        self.pending_suggest: Bounds | None = None
        self.last_snapshot: bytes | None = None
        self.diagnostics: list[str] = []
        self.session_errors: list[str] = []
        self.suggest_reports: list[SuggestReport] = []
        self.listeners: list = []  # called after each observable change

    # -- message intake --------------------------------------------------------

    def receive(self, msg):
        if isinstance(msg, p.Executed):
            self.on_executed(msg.count)
        elif isinstance(msg, p.Prim):
            self.on_prim(msg.count, msg.prim, msg.args, msg.value)
        elif isinstance(msg, p.Snapshot):
            self.on_snapshot(msg.blob)
        elif isinstance(msg, p.SessionError):
            self.session_errors.append(msg.message)
            self.diagnostics.append(msg.message)
        else:
            raise ClientError(f"client cannot handle {msg!r}")
        self._notify()

    def send(self, msg):
        self.outbox.append(msg)

    def _notify(self):
        for fn in self.listeners:
            fn()

    # -- tree building ----------------------------------------------------------

    def on_executed(self, count: int):
        self._traverse_steps(count)
        self._check_slide_arrival()

    def on_prim(self, count: int, prim: int, args, value: int):
        if count < 1:
            raise ClientError("prim.count must be >= 1")
        self._traverse_steps(count - 1)
        if self._offset:
            raise DesyncError(
                "input primitive reported inside a recorded deterministic run")
        self.current = self.tree.follow_mock(self.current, value, prim, tuple(args))
        self._check_slide_arrival()

    def _traverse_steps(self, count: int):
        remaining = count
        while remaining > 0:
            node = self.tree.node(self.current)
            edge = node.step_edge()
            if edge is not None:
                available = edge.label.count - self._offset
                if remaining >= available:
                    remaining -= available
                    self.current = edge.to
                    self._offset = 0
                else:
                    self._offset += remaining
                    remaining = 0
            else:
                if node.mock_edges():
                    raise DesyncError(
                        f"deterministic step at choice node {node.id}")
                self.current = self.tree.attach_step(node.id, remaining)
                remaining = 0

    def _materialize_position(self) -> int:
        """Current node id, splitting a compressed edge if we are inside one."""
        if self._offset:
            self.current = self.tree.split_step(self.current, self._offset)
            self._offset = 0
        return self.current

    def _check_slide_arrival(self):
        if self.pending_slide is not None and self._offset == 0 \
                and self.current == self.pending_slide:
            self.pending_slide = None

    # -- navigation --------------------------------------------------------------

    def slide(self, target: int):
        """Queue the messages that move the server to `target`'s state.

        Descendants replay forward from here; anything else restarts the
        program and replays from the root. The tree itself never changes.
        """
        node = self.tree.node(target)  # raises on unknown id
        cur = self._materialize_position()
        if self.tree.is_descendant(cur, target):
            labels = self.tree.path_to(cur, target)
        else:
            self.send(p.Reset())
            self.current = self.tree.root
            labels = self.tree.path_to(self.tree.root, target)
        for label in labels:
            if isinstance(label, StepLabel):
                for _ in range(label.count):
                    self.send(p.Step())
            else:
                self.send(p.Mock(label.value))
        self.pending_slide = target
        self._check_slide_arrival()

    def restart(self):
        """Reset the server and jump to the root; the tree stays intact."""
        self.current = self.tree.root
        self._offset = 0
        self.pending_slide = None
        self.send(p.Reset())

    # -- concolic suggestion -------------------------------------------------------

    def suggest(self, bounds: Bounds | None = None):
        """Ask the server for its state and graft the futures found by the
        concolic engine onto the current node."""
        self.pending_suggest = bounds or Bounds()
        self.send(p.Inspect())

    def on_snapshot(self, blob: bytes):
        self.last_snapshot = blob
        if self.pending_suggest is None:
            return
        bounds = self.pending_suggest
        self.pending_suggest = None
        state = restore(blob, self.module)
        if state.status == "trapped":
            self.diagnostics.append("suggest on a trapped state yields no paths")
            return
        report = concolic(expand(state, self.prims), bounds, self.solver)
        self.suggest_reports.append(SuggestReport(
            report.iterations, report.paths, list(report.warnings)))
        for w in report.warnings:
            self.diagnostics.append(w)
        self._graft(report.tree, report.tree.root, self._materialize_position())

    def _graft(self, engine: Tree, engine_node: int, client_node: int):
        enode = engine.node(engine_node)
        cnode = self.tree.node(client_node)
        if enode.meta is not None and cnode.meta is None:
            cnode.meta = enode.meta
        for edge in enode.edges:
            if isinstance(edge.label, StepLabel):
                child = self.tree.follow_steps(client_node, edge.label.count)
            else:
                child = self.tree.follow_mock(client_node, edge.label.value,
                                              *(enode.meta or (None, None)))
            self._graft(engine, edge.to, child)

    # -- export -----------------------------------------------------------------

    def prim_names(self):
        return [imp.name for imp in self.module.imports]

    def export_tree(self, fmt: str = "json") -> bytes:
        cur = self._materialize_position()
        if fmt == "json":
            return to_json(self.tree, cur, self.prim_names())
        if fmt == "dot":
            return to_dot(self.tree, cur, self.prim_names())
        raise ClientError(f"unknown export format {fmt!r}")
