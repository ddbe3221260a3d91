"""The multiverse tree: nodes connected by step-run and mock edges.

Deterministic runs are compressed into counted Step edges; input-primitive
choices branch with one Mock edge per explored value. Nodes are immutable
states once created, so navigation targets stay valid for the whole session.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field


class TreeError(Exception):
    pass


class NotDescendantError(TreeError):
    pass


class DesyncError(TreeError):
    """Messages disagree with the recorded tree structure."""


@dataclass(frozen=True)
class StepLabel:
    count: int


@dataclass(frozen=True)
class MockLabel:
    value: int


@dataclass
class Edge:
    label: StepLabel | MockLabel
    to: int


@dataclass
class TreeNode:
    id: int
    parent: int | None = None
    edges: list[Edge] = field(default_factory=list)
    meta: tuple[int, tuple[int, ...]] | None = None  # (prim index, args)
    path_models: list = field(default_factory=list)  # only during concolic build
    rev: int = 0  # last tree revision that touched this node

    def step_edge(self) -> Edge | None:
        for e in self.edges:
            if isinstance(e.label, StepLabel):
                return e
        return None

    def mock_edges(self) -> list[Edge]:
        return [e for e in self.edges if isinstance(e.label, MockLabel)]

    def is_leaf(self) -> bool:
        return not self.edges


class Tree:
    def __init__(self):
        self._next_id = 0
        self.rev = 0
        self.nodes: dict[int, TreeNode] = {}
        self.root = self._new_node(None).id

    def _touch(self, node: TreeNode):
        self.rev += 1
        node.rev = self.rev

    def _new_node(self, parent) -> TreeNode:
        node = TreeNode(self._next_id, parent)
        self._next_id += 1
        self.nodes[node.id] = node
        self._touch(node)
        return node

    def node(self, nid: int) -> TreeNode:
        if nid not in self.nodes:
            raise TreeError(f"unknown node id {nid}")
        return self.nodes[nid]

    # -- structure edits ------------------------------------------------------

    def attach_step(self, nid: int, count: int) -> int:
        node = self.node(nid)
        if node.mock_edges():
            raise DesyncError(f"step edge at choice node {nid}")
        if node.step_edge() is not None:
            raise DesyncError(f"node {nid} already has a step edge")
        child = self._new_node(nid)
        node.edges.append(Edge(StepLabel(count), child.id))
        self._touch(node)
        return child.id

    def attach_mock(self, nid: int, value: int) -> int:
        node = self.node(nid)
        if node.step_edge() is not None:
            raise DesyncError(f"mock edge at node {nid} with an outgoing step edge")
        for e in node.mock_edges():
            if e.label.value == value:
                raise DesyncError(f"duplicate mock value {value} at node {nid}")
        child = self._new_node(nid)
        node.edges.append(Edge(MockLabel(value), child.id))
        self._touch(node)
        return child.id

    def split_step(self, nid: int, offset: int) -> int:
        """Materialize the state `offset` steps into nid's step edge."""
        node = self.node(nid)
        edge = node.step_edge()
        if edge is None or not 0 < offset < edge.label.count:
            raise TreeError(f"cannot split step edge at node {nid} offset {offset}")
        mid = self._new_node(nid)
        tail = edge.label.count - offset
        old_child = self.node(edge.to)
        edge.label = StepLabel(offset)
        edge.to = mid.id
        mid.edges.append(Edge(StepLabel(tail), old_child.id))
        old_child.parent = mid.id
        self._touch(node)
        self._touch(mid)
        self._touch(old_child)
        return mid.id

    # -- traversal ------------------------------------------------------------

    def follow_steps(self, nid: int, count: int, materialize: bool = True) -> int:
        """Walk `count` deterministic steps from nid, extending or splitting
        compressed edges as needed; returns the node reached."""
        cur = self.node(nid)
        remaining = count
        while remaining > 0:
            edge = cur.step_edge()
            if edge is None:
                if cur.mock_edges():
                    raise DesyncError(
                        f"{remaining} deterministic steps expected at choice node {cur.id}")
                return self.attach_step(cur.id, remaining)
            if remaining >= edge.label.count:
                remaining -= edge.label.count
                cur = self.node(edge.to)
            else:
                if not materialize:
                    raise DesyncError(
                        f"stopping {remaining} steps into a {edge.label.count}-step edge")
                return self.split_step(cur.id, remaining)
        return cur.id

    def follow_mock(self, nid: int, value: int,
                    prim: int | None = None, args=None) -> int:
        """Follow the mock edge for `value`, attaching it if new."""
        node = self.node(nid)
        if node.step_edge() is not None:
            raise DesyncError(f"mock at node {nid} which has a step edge")
        if prim is not None:
            if node.meta is None:
                node.meta = (prim, tuple(args or ()))
                self._touch(node)
            elif node.meta[0] != prim:
                raise DesyncError(f"node {nid} choice metadata changed")
        for e in node.mock_edges():
            if e.label.value == value:
                return e.to
        return self.attach_mock(nid, value)

    # -- queries ---------------------------------------------------------------

    def is_descendant(self, anc: int, nid: int) -> bool:
        cur = self.node(nid)
        while True:
            if cur.id == anc:
                return True
            if cur.parent is None:
                return False
            cur = self.node(cur.parent)

    def path_to(self, frm: int, target: int) -> list[StepLabel | MockLabel]:
        """Edge labels along frm -> target; target must be a descendant."""
        labels = []
        cur = self.node(target)
        while cur.id != frm:
            if cur.parent is None:
                raise NotDescendantError(f"{target} is not a descendant of {frm}")
            parent = self.node(cur.parent)
            for e in parent.edges:
                if e.to == cur.id:
                    labels.append(e.label)
                    break
            cur = parent
        labels.reverse()
        return labels

    def leaf_count(self) -> int:
        return sum(1 for n in self.nodes.values() if n.is_leaf())

    def max_options(self) -> int:
        return max((len(n.mock_edges()) for n in self.nodes.values()), default=0)

    def node_count(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        return sum(len(n.edges) for n in self.nodes.values())

    def expand_unit(self, nid: int | None = None):
        """Canonical tree shape with Step(n) edges expanded into n unit
        steps, for comparing against an uncompressed reference tree."""
        node = self.node(self.root if nid is None else nid)
        children = []
        for e in node.edges:
            sub = self.expand_unit(e.to)
            if isinstance(e.label, StepLabel):
                for _ in range(e.label.count - 1):
                    sub = ("node", (("step", sub),))
                children.append(("step", sub))
            else:
                children.append((("mock", e.label.value), sub))
        return ("node", tuple(sorted(children, key=lambda c: str(c[0]))))

    def strip_path_models(self):
        for n in self.nodes.values():
            n.path_models = []


# -- serialization -------------------------------------------------------------

def to_json(tree: Tree, current: int, prim_names=None) -> bytes:
    nodes = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        edges = []
        for e in node.edges:
            if isinstance(e.label, StepLabel):
                entry = {"label": {"step": e.label.count}, "to": e.to}
            else:
                entry = {"label": {"mock": e.label.value}, "to": e.to}
                if node.meta is not None:
                    name = node.meta[0]
                    if prim_names is not None:
                        name = prim_names[node.meta[0]]
                    entry["prim"] = name
                    entry["args"] = list(node.meta[1])
            edges.append(entry)
        nodes.append({"id": nid, "edges": edges})
    doc = {"root": tree.root, "current": current, "nodes": nodes}
    return (json.dumps(doc, separators=(",", ":")) + "\n").encode()


def from_json(data: bytes) -> tuple[Tree, int]:
    doc = json.loads(data)
    tree = Tree.__new__(Tree)
    tree.nodes = {}
    tree.root = doc["root"]
    max_id = -1
    for nd in doc["nodes"]:
        node = TreeNode(nd["id"])
        tree.nodes[node.id] = node
        max_id = max(max_id, node.id)
    for nd in doc["nodes"]:
        node = tree.nodes[nd["id"]]
        for ed in nd["edges"]:
            if "step" in ed["label"]:
                label = StepLabel(ed["label"]["step"])
            else:
                label = MockLabel(ed["label"]["mock"])
                if "prim" in ed:
                    node.meta = (ed["prim"], tuple(ed.get("args", ())))
            node.edges.append(Edge(label, ed["to"]))
            tree.nodes[ed["to"]].parent = node.id
    tree._next_id = max_id + 1
    return tree, doc["current"]


def to_dot(tree: Tree, current: int, prim_names=None) -> bytes:
    lines = ["digraph multiverse {", "  rankdir=LR;", "  node [shape=circle];"]
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        style = ' style=filled fillcolor="lightblue"' if nid == current else ""
        lines.append(f'  n{nid} [label="{nid}"{style}];')
        for e in node.edges:
            if isinstance(e.label, StepLabel):
                label = "step" if e.label.count == 1 else f"step x{e.label.count}"
            else:
                if node.meta is not None:
                    name = node.meta[0]
                    if prim_names is not None:
                        name = prim_names[node.meta[0]]
                    args = ",".join(str(a) for a in node.meta[1])
                    label = f"{name}({args})={e.label.value}"
                else:
                    label = f"mock {e.label.value}"
            lines.append(f'  n{nid} -> n{e.to} [label="{label}"];')
    lines.append("}")
    return ("\n".join(lines) + "\n").encode()
