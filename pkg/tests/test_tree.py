import json
import random

import pytest

from multiverse.tree import (DesyncError, MockLabel, NotDescendantError,
                             StepLabel, Tree, from_json, to_dot, to_json)


def test_attach_and_follow_steps_compresses():
    t = Tree()
    n = t.follow_steps(t.root, 5)
    assert t.node_count() == 2
    assert t.node(t.root).step_edge().label == StepLabel(5)
    assert t.follow_steps(t.root, 5) == n  # following lays no new nodes


def test_follow_steps_extends_at_leaf():
    t = Tree()
    a = t.follow_steps(t.root, 2)
    b = t.follow_steps(t.root, 6)
    assert b != a
    assert t.node(a).step_edge().label == StepLabel(4)


def test_split_materializes_intermediate():
    t = Tree()
    a = t.follow_steps(t.root, 5)
    mid = t.split_step(t.root, 2)
    assert t.node(t.root).step_edge().label == StepLabel(2)
    assert t.node(mid).step_edge().label == StepLabel(3)
    assert t.node(mid).step_edge().to == a
    assert t.node(a).parent == mid


def test_step_mock_exclusivity():
    t = Tree()
    t.follow_mock(t.root, 4)
    with pytest.raises(DesyncError):
        t.attach_step(t.root, 1)
    t2 = Tree()
    t2.follow_steps(t2.root, 1)
    with pytest.raises(DesyncError):
        t2.attach_mock(t2.root, 4)


def test_sibling_mock_values_distinct():
    t = Tree()
    a = t.follow_mock(t.root, 4)
    b = t.follow_mock(t.root, 4)
    assert a == b  # following, not duplicating
    t.follow_mock(t.root, 5)
    values = [e.label.value for e in t.node(t.root).mock_edges()]
    assert len(values) == len(set(values))


def test_path_to_self_is_empty():
    t = Tree()
    assert t.path_to(t.root, t.root) == []


def test_path_to_multiverse_example():
    # root -step-> n2, n2 -mock v1-> a / -mock v2-> b, b -mock v1-> target
    t = Tree()
    n2 = t.follow_steps(t.root, 1)
    t.follow_mock(n2, 1)
    b = t.follow_mock(n2, 2)
    target = t.follow_mock(b, 1)
    assert t.path_to(t.root, target) == [StepLabel(1), MockLabel(2), MockLabel(1)]


def test_path_to_non_descendant():
    t = Tree()
    a = t.follow_mock(t.root, 1)
    b = t.follow_mock(t.root, 2)
    with pytest.raises(NotDescendantError):
        t.path_to(a, b)


def test_export_json_roundtrip_fixpoint():
    t = Tree()
    n = t.follow_steps(t.root, 3)
    t.follow_mock(n, 0, prim=0, args=(12,))
    t.follow_mock(n, 7, prim=0, args=(12,))
    data = to_json(t, n, ["chip_analog_read"])
    t2, cur = from_json(data)
    assert cur == n
    assert to_json(t2, cur) == data
    doc = json.loads(data)
    assert doc["root"] == 0
    assert {"label": {"step": 3}, "to": n} in doc["nodes"][0]["edges"]


def test_export_dot_single_root():
    t = Tree()
    out = to_dot(t, t.root).decode()
    assert out.startswith("digraph")
    assert "n0" in out


def test_export_dot_labels_mocks():
    t = Tree()
    t.follow_mock(t.root, 224, prim=0, args=(12,))
    out = to_dot(t, t.root, ["chip_analog_read"]).decode()
    assert 'label="chip_analog_read(12)=224"' in out


def test_leaf_count_and_max_options():
    t = Tree()
    n = t.follow_steps(t.root, 2)
    for v in (1, 2, 3):
        t.follow_mock(n, v)
    assert t.leaf_count() == 3
    assert t.max_options() == 3


# -- equivalence with the uncompressed reference ---------------------------------

class UnitTree:
    """Reference implementation: one edge per step, no compression."""

    def __init__(self):
        self.tree = Tree()
        self.current = self.tree.root

    def apply(self, msg):
        kind = msg[0]
        if kind == "executed":
            for _ in range(msg[1]):
                self.current = self.tree.follow_steps(self.current, 1)
        elif kind == "prim":
            for _ in range(msg[1] - 1):
                self.current = self.tree.follow_steps(self.current, 1)
            self.current = self.tree.follow_mock(self.current, msg[2])
        elif kind == "reset":
            self.current = self.tree.root


class CompressedClient:
    """The production traversal: offset-tracked compressed edges."""

    def __init__(self):
        self.tree = Tree()
        self.current = self.tree.root
        self.offset = 0

    def _steps(self, n):
        remaining = n
        while remaining > 0:
            node = self.tree.node(self.current)
            edge = node.step_edge()
            if edge is not None:
                available = edge.label.count - self.offset
                if remaining >= available:
                    remaining -= available
                    self.current = edge.to
                    self.offset = 0
                else:
                    self.offset += remaining
                    remaining = 0
            else:
                self.current = self.tree.attach_step(self.current, remaining)
                remaining = 0

    def apply(self, msg):
        kind = msg[0]
        if kind == "executed":
            self._steps(msg[1])
        elif kind == "prim":
            self._steps(msg[1] - 1)
            assert self.offset == 0
            self.current = self.tree.follow_mock(self.current, msg[2])
        elif kind == "reset":
            self.current = self.tree.root
            self.offset = 0


def random_consistent_messages(rng):
    """Messages a real deterministic program could emit: a synthetic
    behavior oracle maps every mock-value history to the same det-run
    length and choice layout."""
    def run_length(history):
        return 1 + (hash(("len", history)) % 4)

    def branches(history):
        return 1 + (hash(("branch", history)) % 3)

    msgs = []
    history = ()
    for _ in range(rng.randrange(2, 30)):
        if rng.random() < 0.15:
            msgs.append(("reset",))
            history = ()
            continue
        c = run_length(history)
        v = rng.randrange(branches(history))
        msgs.append(("prim", c, v))
        history = history + (v,)
    return msgs


def test_compression_equivalent_to_unit_reference():
    rng = random.Random(42)
    for trial in range(500):
        msgs = random_consistent_messages(rng)
        unit = UnitTree()
        comp = CompressedClient()
        for m in msgs:
            unit.apply(m)
            comp.apply(m)
        assert comp.tree.expand_unit() == unit.tree.expand_unit(), (trial, msgs)


def test_append_only_under_random_operations():
    rng = random.Random(9)
    comp = CompressedClient()
    seen = set()
    for _ in range(300):
        # each batch restarts: the synthetic oracle's histories are root-relative
        msgs = [("reset",)] + random_consistent_messages(rng)
        before_nodes = set(comp.tree.nodes)
        for m in msgs:
            comp.apply(m)
        assert before_nodes <= set(comp.tree.nodes)
        seen |= before_nodes
    # every node still satisfies exclusivity
    for node in comp.tree.nodes.values():
        has_step = node.step_edge() is not None
        has_mock = bool(node.mock_edges())
        assert not (has_step and has_mock)
