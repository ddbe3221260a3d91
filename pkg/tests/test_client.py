import pytest

from multiverse import protocol as p
from multiverse import vm
from multiverse.client import DebugClient
from multiverse.concolic import Bounds
from multiverse.session import Session
from multiverse.tree import DesyncError, MockLabel, StepLabel

from conftest import load_program


def client():
    return DebugClient(load_program("knock"))


def test_executed_extends_chain():
    c = client()
    c.receive(p.Executed(2))
    assert c.tree.node(c.tree.root).step_edge().label == StepLabel(2)
    assert c.current != c.tree.root


def test_executed_zero_is_noop():
    c = client()
    before = c.tree.node_count()
    c.receive(p.Executed(0))
    assert c.tree.node_count() == before
    assert c.current == c.tree.root


def test_prim_fresh_choice_point_records_meta():
    c = client()
    c.receive(p.Prim(1, 0, (12,), 224))
    root = c.tree.node(c.tree.root)
    assert [e.label for e in root.mock_edges()] == [MockLabel(224)]
    assert root.meta == (0, (12,))


def test_prim_with_existing_edges_adds_branch():
    # a pre-existing step edge is followed, then a new mock branch appears
    c = client()
    c.receive(p.Prim(2, 0, (12,), 1))     # step, mock 1
    c.receive(p.Executed(0))
    # replay the step, then diverge with a different value
    c2 = c
    c2.current = c2.tree.root
    c2.receive(p.Prim(2, 0, (12,), 2))
    choice = c2.tree.node(c2.tree.node(c2.tree.root).step_edge().to)
    assert sorted(e.label.value for e in choice.mock_edges()) == [1, 2]


def test_prim_compression_matches_unit_reference():
    c = client()
    c.receive(p.Prim(3, 0, (5,), 5))
    root_edge = c.tree.node(c.tree.root).step_edge()
    assert root_edge.label == StepLabel(2)
    mock_edges = c.tree.node(root_edge.to).mock_edges()
    assert [e.label.value for e in mock_edges] == [5]


def test_step_at_choice_node_is_desync():
    c = client()
    c.receive(p.Prim(1, 0, (12,), 4))
    c.current = c.tree.root
    with pytest.raises(DesyncError):
        c.receive(p.Executed(1))


def test_mock_mid_run_is_desync():
    c = client()
    c.receive(p.Executed(5))
    c.current = c.tree.root
    with pytest.raises(DesyncError):
        c.receive(p.Prim(3, 0, (12,), 4))  # 2 steps land mid-edge


def test_replay_over_compressed_edges_keeps_node_count():
    c = client()
    c.receive(p.Executed(4))
    c.receive(p.Prim(1, 0, (12,), 7))
    n = c.tree.node_count()
    c.current = c.tree.root
    for _ in range(4):
        c.receive(p.Executed(1))
    c.receive(p.Prim(1, 0, (12,), 7))
    assert c.tree.node_count() == n


def test_pause_mid_run_materializes_split():
    c = client()
    c.receive(p.Executed(6))
    c.current = c.tree.root
    c.receive(p.Executed(2))
    # observing the position forces the split
    node = c._materialize_position()
    assert c.tree.path_to(c.tree.root, node) == [StepLabel(2)]
    assert c.tree.node(node).step_edge().label == StepLabel(4)


# -- slide -------------------------------------------------------------------

def make_session(name="knock"):
    return Session.create(load_program(name))


def explored_session():
    s = make_session()
    for _ in range(2):
        s.drive(p.Step())
    s.drive(p.Mock(0))
    s.drive(p.Step())       # if
    s.client.restart()
    s.settle()
    for _ in range(2):
        s.drive(p.Step())
    s.drive(p.Mock(5))
    s.drive(p.Step())
    return s


def test_slide_descendant_sends_path():
    s = make_session()
    s.drive(p.Step())
    s.drive(p.Step())
    target = s.client.current
    s.client.restart()
    s.settle()
    s.client.slide(target)
    assert [type(m).__name__ for m in s.client.outbox] == ["Step", "Step"]
    s.settle()
    assert s.client.current == target
    assert s.client.pending_slide is None


def test_slide_to_current_sends_nothing():
    s = make_session()
    s.drive(p.Step())
    target = s.client.current
    s.client.slide(target)
    assert not s.client.outbox


def first_choice(tree):
    node = tree.node(tree.root)
    while not node.mock_edges():
        node = tree.node(node.step_edge().to)
    return node


def test_slide_restart_for_sibling_branch():
    s = explored_session()
    # current is on the mock-5 branch; mock-0 branch is not a descendant
    tree = s.client.tree
    choice = first_choice(tree)
    target = [e.to for e in choice.mock_edges() if e.label.value == 0][0]
    s.client.slide(target)
    kinds = [type(m).__name__ for m in s.client.outbox]
    assert kinds[0] == "Reset"
    assert s.client.current == tree.root
    s.settle()
    assert s.client.current == target
    assert vm.instr_id(s.server.K).instr is not None


def test_slide_unknown_node():
    s = make_session()
    with pytest.raises(Exception):
        s.client.slide(999)


def test_slide_never_mutates_tree():
    s = explored_session()
    before = s.client.tree.node_count()
    tree = s.client.tree
    choice = first_choice(tree)
    for e in choice.mock_edges():
        s.client.slide(e.to)
        s.settle()
        assert s.client.tree.node_count() == before


def test_replay_coherence_path_matches_labels():
    s = explored_session()
    tree = s.client.tree
    for nid in list(tree.nodes):
        s.client.slide(nid)
        s.settle()
        assert s.client.current == nid
        labels = tree.path_to(tree.root, s.client.current)
        assert sum(l.count for l in labels if isinstance(l, StepLabel)) >= 0


# -- suggest / graft -----------------------------------------------------------

def test_suggest_grafts_choice_points():
    s = make_session()
    s.drive(p.Step())
    s.drive(p.Step())
    anchor = s.client.current
    s.client.suggest(Bounds(max_syms=1))
    s.settle()
    node = s.client.tree.node(anchor)
    assert len(node.mock_edges()) == 2  # knock's threshold branches
    assert s.client.current == anchor   # suggest does not move the cursor


def test_suggest_on_terminated_state_grafts_nothing():
    s = Session.create(load_program("app_b"))
    s.drive(p.Play())  # runs to termination, then pauses
    before = s.client.tree.node_count()
    s.client.suggest(Bounds(max_syms=1))
    s.settle()
    assert s.client.tree.node_count() == before


def test_suggest_merges_with_existing_branches():
    s = make_session()
    s.drive(p.Step())
    s.drive(p.Step())
    anchor = s.client.current
    s.drive(p.Mock(0))      # explore one branch by hand first
    s.client.slide(anchor)
    s.settle()
    s.client.suggest(Bounds(max_syms=1))
    s.settle()
    node = s.client.tree.node(anchor)
    values = sorted(e.label.value for e in node.mock_edges())
    assert values == [0, 3]  # hand-mocked 0 merged with suggested {0, 3}


def test_temperature_suggest_shapes():
    prims = vm.PrimitiveTable(analog_max=255)
    s = Session.create(load_program("temperature"), prims=prims)
    for _ in range(3):
        s.drive(p.Step())
    # the instruction budget covers the second read of the same loop pass
    # but not the next iteration's read on the hot branch
    s.client.suggest(Bounds(max_syms=2, max_instr=18))
    s.settle()
    tree = s.client.tree
    # two choice points, two options each (three leaves)
    choice_nodes = [n for n in tree.nodes.values() if n.mock_edges()]
    assert len(choice_nodes) == 2
    assert all(len(n.mock_edges()) == 2 for n in choice_nodes)
    assert tree.leaf_count() == 3
