import pytest

from multiverse.wat import InstrId, WatError, parse_module

from conftest import load_program


def test_empty_main():
    m = parse_module("(module (func $main))")
    assert len(m.functions) == 1
    assert m.functions[0].body == []
    assert m.entry == 0


def test_knock_fixture_accepted():
    m = load_program("knock")
    in_prims = [i for i in m.imports if i.kind == "in"]
    assert len(in_prims) == 1
    assert in_prims[0].name == "chip_analog_read"


def test_stack_underflow_rejected():
    with pytest.raises(WatError, match="underflow"):
        parse_module("(module (func $main (i32.add)))")


def test_unknown_instruction():
    with pytest.raises(WatError, match="unknown instruction"):
        parse_module("(module (func $main (i32.rotl (i32.const 1) (i32.const 2))))")


def test_unresolved_call_target():
    with pytest.raises(WatError, match="unresolved call target"):
        parse_module("(module (func $main (call $nope)))")


def test_missing_entry_fails_at_instantiation():
    # parsing tolerates a missing entry; instantiation requires one
    from multiverse import vm
    module = parse_module("(module (func $helper))")
    assert module.entry is None
    with pytest.raises(vm.VmError, match="entry"):
        vm.instantiate(module)


def test_bare_func_underflow_reported_as_validation_error():
    with pytest.raises(WatError, match="underflow"):
        parse_module("(func (i32.add))")


def test_error_carries_position():
    with pytest.raises(WatError) as exc:
        parse_module("(module\n  (func $main\n    (i32.add)))")
    assert exc.value.line == 3


def test_global_initializer_and_mutability():
    m = parse_module(
        "(module (global $a (mut i32) (i32.const 7)) (global $b i32 (i32.const -1))"
        " (func $main (global.get $a) (drop)))")
    assert [g.init for g in m.globals] == [7, -1]
    assert [g.mutable for g in m.globals] == [True, False]
    with pytest.raises(WatError, match="immutable"):
        parse_module("(module (global $b i32 (i32.const 1))"
                     " (func $main (global.set $b (i32.const 2))))")


def test_memory_page_limit():
    with pytest.raises(WatError, match="pages"):
        parse_module("(module (memory 5) (func $main))")
    with pytest.raises(WatError, match="without memory"):
        parse_module("(module (func $main (drop (i32.load (i32.const 0)))))")


def test_branch_depth_validated():
    with pytest.raises(WatError, match="depth"):
        parse_module("(module (func $main (block (br 2))))")


def test_body_must_balance():
    with pytest.raises(WatError, match="leaves"):
        parse_module("(module (func $main (i32.const 1)))")


def test_flat_and_folded_forms_agree():
    folded = parse_module(
        "(module (func $main (local $x i32)"
        " (if (i32.eqz (local.get $x)) (then (nop)) (else (drop (i32.const 1))))))")
    flat = parse_module(
        "(module (func $main (local $x i32)\n"
        " local.get $x\n i32.eqz\n if\n nop\n else\n i32.const 1\n drop\n end))")

    def ops(body):
        out = []
        for i in body:
            out.append((i.op, i.iid))
            out.extend(ops(i.body))
            out.extend(ops(i.else_body))
        return out

    assert ops(folded.functions[0].body) == ops(flat.functions[0].body)


def test_preorder_numbering_by_hand():
    # local.get=0, if=1, then: i32.const=2 drop=3, else: nop=4  (5 sites)
    m = parse_module(
        "(module (func $main (local $x i32)"
        " (if (local.get $x) (then (drop (i32.const 8))) (else (nop)))))")
    f = m.functions[0]
    assert f.instr_count == 5
    body = f.body
    assert [i.op for i in body] == ["local.get", "if"]
    assert body[0].iid == 0 and body[1].iid == 1
    then_ops = [(i.op, i.iid) for i in body[1].body]
    assert then_ops == [("i32.const", 2), ("drop", 3)]
    assert [(i.op, i.iid) for i in body[1].else_body] == [("nop", 4)]


def test_numbering_stable_across_parses(programs_dir):
    text = (programs_dir / "crystal_ball.wat").read_text()
    a = parse_module(text)
    b = parse_module(text)
    assert a.content_hash == b.content_hash

    def flat(body):
        out = []
        for i in body:
            out.append((i.op, i.iid))
            out.extend(flat(i.body))
            out.extend(flat(i.else_body))
        return out

    assert flat(a.functions[0].body) == flat(b.functions[0].body)
    # ids are a bijection over sites
    ids = [iid for _, iid in flat(a.functions[0].body)]
    assert sorted(ids) == list(range(len(ids)))


def test_instr_lookup_by_id(knock_module):
    instr = knock_module.instr_by_id(InstrId(0, 2))
    assert instr.op == "call"


def test_named_call_resolution():
    m = parse_module(
        "(module (func $helper (param $a i32) (local.set $a (i32.const 1)))"
        " (func $main (call $helper (i32.const 3))))")
    assert m.entry == 1
    assert m.defined_index("helper") == 0
