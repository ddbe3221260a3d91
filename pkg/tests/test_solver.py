import os
import stat
import sys
import textwrap

import pytest

from multiverse.solver import (SolverConfig, SolverError, SolverUnavailableError,
                               emit_query, parse_solver_output, solve)
from multiverse.symbolic import Binop, Conjunct, Const, PathCondition, Relop, Sym


def lt5(truth=True):
    return PathCondition([Conjunct(Relop("i32.lt_s", Sym(0), Const(5)), truth)])


DOMAIN = {0: (0, 4095)}


def test_solve_empty_is_sat():
    res = solve([], {})
    assert res.status == "sat" and res.model == {}


def test_negated_branch_first_witness():
    # not(x0 < 5) over a 12-bit domain: smallest witness is 5
    res = solve([lt5(True)], DOMAIN)
    assert res.status == "sat"
    assert res.model == {0: 5}


def test_contradiction_unsat():
    res = solve([lt5(True), lt5(False)], DOMAIN)
    assert res.status == "unsat"


def test_true_pc_blocks_everything():
    res = solve([PathCondition()], DOMAIN)
    assert res.status == "unsat"


def test_small_product_enumerates_all():
    pc1 = PathCondition([Conjunct(Relop("i32.eq", Sym(0), Const(0)), True),
                         Conjunct(Relop("i32.eq", Sym(1), Const(0)), True)])
    domains = {0: (0, 1), 1: (0, 1)}
    seen = set()
    explored = [pc1]
    while True:
        res = solve(explored, domains)
        if res.status == "unsat":
            break
        seen.add((res.model[0], res.model[1]))
        # exclude exactly this model and continue
        explored.append(PathCondition([
            Conjunct(Relop("i32.eq", Sym(0), Const(res.model[0])), True),
            Conjunct(Relop("i32.eq", Sym(1), Const(res.model[1])), True)]))
    assert seen == {(0, 1), (1, 0), (1, 1)}


def test_builtin_limit_enforced():
    domains = {0: (0, 4095), 1: (0, 4095)}
    pc = PathCondition([Conjunct(Relop("i32.lt_s", Sym(0), Sym(1)), True)])
    with pytest.raises(SolverUnavailableError):
        solve([pc], domains, SolverConfig(builtin_limit=2 ** 20))


def test_missing_domain_is_error():
    with pytest.raises(SolverError):
        solve([lt5()], {})


# -- SMT-LIB2 emission ---------------------------------------------------------

def test_emit_query_golden():
    query = emit_query([lt5(True)], [0], DOMAIN)
    assert query == textwrap.dedent("""\
        (set-logic QF_BV)
        (declare-const x0 (_ BitVec 32))
        (assert (bvsle (_ bv0 32) x0))
        (assert (bvsle x0 (_ bv4095 32)))
        (assert (not (distinct (ite (bvslt x0 (_ bv5 32)) (_ bv1 32) (_ bv0 32)) (_ bv0 32))))
        (check-sat)
        (get-value (x0))
        """)


def test_emit_negative_constants_two_complement():
    pc = PathCondition([Conjunct(Relop("i32.eq", Sym(0), Const(-1)), True)])
    query = emit_query([pc], [0], {0: (-8, 7)})
    assert "(_ bv4294967295 32)" in query      # -1
    assert "(assert (bvsle (_ bv4294967288 32) x0))" in query  # -8


def test_emit_compound_expression():
    pc = PathCondition([
        Conjunct(Binop("i32.or",
                       Relop("i32.lt_s", Sym(1), Const(0)),
                       Relop("i32.gt_s", Sym(1), Const(1))), True)])
    query = emit_query([pc], [1], {1: (0, 7)})
    assert "(bvor (ite (bvslt x1" in query


# -- solver output parsing --------------------------------------------------------

def test_parse_sat_hex_values():
    res = parse_solver_output("sat\n((x0 #x00000005))\n", [0])
    assert res.model == {0: 5}


def test_parse_sat_bv_literals():
    res = parse_solver_output("sat\n((x0 (_ bv7 32)) (x1 #b0001))\n", [0, 1])
    assert res.model == {0: 7, 1: 1}


def test_parse_negative_wraps():
    res = parse_solver_output("sat\n((x0 #xffffffff))\n", [0])
    assert res.model == {0: -1}


def test_parse_unsat_and_unknown():
    assert parse_solver_output("unsat\n", [0]).status == "unsat"
    assert parse_solver_output("unknown\n", [0]).status == "unknown"


def test_parse_garbage_rejected():
    with pytest.raises(SolverError):
        parse_solver_output("maybe\n", [0])
    with pytest.raises(SolverError):
        parse_solver_output("sat\n((y0 5))\n", [0])


# -- external backend plumbing ------------------------------------------------------

def canned_solver(tmp_path, body):
    path = tmp_path / "fakesolver.py"
    path.write_text("import sys\n_ = sys.stdin.read()\n" + body)
    return f"{sys.executable} {path}"


def test_external_backend_roundtrip(tmp_path):
    cmd = canned_solver(tmp_path, 'print("sat"); print("((x0 #x00000007))")\n')
    res = solve([lt5(True)], DOMAIN, SolverConfig(cmd=cmd))
    assert res.status == "sat"
    assert res.model == {0: 7}


def test_external_backend_unsat(tmp_path):
    cmd = canned_solver(tmp_path, 'print("unsat")\n')
    res = solve([lt5(True)], DOMAIN, SolverConfig(cmd=cmd))
    assert res.status == "unsat"


def test_external_backend_timeout(tmp_path):
    cmd = canned_solver(tmp_path, "import time\ntime.sleep(5)\n")
    res = solve([lt5(True)], DOMAIN, SolverConfig(cmd=cmd, timeout_ms=200))
    assert res.status == "unknown"


def test_external_backend_missing_binary():
    with pytest.raises(SolverUnavailableError):
        solve([lt5(True)], DOMAIN, SolverConfig(cmd="/nonexistent/solver -in"))
