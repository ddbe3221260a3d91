"""Path-condition solving.

The query is always "find an in-domain assignment satisfying none of the
explored path conditions". Two backends: a built-in exhaustive search for
small domain products, and an external SMT-LIB2 process over QF_BV.
"""
from __future__ import annotations

import itertools
import shlex
import subprocess
from dataclasses import dataclass

from .symbolic import (Binop, Conjunct, Const, PathCondition, Relop, Sym,
                       SymExpr, Unop, conjunct_holds, mentioned_indices)

BUILTIN_PRODUCT_LIMIT = 2 ** 20


class SolverError(Exception):
    pass


class SolverUnavailableError(SolverError):
    pass


@dataclass
class SolverConfig:
    cmd: str | None = None           # external solver command line, e.g. "z3 -in"
    timeout_ms: int = 10_000
    builtin_limit: int = BUILTIN_PRODUCT_LIMIT


@dataclass
class SolveResult:
    status: str                      # "sat" | "unsat" | "unknown"
    model: dict[int, int] | None = None


def solve(explored: list[PathCondition], domains: dict[int, tuple[int, int]],
          config: SolverConfig | None = None) -> SolveResult:
    """Find values avoiding every explored path condition.

    `domains` maps each symbolic index to its inclusive enumeration range;
    only indices mentioned by some condition constrain the search.
    """
    config = config or SolverConfig()
    mentioned = sorted(set().union(*[mentioned_indices(pc) for pc in explored])
                       if explored else set())
    for idx in mentioned:
        if idx not in domains:
            raise SolverError(f"no domain recorded for symbolic input {idx}")
    if config.cmd:
        return _solve_external(explored, mentioned, domains, config)
    product = 1
    for idx in mentioned:
        lo, hi = domains[idx]
        product *= max(0, hi - lo + 1)
        if product > config.builtin_limit:
            raise SolverUnavailableError(
                f"domain product exceeds builtin limit ({config.builtin_limit}); "
                "pass --solver-cmd to use an external SMT solver or shrink domains")
    return _solve_builtin(explored, mentioned, domains)


def _solve_builtin(explored, mentioned, domains) -> SolveResult:
    if not mentioned:
        # No symbolic inputs: the single (empty) assignment either falls
        # into some explored path or it does not.
        if any(_pc_satisfied(pc, {}) for pc in explored):
            return SolveResult("unsat")
        return SolveResult("sat", {})
    ranges = [range(domains[i][0], domains[i][1] + 1) for i in mentioned]
    for combo in itertools.product(*ranges):
        assignment = dict(zip(mentioned, combo))
        if not any(_pc_satisfied(pc, assignment) for pc in explored):
            return SolveResult("sat", assignment)
    return SolveResult("unsat")


def _pc_satisfied(pc: PathCondition, assignment) -> bool:
    return all(conjunct_holds(c, assignment) for c in pc)


# --- SMT-LIB2 emission -------------------------------------------------------

def _bv(v: int) -> str:
    return f"(_ bv{v & 0xFFFFFFFF} 32)"


def expr_to_smt(expr: SymExpr) -> str:
    """Every expression becomes a 32-bit bitvector term; relational
    operators produce 0/1 so they compose with arithmetic."""
    if isinstance(expr, Const):
        return _bv(expr.value)
    if isinstance(expr, Sym):
        return f"x{expr.index}"
    if isinstance(expr, Unop):
        return f"(ite (= {expr_to_smt(expr.operand)} {_bv(0)}) {_bv(1)} {_bv(0)})"
    left = expr_to_smt(expr.left)
    right = expr_to_smt(expr.right)
    if isinstance(expr, Relop):
        rel = {
            "i32.eq": f"(= {left} {right})",
            "i32.ne": f"(distinct {left} {right})",
            "i32.lt_s": f"(bvslt {left} {right})",
            "i32.le_s": f"(bvsle {left} {right})",
            "i32.gt_s": f"(bvsgt {left} {right})",
            "i32.ge_s": f"(bvsge {left} {right})",
        }[expr.op]
        return f"(ite {rel} {_bv(1)} {_bv(0)})"
    fn = {
        "i32.add": "bvadd", "i32.sub": "bvsub", "i32.mul": "bvmul",
        "i32.div_s": "bvsdiv", "i32.rem_s": "bvsrem",
        "i32.and": "bvand", "i32.or": "bvor", "i32.xor": "bvxor",
    }[expr.op]
    return f"({fn} {left} {right})"


def conjunct_to_smt(c: Conjunct) -> str:
    term = expr_to_smt(c.expr)
    return f"(distinct {term} {_bv(0)})" if c.truth else f"(= {term} {_bv(0)})"


def pc_to_smt(pc: PathCondition) -> str:
    if not pc.conjuncts:
        return "true"
    if len(pc.conjuncts) == 1:
        return conjunct_to_smt(pc.conjuncts[0])
    return "(and " + " ".join(conjunct_to_smt(c) for c in pc) + ")"


def emit_query(explored, mentioned, domains) -> str:
    lines = ["(set-logic QF_BV)"]
    for idx in mentioned:
        lines.append(f"(declare-const x{idx} (_ BitVec 32))")
    for idx in mentioned:
        lo, hi = domains[idx]
        lines.append(f"(assert (bvsle {_bv(lo)} x{idx}))")
        lines.append(f"(assert (bvsle x{idx} {_bv(hi)}))")
    for pc in explored:
        lines.append(f"(assert (not {pc_to_smt(pc)}))")
    lines.append("(check-sat)")
    if mentioned:
        lines.append("(get-value (" + " ".join(f"x{i}" for i in mentioned) + "))")
    return "\n".join(lines) + "\n"


def _solve_external(explored, mentioned, domains, config) -> SolveResult:
    query = emit_query(explored, mentioned, domains)
    try:
        proc = subprocess.run(
            shlex.split(config.cmd), input=query.encode(),
            capture_output=True, timeout=config.timeout_ms / 1000.0)
    except subprocess.TimeoutExpired:
        return SolveResult("unknown")
    except OSError as e:
        raise SolverUnavailableError(f"cannot launch solver {config.cmd!r}: {e}") from e
    return parse_solver_output(proc.stdout.decode("utf-8", "replace"), mentioned)


def parse_solver_output(text: str, mentioned) -> SolveResult:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SolverError("empty solver output")
    verdict = lines[0]
    if verdict == "unsat":
        return SolveResult("unsat")
    if verdict == "unknown":
        return SolveResult("unknown")
    if verdict != "sat":
        raise SolverError(f"unexpected solver verdict {verdict!r}")
    if not mentioned:
        return SolveResult("sat", {})
    values = _parse_get_value("\n".join(lines[1:]))
    model = {}
    for idx in mentioned:
        name = f"x{idx}"
        if name not in values:
            raise SolverError(f"solver model is missing {name}")
        v = values[name] & 0xFFFFFFFF
        model[idx] = v - 0x100000000 if v >= 0x80000000 else v
    return SolveResult("sat", model)


def _parse_get_value(text: str) -> dict[str, int]:
    """Parse ((x0 #x00000005) (x1 (_ bv7 32)) ...) permissively."""
    toks = text.replace("(", " ( ").replace(")", " ) ").split()
    out: dict[str, int] = {}
    i = 0
    while i < len(toks):
        if toks[i].startswith("x") and toks[i][1:].isdigit():
            name = toks[i]
            j = i + 1
            val_toks = []
            while j < len(toks) and toks[j] != ")":
                if toks[j] != "(":
                    val_toks.append(toks[j])
                j += 1
            if val_toks:
                out[name] = _parse_bv(val_toks)
            i = j
        else:
            i += 1
    return out


def _parse_bv(toks) -> int:
    if toks[0] == "_" and toks[1].startswith("bv"):
        return int(toks[1][2:])
    t = toks[0]
    if t.startswith("#x"):
        return int(t[2:], 16)
    if t.startswith("#b"):
        return int(t[2:], 2)
    try:
        return int(t)
    except ValueError:
        raise SolverError(f"cannot parse bitvector value {toks!r}") from None
