"""Symbolic expressions mirroring the i32 instruction subset, path
conditions as ordered boolean conjuncts, and concrete evaluation with the
VM's exact wrap/trap semantics.
"""
from __future__ import annotations

from dataclasses import dataclass

from .vm import apply_binop


class SymTrap(Exception):
    """Evaluation hit a trapping operation (division by zero or overflow)."""


class SymError(Exception):
    pass


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Sym:
    index: int


@dataclass(frozen=True)
class Unop:
    op: str
    operand: "SymExpr"


@dataclass(frozen=True)
class Binop:
    op: str
    left: "SymExpr"
    right: "SymExpr"


@dataclass(frozen=True)
class Relop:
    op: str
    left: "SymExpr"
    right: "SymExpr"


SymExpr = Const | Sym | Unop | Binop | Relop


@dataclass(frozen=True)
class Conjunct:
    """One path-condition entry: `expr != 0` when truth else `expr = 0`."""
    expr: SymExpr
    truth: bool

    def negated(self) -> "Conjunct":
        return Conjunct(self.expr, not self.truth)


@dataclass
class PathCondition:
    conjuncts: list[Conjunct]

    def __init__(self, conjuncts=None):
        self.conjuncts = list(conjuncts or [])

    def extended(self, conjunct: Conjunct) -> "PathCondition":
        return PathCondition(self.conjuncts + [conjunct])

    def __len__(self):
        return len(self.conjuncts)

    def __iter__(self):
        return iter(self.conjuncts)


@dataclass
class SymEnv:
    """Concrete values for symbolic inputs, one per input-primitive
    invocation of an iteration, with their codomain ranges."""
    values: list[int]
    domains: list[tuple[int, int]]

    def __init__(self, values=None, domains=None):
        self.values = list(values or [])
        self.domains = list(domains or [])

    def __len__(self):
        return len(self.values)

    def copy(self) -> "SymEnv":
        return SymEnv(self.values, self.domains)

    def bind_fresh(self, value: int, domain: tuple[int, int]) -> int:
        self.values.append(value)
        self.domains.append(domain)
        return len(self.values) - 1


def evaluate(expr: SymExpr, values) -> int:
    """Evaluate under an index->value assignment; raises SymTrap on traps."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Sym):
        try:
            return values[expr.index]
        except (IndexError, KeyError):
            raise SymError(f"no value for symbolic input {expr.index}") from None
    if isinstance(expr, Unop):
        if expr.op != "i32.eqz":
            raise SymError(f"unknown unop {expr.op}")
        return int(evaluate(expr.operand, values) == 0)
    # Binop and Relop share the VM's operator table
    a = evaluate(expr.left, values)
    b = evaluate(expr.right, values)
    try:
        return apply_binop(expr.op, a, b)
    except ZeroDivisionError:
        raise SymTrap("div-by-zero") from None
    except OverflowError:
        raise SymTrap("int-overflow") from None


def conjunct_holds(c: Conjunct, values) -> bool:
    """Whether one conjunct holds; a trapping evaluation never holds."""
    try:
        v = evaluate(c.expr, values)
    except SymTrap:
        return False
    return (v != 0) if c.truth else (v == 0)


def pc_holds(pc: PathCondition, values) -> bool:
    return all(conjunct_holds(c, values) for c in pc)


def mentioned_indices(pc: PathCondition) -> set[int]:
    out: set[int] = set()
    for c in pc:
        _collect(c.expr, out)
    return out


def _collect(expr: SymExpr, out: set[int]):
    if isinstance(expr, Sym):
        out.add(expr.index)
    elif isinstance(expr, Unop):
        _collect(expr.operand, out)
    elif isinstance(expr, (Binop, Relop)):
        _collect(expr.left, out)
        _collect(expr.right, out)


def format_expr(expr: SymExpr) -> str:
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Sym):
        return f"x{expr.index}"
    if isinstance(expr, Unop):
        return f"eqz({format_expr(expr.operand)})"
    op = expr.op.removeprefix("i32.")
    return f"({format_expr(expr.left)} {op} {format_expr(expr.right)})"


def format_pc(pc: PathCondition) -> str:
    if not pc.conjuncts:
        return "true"
    parts = []
    for c in pc:
        body = format_expr(c.expr)
        parts.append(f"{body} != 0" if c.truth else f"{body} = 0")
    return " and ".join(parts)
