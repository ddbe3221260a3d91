"""Concolic execution over the concrete VM.

A snapshot state is expanded so every concrete slot gets a symbolic mirror,
then executed with the concrete engine while mirrors and the path condition
are maintained alongside. Iterating solve / run / extend merges each
explored path into a multiverse tree of the distinct futures.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import vm
from .solver import SolverConfig, solve
from .symbolic import (Binop, Conjunct, Const, PathCondition, Relop, Sym,
                       SymEnv, SymError, Unop, conjunct_holds)
from .tree import Tree
from .wat import BINOPS, RELOPS


class ConcolicError(Exception):
    pass


class StructuralError(ConcolicError):
    """Trace and tree disagree; indicates desynchronized components."""


@dataclass
class Bounds:
    max_instr: int = 10_000   # instructions per concolic iteration
    max_syms: int = 16        # symbolic inputs per iteration
    max_iterations: int = 64  # solver-guided iterations

    def __post_init__(self):
        if self.max_instr < 1 or self.max_syms < 1 or self.max_iterations < 1:
            raise ValueError("all bounds must be >= 1")


@dataclass(frozen=True)
class ChoicePoint:
    det_count: int            # deterministic instructions since the last choice
    prim: int                 # import index
    args: tuple[int, ...]
    value: int


@dataclass
class PathModel:
    """A (path condition, model) pair recorded on every node a path passed,
    plus the mock value of the edge it took out of that node (None when the
    outgoing edge was a step run)."""
    pc: PathCondition
    env: SymEnv
    taken: int | None


@dataclass
class ConcolicState:
    K: vm.ProgramState
    sym_frames: list[list]            # one mirror list per call frame
    sym_globals: list
    sym_stack: list
    sym_memory: dict[int, object]     # concrete address -> mirror
    env: SymEnv
    pc: PathCondition
    prims: vm.PrimitiveTable
    trace: list[ChoicePoint] = field(default_factory=list)

    def copy(self) -> "ConcolicState":
        return ConcolicState(
            K=self.K.copy(),
            sym_frames=[list(f) for f in self.sym_frames],
            sym_globals=list(self.sym_globals),
            sym_stack=list(self.sym_stack),
            sym_memory=dict(self.sym_memory),
            env=self.env.copy(),
            pc=PathCondition(self.pc.conjuncts),
            prims=self.prims,
            trace=list(self.trace),
        )


@dataclass
class IterationResult:
    pc: PathCondition
    env: SymEnv
    trace: list[ChoicePoint]
    partial: bool = False       # a bound cut the run short
    trapped: bool = False
    infeasible: bool = False    # a reused value fell outside the actual codomain


def expand(state: vm.ProgramState,
           prims: vm.PrimitiveTable | None = None) -> ConcolicState:
    """Mirror every concrete slot as a constant; empty env, true condition."""
    if state.status == "trapped":
        raise ConcolicError("cannot expand a trapped state")
    return ConcolicState(
        K=state.copy(),
        sym_frames=[[Const(v) for v in f.locals] for f in state.frames],
        sym_globals=[Const(v) for v in state.globals],
        sym_stack=[Const(v) for v in state.stack],
        sym_memory={},
        env=SymEnv(),
        pc=PathCondition(),
        prims=prims or vm.PrimitiveTable(),
    )


def _mem_read(cs: ConcolicState, ea: int, concrete: int):
    mirror = cs.sym_memory.get(ea)
    return mirror if mirror is not None else Const(concrete)


def _mem_write(cs: ConcolicState, ea: int, mirror):
    # overlapping stores concretize: drop any mirror sharing bytes with [ea, ea+4)
    for other in [k for k in cs.sym_memory if abs(k - ea) < 4]:
        del cs.sym_memory[other]
    cs.sym_memory[ea] = mirror


def cstep(cs: ConcolicState):
    """One concolic step; the concrete component advances exactly as the
    plain semantics would. Returns the ChoicePoint when an input ran, an
    IterationResult when a reused value was infeasible, else None."""
    state = cs.K
    cls = vm.classify(state)
    if cls.kind == vm.Kind.TERMINATED:
        raise vm.PreconditionError("cstep on terminated state")

    if cls.kind == vm.Kind.INPUT_PRIM:
        return _cstep_input(cs, cls)
    if cls.kind == vm.Kind.OUTPUT_PRIM:
        # effects are suppressed during analysis; only the stack changes
        imp = state.module.imports[cls.prim]
        del cs.sym_stack[len(cs.sym_stack) - imp.arity:]
        vm.step_suppressed_output(state)
        _sync_frames(cs)
        return None

    instr = vm.current_instr(state)
    op = instr.op
    sym = cs.sym_stack
    pending_load = None

    if op == "i32.const":
        sym.append(Const(instr.imm))
    elif op in BINOPS:
        b = sym.pop()
        a = sym.pop()
        if op in ("i32.div_s", "i32.rem_s"):
            _record_trap_guards(cs, op, a, b,
                                state.stack[-2], state.stack[-1])
        sym.append(Binop(op, a, b))
    elif op in RELOPS:
        b = sym.pop()
        a = sym.pop()
        sym.append(Relop(op, a, b))
    elif op == "i32.eqz":
        sym.append(Unop("i32.eqz", sym.pop()))
    elif op == "local.get":
        sym.append(cs.sym_frames[-1][instr.imm])
    elif op == "local.set":
        cs.sym_frames[-1][instr.imm] = sym.pop()
    elif op == "local.tee":
        cs.sym_frames[-1][instr.imm] = sym[-1]
    elif op == "global.get":
        sym.append(cs.sym_globals[instr.imm])
    elif op == "global.set":
        cs.sym_globals[instr.imm] = sym.pop()
    elif op == "drop":
        sym.pop()
    elif op == "i32.load":
        pending_load = (state.stack[-1] & 0xFFFFFFFF) + instr.imm
        sym.pop()
    elif op == "i32.store":
        ea = (state.stack[-2] & 0xFFFFFFFF) + instr.imm
        val_mirror = sym.pop()
        sym.pop()
        _mem_write(cs, ea, val_mirror)
    elif op in ("if", "br_if"):
        cond = state.stack[-1]
        mirror = sym.pop()
        cs.pc = cs.pc.extended(Conjunct(mirror, cond != 0))
    elif op == "call" and instr.imm >= len(state.module.imports):
        callee = state.module.functions[instr.imm - len(state.module.imports)]
        args = sym[len(sym) - callee.n_params:]
        del sym[len(sym) - callee.n_params:]
        cs.sym_frames.append(list(args) + [Const(0)] * callee.n_locals)
    # block / loop / br / nop / return: mirrors follow via the sync below

    vm.step_det(state)

    if pending_load is not None and state.status == "running":
        sym.append(_mem_read(cs, pending_load, state.stack[-1]))
    _sync_frames(cs)
    return None


def _has_sym(expr) -> bool:
    if isinstance(expr, Sym):
        return True
    if isinstance(expr, Unop):
        return _has_sym(expr.operand)
    if isinstance(expr, (Binop, Relop)):
        return _has_sym(expr.left) or _has_sym(expr.right)
    return False


INT_MIN = -0x80000000


def _record_trap_guards(cs: ConcolicState, op, a_mirror, b_mirror,
                        a_val: int, b_val: int):
    """Whether a division traps is itself a branch decision: inputs that
    make the divisor zero (or overflow the quotient) take a different path,
    so the guards join the path condition when they depend on an input."""
    if _has_sym(b_mirror):
        cs.pc = cs.pc.extended(Conjunct(b_mirror, b_val != 0))
    if b_val == 0:
        return  # the step traps; the overflow guard never evaluates
    if op != "i32.div_s":
        return
    if isinstance(b_mirror, Const) and b_mirror.value != -1:
        return  # divisor can never be -1 on any input
    if isinstance(a_mirror, Const) and a_mirror.value != INT_MIN:
        return
    if _has_sym(a_mirror) or _has_sym(b_mirror):
        overflow = Binop("i32.and",
                         Relop("i32.eq", a_mirror, Const(INT_MIN)),
                         Relop("i32.eq", b_mirror, Const(-1)))
        cs.pc = cs.pc.extended(
            Conjunct(overflow, a_val == INT_MIN and b_val == -1))


def _sync_frames(cs: ConcolicState):
    """Frame pops and stack unwinds follow the concrete state exactly."""
    del cs.sym_frames[len(cs.K.frames):]
    if len(cs.sym_stack) > len(cs.K.stack):
        del cs.sym_stack[len(cs.K.stack):]
    if len(cs.sym_stack) != len(cs.K.stack):
        raise ConcolicError("symbolic stack desynchronized from concrete stack")


def _cstep_input(cs: ConcolicState, cls):
    state = cs.K
    imp = state.module.imports[cls.prim]
    lo, hi = cs.prims.codomain(imp.name, cls.args)
    d = len(cs.trace)
    if d < len(cs.env):
        value = cs.env.values[d]
        if not lo <= value <= hi:
            # The solver picked a value this control path cannot produce
            # here; record the violated bound so the whole region is pruned.
            out = Binop("i32.or",
                        Relop("i32.lt_s", Sym(d), Const(lo)),
                        Relop("i32.gt_s", Sym(d), Const(hi)))
            cs.pc = cs.pc.extended(Conjunct(out, True))
            cs.env.domains[d] = (min(cs.env.domains[d][0], lo),
                                 max(cs.env.domains[d][1], hi))
            return IterationResult(cs.pc, cs.env, cs.trace, infeasible=True)
        cs.env.domains[d] = (lo, hi)
    else:
        value = lo  # fresh inputs take the domain minimum, deterministically
        cs.env.bind_fresh(value, (lo, hi))
    del cs.sym_stack[len(cs.sym_stack) - imp.arity:]
    vm.step_mocked(state, value, cs.prims)
    cs.sym_stack.append(Sym(d))
    _sync_frames(cs)
    choice = ChoicePoint(0, cls.prim, cls.args, value)
    cs.trace.append(choice)
    return choice


def run_iteration(cs0: ConcolicState, env: SymEnv, bounds: Bounds) -> IterationResult:
    """Execute one concolic iteration from a copy of cs0 seeded with env."""
    cs = cs0.copy()
    cs.env = env.copy()
    cs.pc = PathCondition()
    cs.trace = []
    instr_count = 0
    det_since_choice = 0
    while True:
        cls = vm.classify(cs.K)
        if cls.kind == vm.Kind.TERMINATED:
            trapped = cs.K.status == "trapped"
            return IterationResult(cs.pc, cs.env, cs.trace, trapped=trapped)
        if instr_count >= bounds.max_instr:
            return IterationResult(cs.pc, cs.env, cs.trace, partial=True)
        if cls.kind == vm.Kind.INPUT_PRIM and len(cs.trace) >= bounds.max_syms:
            return IterationResult(cs.pc, cs.env, cs.trace, partial=True)
        result = cstep(cs)
        instr_count += 1
        if isinstance(result, IterationResult):
            return result
        if isinstance(result, ChoicePoint):
            cs.trace[-1] = ChoicePoint(det_since_choice, result.prim,
                                       result.args, result.value)
            det_since_choice = 0
        else:
            det_since_choice += 1


def equivalent(pc_a: PathCondition, env_a: SymEnv,
               pc_b: PathCondition, env_b: SymEnv, d: int) -> bool:
    """Do the two models agree behaviorally through input d?

    Cross-substitutes the values of inputs 0..d (inclusive) and checks that
    both path conditions still hold.
    """
    if d >= len(env_a) or d >= len(env_b):
        raise StructuralError(f"depth {d} exceeds a model's input count")
    swapped_a = list(env_a.values)
    swapped_b = list(env_b.values)
    for i in range(d + 1):
        swapped_a[i] = env_b.values[i]
        swapped_b[i] = env_a.values[i]
    try:
        return (_pc_holds(pc_a, swapped_a) and _pc_holds(pc_b, swapped_b))
    except SymError as e:
        raise StructuralError(str(e)) from e


def _pc_holds(pc: PathCondition, values) -> bool:
    return all(conjunct_holds(c, values) for c in pc)


def extend_tree(tree: Tree, root: int, env: SymEnv, pc: PathCondition,
                trace: list[ChoicePoint]) -> int:
    """Merge one explored path into the tree, walking from `root`, following
    the recorded model equivalent at each input and branching at the first
    input where none is."""
    node_id = root
    visited: list[tuple[int, int | None]] = []  # (node, mock value taken or None)
    for d, choice in enumerate(trace):
        remaining = choice.det_count
        while remaining > 0:
            node = tree.node(node_id)
            edge = node.step_edge()
            if edge is None:
                if node.mock_edges():
                    raise StructuralError(
                        f"deterministic run expected at choice node {node_id}")
                visited.append((node_id, None))
                node_id = tree.attach_step(node_id, remaining)
                remaining = 0
            elif edge.label.count <= remaining:
                visited.append((node_id, None))
                remaining -= edge.label.count
                node_id = edge.to
            else:
                raise StructuralError(
                    f"choice point {d} lands inside a deterministic run")
        choice_node = tree.node(node_id)
        if choice_node.step_edge() is not None:
            raise StructuralError(
                f"choice point {d} reached node {node_id} with a step edge")
        taken = None
        for model in choice_node.path_models:
            if equivalent(pc, env, model.pc, model.env, d):
                taken = model.taken
                break
        if taken is None:
            taken = choice.value
        visited.append((node_id, taken))
        node_id = tree.follow_mock(node_id, taken, choice.prim, choice.args)
    for nid, taken in visited:
        tree.node(nid).path_models.append(PathModel(pc, env, taken))
    return node_id


@dataclass
class ConcolicReport:
    tree: Tree
    iterations: int = 0
    paths: int = 0
    infeasible: int = 0
    warnings: list[str] = field(default_factory=list)


def concolic(cs: ConcolicState, bounds: Bounds | None = None,
             solver: SolverConfig | None = None) -> ConcolicReport:
    """Iteratively solve, run, and merge until no unexplored path remains or
    a bound is reached; returns the tree of future execution paths."""
    bounds = bounds or Bounds()
    report = ConcolicReport(tree=Tree())
    explored: list[PathCondition] = []
    domains: dict[int, tuple[int, int]] = {}

    while True:
        if report.iterations >= bounds.max_iterations:
            report.warnings.append(
                f"iteration limit {bounds.max_iterations} reached; tree may be partial")
            break
        result = solve(explored, domains, solver)
        if result.status == "unsat":
            break
        if result.status == "unknown":
            report.warnings.append("solver returned unknown; tree may be partial")
            break
        env = _model_to_env(result.model, domains)
        itr = run_iteration(cs, env, bounds)
        report.iterations += 1
        for idx, dom in enumerate(itr.env.domains):
            _merge_domain(domains, idx, dom)
        explored.append(itr.pc)
        if itr.infeasible:
            report.infeasible += 1
            continue
        extend_tree(report.tree, report.tree.root, itr.env, itr.pc, itr.trace)
        report.paths += 1

    report.tree.strip_path_models()
    return report


def _merge_domain(domains, idx, dom):
    if idx in domains:
        lo, hi = domains[idx]
        domains[idx] = (min(lo, dom[0]), max(hi, dom[1]))
    else:
        domains[idx] = dom


def _model_to_env(model: dict[int, int], domains) -> SymEnv:
    env = SymEnv()
    if model:
        length = max(model) + 1
        for idx in range(length):
            dom = domains.get(idx, (0, 0))
            env.values.append(model.get(idx, dom[0]))
            env.domains.append(dom)
    return env
