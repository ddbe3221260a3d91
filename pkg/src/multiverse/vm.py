"""Concrete execution of the text-format subset.

A ProgramState is a call stack of frames over a shared value stack, linear
memory and globals. Stepping is fully deterministic except for calls to
imported input primitives, which read from an Environment.
"""
from __future__ import annotations

import random as _random
from dataclasses import dataclass, field
from enum import Enum

from .wat import BINOPS, InstrId, Instr, Module, PAGE_SIZE, RELOPS

INT_MIN = -0x80000000
ANALOG_MAX_DEFAULT = 4095  # 12-bit ADC


class VmError(Exception):
    pass


class PreconditionError(VmError):
    pass


class MockOnNonPrimError(VmError):
    pass


class MockOutOfCodomainError(VmError):
    pass


class EnvironmentBugError(VmError):
    """An Environment produced a value outside the primitive's codomain."""


class Kind(Enum):
    NON_PRIM = "non-prim"
    INPUT_PRIM = "input-prim"
    OUTPUT_PRIM = "output-prim"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class Classified:
    kind: Kind
    prim: int | None = None  # import index
    args: tuple[int, ...] = ()


@dataclass(frozen=True)
class PrimEvent:
    prim: int
    name: str
    kind: str  # "in" | "out"
    args: tuple[int, ...]
    value: int | None  # None for output primitives


@dataclass
class PrimSpec:
    name: str
    kind: str
    arity: int
    lo: int | None = None
    hi: int | None = None


class PrimitiveTable:
    """Built-in primitive set; analog codomain is configurable for tests."""

    def __init__(self, analog_max: int = ANALOG_MAX_DEFAULT):
        self.analog_max = analog_max
        self.specs = {
            "chip_analog_read": PrimSpec("chip_analog_read", "in", 1, 0, analog_max),
            "chip_digital_read": PrimSpec("chip_digital_read", "in", 1, 0, 1),
            "random": PrimSpec("random", "in", 1),  # codomain depends on the argument
            "chip_digital_write": PrimSpec("chip_digital_write", "out", 2),
            "print_int": PrimSpec("print_int", "out", 1),
        }

    def spec(self, name: str) -> PrimSpec:
        if name not in self.specs:
            raise VmError(f"unknown primitive {name!r}")
        return self.specs[name]

    def codomain(self, name: str, args) -> tuple[int, int]:
        """Inclusive value range an input primitive can return for `args`."""
        spec = self.spec(name)
        if spec.kind != "in":
            raise VmError(f"{name} is not an input primitive")
        if name == "random":
            return (0, args[0] - 1)
        return (spec.lo, spec.hi)


class Environment:
    """Source of input-primitive values plus a log of external effects.

    Modes: seeded (pure function of seed and invocation ordinal), scripted
    (per-primitive value lists, cycled), constant.
    """

    def __init__(self, mode="seeded", seed=0, values=None, constant=0,
                 prims: PrimitiveTable | None = None):
        self.mode = mode
        self.seed = seed
        self.values = values or {}
        self.constant = constant
        self.prims = prims or PrimitiveTable()
        self.pin_states: dict[int, int] = {}
        self.effect_log: list[tuple[int, str, tuple, object]] = []
        self._ordinal = 0
        self._script_pos: dict[str, int] = {}

    def reset(self):
        """Restore the initial seed so a replay draws the same values."""
        self.pin_states = {}
        self.effect_log = []
        self._ordinal = 0
        self._script_pos = {}

    def clone_initial(self) -> "Environment":
        env = Environment(self.mode, self.seed, dict(self.values), self.constant,
                          self.prims)
        return env

    def read(self, name: str, args) -> int:
        lo, hi = self.prims.codomain(name, args)
        if lo > hi:
            raise EnvironmentBugError(f"{name}{tuple(args)} has an empty codomain")
        ordinal = self._ordinal
        self._ordinal += 1
        if self.mode == "seeded":
            v = _random.Random(f"{self.seed}:{ordinal}").randint(lo, hi)
        elif self.mode == "scripted":
            vals = self.values.get(name)
            if not vals:
                v = lo
            else:
                pos = self._script_pos.get(name, 0)
                v = vals[pos % len(vals)]
                self._script_pos[name] = pos + 1
        elif self.mode == "constant":
            v = self.constant
        else:
            raise VmError(f"unknown environment mode {self.mode!r}")
        if not lo <= v <= hi:
            raise EnvironmentBugError(
                f"environment produced {v} outside codomain [{lo},{hi}] of {name}")
        self.effect_log.append((ordinal, name, tuple(args), v))
        return v

    def write(self, name: str, args):
        ordinal = self._ordinal
        self._ordinal += 1
        if name == "chip_digital_write":
            self.pin_states[args[0]] = args[1]
        self.effect_log.append((ordinal, name, tuple(args), None))


@dataclass
class Frame:
    func: int                     # defined-function index
    path: list[tuple[int, int]]   # (instr index, arm) per open structured level
    ip: int                       # index into the innermost instruction list
    blocks: list[int]             # value-stack height at entry of each open level
    locals: list[int]
    base: int                     # value-stack height at function entry

    def copy(self):
        return Frame(self.func, list(self.path), self.ip, list(self.blocks),
                     list(self.locals), self.base)


@dataclass
class ProgramState:
    module: Module = field(compare=False, repr=False, default=None)
    frames: list[Frame] = field(default_factory=list)
    globals: list[int] = field(default_factory=list)
    stack: list[int] = field(default_factory=list)
    memory: bytearray = field(default_factory=bytearray)
    status: str = "running"       # running | finished | trapped
    trap_reason: str | None = None

    def copy(self) -> "ProgramState":
        return ProgramState(
            module=self.module,
            frames=[f.copy() for f in self.frames],
            globals=list(self.globals),
            stack=list(self.stack),
            memory=bytearray(self.memory),
            status=self.status,
            trap_reason=self.trap_reason,
        )


def instantiate(module: Module, env: Environment | None = None) -> ProgramState:
    """Fresh state paused at the entry function's first instruction."""
    if module.entry is None:
        raise VmError("missing entry function: export or name a function 'main'")
    entry = module.functions[module.entry]
    state = ProgramState(
        module=module,
        frames=[Frame(module.entry, [], 0, [], [0] * (entry.n_params + entry.n_locals), 0)],
        globals=[g.init for g in module.globals],
        stack=[],
        memory=bytearray(module.memory_pages * PAGE_SIZE),
    )
    _normalize(state)
    return state


def wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - 0x100000000 if v >= 0x80000000 else v


def _resolve_list(module, frame):
    lst = module.functions[frame.func].body
    for idx, arm in frame.path:
        instr = lst[idx]
        lst = instr.body if arm == 0 else instr.else_body
    return lst


def current_instr(state: ProgramState) -> Instr | None:
    if state.status != "running" or not state.frames:
        return None
    frame = state.frames[-1]
    return _resolve_list(state.module, frame)[frame.ip]


def instr_id(state: ProgramState) -> InstrId:
    """InstrId of the next instruction; raises on a terminated state."""
    instr = current_instr(state)
    if instr is None:
        raise PreconditionError("no next instruction in a terminated state")
    return InstrId(state.frames[-1].func, instr.iid)


def _normalize(state: ProgramState):
    """Advance past exhausted instruction lists, popping levels and frames."""
    while state.frames:
        frame = state.frames[-1]
        lst = _resolve_list(state.module, frame)
        if frame.ip < len(lst):
            return
        if frame.path:
            idx, _arm = frame.path.pop()
            frame.blocks.pop()
            frame.ip = idx + 1
        else:
            del state.stack[frame.base:]
            state.frames.pop()
    state.status = "finished"


def _trap(state: ProgramState, reason: str):
    state.status = "trapped"
    state.trap_reason = reason


def classify(state: ProgramState) -> Classified:
    """What the next step would do: plain instruction, primitive, or nothing."""
    if state.status != "running" or not state.frames:
        return Classified(Kind.TERMINATED)
    instr = current_instr(state)
    if instr.op == "call" and instr.imm < len(state.module.imports):
        imp = state.module.imports[instr.imm]
        args = tuple(state.stack[len(state.stack) - imp.arity:])
        kind = Kind.INPUT_PRIM if imp.kind == "in" else Kind.OUTPUT_PRIM
        return Classified(kind, prim=instr.imm, args=args)
    return Classified(Kind.NON_PRIM)


def _div_s(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _rem_s(a: int, b: int) -> int:
    return a - _div_s(a, b) * b


_BINOP_FN = {
    "i32.add": lambda a, b: wrap32(a + b),
    "i32.sub": lambda a, b: wrap32(a - b),
    "i32.mul": lambda a, b: wrap32(a * b),
    "i32.and": lambda a, b: wrap32((a & 0xFFFFFFFF) & (b & 0xFFFFFFFF)),
    "i32.or": lambda a, b: wrap32((a & 0xFFFFFFFF) | (b & 0xFFFFFFFF)),
    "i32.xor": lambda a, b: wrap32((a & 0xFFFFFFFF) ^ (b & 0xFFFFFFFF)),
}

_RELOP_FN = {
    "i32.eq": lambda a, b: int(a == b),
    "i32.ne": lambda a, b: int(a != b),
    "i32.lt_s": lambda a, b: int(a < b),
    "i32.le_s": lambda a, b: int(a <= b),
    "i32.gt_s": lambda a, b: int(a > b),
    "i32.ge_s": lambda a, b: int(a >= b),
}


def apply_binop(op: str, a: int, b: int) -> int:
    """Two's-complement i32 semantics shared with the symbolic evaluator.

    Raises ZeroDivisionError on division or remainder by zero and
    OverflowError on INT_MIN / -1, mirroring the VM traps.
    """
    if op == "i32.div_s":
        if b == 0:
            raise ZeroDivisionError
        if a == INT_MIN and b == -1:
            raise OverflowError
        return _div_s(a, b)
    if op == "i32.rem_s":
        if b == 0:
            raise ZeroDivisionError
        return wrap32(_rem_s(a, b))
    fn = _BINOP_FN.get(op) or _RELOP_FN.get(op)
    return fn(a, b)


def step_det(state: ProgramState) -> ProgramState:
    """Execute one deterministic instruction in place; returns the state."""
    cls = classify(state)
    if cls.kind != Kind.NON_PRIM:
        raise PreconditionError(f"step_det on {cls.kind.value} state")
    frame = state.frames[-1]
    instr = current_instr(state)
    op = instr.op
    stack = state.stack

    if op == "i32.const":
        stack.append(instr.imm)
    elif op in BINOPS:
        b = stack.pop()
        a = stack.pop()
        try:
            stack.append(apply_binop(op, a, b))
        except ZeroDivisionError:
            _trap(state, "div-by-zero")
            return state
        except OverflowError:
            _trap(state, "int-overflow")
            return state
    elif op in RELOPS:
        b = stack.pop()
        a = stack.pop()
        stack.append(_RELOP_FN[op](a, b))
    elif op == "i32.eqz":
        stack.append(int(stack.pop() == 0))
    elif op == "local.get":
        stack.append(frame.locals[instr.imm])
    elif op == "local.set":
        frame.locals[instr.imm] = stack.pop()
    elif op == "local.tee":
        frame.locals[instr.imm] = stack[-1]
    elif op == "global.get":
        stack.append(state.globals[instr.imm])
    elif op == "global.set":
        state.globals[instr.imm] = stack.pop()
    elif op == "drop":
        stack.pop()
    elif op == "nop":
        pass
    elif op == "i32.load":
        addr = stack.pop() & 0xFFFFFFFF
        ea = addr + instr.imm
        if ea + 4 > len(state.memory):
            _trap(state, "out-of-bounds-load")
            return state
        stack.append(wrap32(int.from_bytes(state.memory[ea:ea + 4], "little")))
    elif op == "i32.store":
        v = stack.pop()
        addr = stack.pop() & 0xFFFFFFFF
        ea = addr + instr.imm
        if ea + 4 > len(state.memory):
            _trap(state, "out-of-bounds-store")
            return state
        state.memory[ea:ea + 4] = (v & 0xFFFFFFFF).to_bytes(4, "little")
    elif op in ("block", "loop"):
        frame.path.append((frame.ip, 0))
        frame.blocks.append(len(stack))
        frame.ip = 0
        _normalize(state)
        return state
    elif op == "if":
        cond = stack.pop()
        arm = 0 if cond != 0 else 1
        if arm == 1 and not instr.else_body:
            frame.ip += 1
            _normalize(state)
            return state
        frame.path.append((frame.ip, arm))
        frame.blocks.append(len(stack))
        frame.ip = 0
        _normalize(state)
        return state
    elif op == "br":
        _do_branch(state, frame, instr.imm)
        return state
    elif op == "br_if":
        cond = stack.pop()
        if cond != 0:
            _do_branch(state, frame, instr.imm)
            return state
    elif op == "return":
        del stack[frame.base:]
        state.frames.pop()
        _normalize(state)
        return state
    elif op == "call":
        didx = instr.imm - len(state.module.imports)
        callee = state.module.functions[didx]
        args = [stack.pop() for _ in range(callee.n_params)]
        args.reverse()
        frame.ip += 1  # return address
        state.frames.append(Frame(
            func=didx, path=[], ip=0, blocks=[],
            locals=args + [0] * callee.n_locals, base=len(stack),
        ))
        _normalize(state)
        return state
    else:  # pragma: no cover - parser rejects unknown ops
        raise VmError(f"unhandled op {op}")

    frame.ip += 1
    _normalize(state)
    return state


def _do_branch(state: ProgramState, frame: Frame, depth: int):
    level = len(frame.path) - 1 - depth
    if level < 0:
        # branching out of the function body acts like return
        del state.stack[frame.base:]
        state.frames.pop()
        _normalize(state)
        return
    idx, _arm = frame.path[level]
    target = _resolve_enclosing(state.module, frame, level)[idx]
    del state.stack[frame.blocks[level]:]
    if target.op == "loop":
        del frame.path[level + 1:]
        del frame.blocks[level + 1:]
        frame.ip = 0
    else:
        del frame.path[level:]
        del frame.blocks[level:]
        frame.ip = idx + 1
    _normalize(state)


def _resolve_enclosing(module, frame, level):
    lst = module.functions[frame.func].body
    for idx, arm in frame.path[:level]:
        instr = lst[idx]
        lst = instr.body if arm == 0 else instr.else_body
    return lst


def step_prim(state: ProgramState, env: Environment):
    """Execute the pending primitive call against the environment."""
    cls = classify(state)
    if cls.kind not in (Kind.INPUT_PRIM, Kind.OUTPUT_PRIM):
        raise PreconditionError("step_prim requires a pending primitive call")
    imp = state.module.imports[cls.prim]
    frame = state.frames[-1]
    if cls.kind == Kind.INPUT_PRIM:
        lo, hi = env.prims.codomain(imp.name, cls.args)
        if lo > hi:
            _trap(state, "empty-codomain")
            return state, None
        v = env.read(imp.name, cls.args)
        del state.stack[len(state.stack) - imp.arity:]
        state.stack.append(v)
        event = PrimEvent(cls.prim, imp.name, "in", cls.args, v)
    else:
        env.write(imp.name, cls.args)
        del state.stack[len(state.stack) - imp.arity:]
        event = PrimEvent(cls.prim, imp.name, "out", cls.args, None)
    frame.ip += 1
    _normalize(state)
    return state, event


def step_mocked(state: ProgramState, v: int, prims: PrimitiveTable | None = None):
    """Replace the pending input primitive's result with `v` (no env read)."""
    cls = classify(state)
    if cls.kind != Kind.INPUT_PRIM:
        raise MockOnNonPrimError(f"mock on {cls.kind.value} state")
    imp = state.module.imports[cls.prim]
    prims = prims or PrimitiveTable()
    lo, hi = prims.codomain(imp.name, cls.args)
    if not lo <= v <= hi:
        raise MockOutOfCodomainError(
            f"{v} outside codomain [{lo},{hi}] of {imp.name}{tuple(cls.args)}")
    del state.stack[len(state.stack) - imp.arity:]
    state.stack.append(v)
    state.frames[-1].ip += 1
    _normalize(state)
    return state


def step_suppressed_output(state: ProgramState):
    """Pop an output primitive's arguments without any external effect."""
    cls = classify(state)
    if cls.kind != Kind.OUTPUT_PRIM:
        raise PreconditionError("not at an output primitive")
    imp = state.module.imports[cls.prim]
    del state.stack[len(state.stack) - imp.arity:]
    state.frames[-1].ip += 1
    _normalize(state)
    return state


def run_plain(state: ProgramState, env: Environment, max_steps: int | None = None):
    """Run to termination (or step budget); returns executed instruction count."""
    steps = 0
    while state.status == "running":
        if max_steps is not None and steps >= max_steps:
            break
        cls = classify(state)
        if cls.kind == Kind.NON_PRIM:
            step_det(state)
        else:
            step_prim(state, env)
        steps += 1
    return steps
