"""Parser and validator for the WebAssembly text-format subset.

Accepts both folded s-expressions and plain instruction sequences, resolves
names, checks stack discipline per block, and assigns every executable
instruction a stable pre-order id used for breakpoints.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple

PAGE_SIZE = 65536
MAX_PAGES = 4

# (pops, pushes) for the plain value-stack instructions.
BINOPS = {
    "i32.add", "i32.sub", "i32.mul", "i32.div_s", "i32.rem_s",
    "i32.and", "i32.or", "i32.xor",
}
RELOPS = {"i32.eq", "i32.ne", "i32.lt_s", "i32.le_s", "i32.gt_s", "i32.ge_s"}


class WatError(Exception):
    """Parse or validation failure, carrying a source position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class InstrId(NamedTuple):
    """Stable address of an executable instruction site.

    ``func`` indexes the module's defined functions, ``instr`` is the
    pre-order index within that function (openers numbered, else/end not).
    """

    func: int
    instr: int

    def __str__(self):
        return f"{self.func}:{self.instr}"


@dataclass
class Instr:
    op: str
    imm: object = None
    body: list = field(default_factory=list)
    else_body: list = field(default_factory=list)
    iid: int | None = None
    line: int = 0
    col: int = 0


@dataclass
class ImportDef:
    name: str
    kind: str  # "in" | "out"
    arity: int


@dataclass
class GlobalDef:
    mutable: bool
    init: int


@dataclass
class Function:
    name: str | None
    n_params: int
    n_locals: int  # declared locals, excluding params
    body: list[Instr]
    instr_count: int = 0
    instr_index: dict = field(default_factory=dict)


@dataclass
class Module:
    imports: list[ImportDef]
    globals: list[GlobalDef]
    memory_pages: int
    functions: list[Function]
    entry: int | None  # defined-function index of the start function
    content_hash: bytes
    func_index_by_name: dict[str, int] = field(default_factory=dict)

    def defined_index(self, name):
        if name not in self.func_index_by_name:
            raise WatError(f"unknown function name {name!r}")
        return self.func_index_by_name[name]

    def instr_by_id(self, iid: InstrId) -> Instr:
        instr = self.functions[iid.func].instr_index.get(iid.instr)
        if instr is None:
            raise WatError(f"no instruction {iid} in module")
        return instr


# --- tokenizer -------------------------------------------------------------

class _Tok(NamedTuple):
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    line, col = 1, 1
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            i += 1
            col += 1
        elif src.startswith(";;", i):
            while i < n and src[i] != "\n":
                i += 1
        elif src.startswith("(;", i):
            start_line, start_col = line, col
            depth = 1
            i += 2
            col += 2
            while i < n and depth:
                if src.startswith("(;", i):
                    depth += 1
                    i += 2
                    col += 2
                elif src.startswith(";)", i):
                    depth -= 1
                    i += 2
                    col += 2
                elif src[i] == "\n":
                    line += 1
                    col = 1
                    i += 1
                else:
                    i += 1
                    col += 1
            if depth:
                raise WatError("unterminated block comment", start_line, start_col)
        elif c in "()":
            toks.append(_Tok(c, line, col))
            i += 1
            col += 1
        elif c == '"':
            start = i
            start_line, start_col = line, col
            i += 1
            col += 1
            while i < n and src[i] != '"':
                if src[i] == "\n":
                    raise WatError("unterminated string", start_line, start_col)
                i += 1
                col += 1
            if i >= n:
                raise WatError("unterminated string", start_line, start_col)
            i += 1
            col += 1
            toks.append(_Tok(src[start:i], start_line, start_col))
        else:
            start = i
            start_line, start_col = line, col
            while i < n and src[i] not in ' \t\r\n();"':
                i += 1
                col += 1
            toks.append(_Tok(src[start:i], start_line, start_col))
    return toks


def _parse_sexprs(toks: list[_Tok]):
    """Token list -> nested lists of _Tok (lists keep the '(' position)."""
    pos = 0

    def parse_one():
        nonlocal pos
        tok = toks[pos]
        if tok.text == "(":
            open_tok = tok
            pos += 1
            items = [open_tok]
            while pos < len(toks) and toks[pos].text != ")":
                items.append(parse_one())
            if pos >= len(toks):
                raise WatError("unbalanced '('", open_tok.line, open_tok.col)
            pos += 1  # ')'
            return items
        pos += 1
        return tok

    out = []
    while pos < len(toks):
        out.append(parse_one())
    return out


def _is_list(x):
    return isinstance(x, list)


def _head(x):
    return x[1].text if len(x) > 1 and isinstance(x[1], _Tok) else None


def _pos(x):
    tok = x[0] if _is_list(x) else x
    return tok.line, tok.col


def _parse_int(tok: _Tok) -> int:
    text = tok.text
    try:
        if text.lower().startswith("0x") or text.lower().startswith("-0x"):
            return int(text, 16)
        return int(text, 10)
    except ValueError:
        raise WatError(f"expected integer, got {text!r}", tok.line, tok.col)


# --- module building -------------------------------------------------------

class _FuncCtx:
    def __init__(self):
        self.param_names = {}
        self.local_names = {}
        self.n_params = 0
        self.n_locals = 0


def parse_module(text: str) -> Module:
    """Parse and validate a module from WAT-subset source text."""
    toks = _tokenize(text)
    top = _parse_sexprs(toks)
    if len(top) != 1 or not _is_list(top[0]) or _head(top[0]) != "module":
        # allow a bare (func ...) for convenience in small snippets
        if len(top) == 1 and _is_list(top[0]) and _head(top[0]) == "func":
            top = [[top[0][0], _Tok("module", 1, 1), top[0]]]
        else:
            raise WatError("expected a single (module ...) form", 1, 1)
    fields = top[0][2:]

    imports: list[ImportDef] = []
    globals_: list[GlobalDef] = []
    global_names: dict[str, int] = {}
    memory_pages = 0
    raw_funcs = []
    func_names: dict[str, int] = {}  # combined index space: imports then defined
    exports: dict[str, str] = {}

    for f in fields:
        if not _is_list(f):
            raise WatError("unexpected token in module", *_pos(f))
        head = _head(f)
        line, col = _pos(f)
        if head == "import":
            if raw_funcs:
                raise WatError("imports must precede function definitions", line, col)
            imports.append(_parse_import(f, func_names, len(imports)))
        elif head == "global":
            _parse_global(f, globals_, global_names)
        elif head == "memory":
            if len(f) != 3 or not isinstance(f[2], _Tok):
                raise WatError("memory expects a page count", line, col)
            memory_pages = _parse_int(f[2])
            if not 0 <= memory_pages <= MAX_PAGES:
                raise WatError(f"memory pages must be 0..{MAX_PAGES}", line, col)
        elif head == "export":
            name_tok = f[2]
            inner = f[3]
            if _head(inner) != "func":
                raise WatError("only function exports supported", line, col)
            exports[name_tok.text.strip('"')] = inner[2].text
        elif head == "func":
            name = None
            if len(f) > 2 and isinstance(f[2], _Tok) and f[2].text.startswith("$"):
                name = f[2].text
            idx = len(imports) + len(raw_funcs)
            if name is not None:
                func_names[name] = idx
            raw_funcs.append((name, f))
        else:
            raise WatError(f"unknown module field {head!r}", line, col)

    functions = []
    for defined_idx, (name, form) in enumerate(raw_funcs):
        functions.append(
            _parse_func(form, name, func_names, global_names, defined_idx)
        )

    module = Module(
        imports=imports,
        globals=globals_,
        memory_pages=memory_pages,
        functions=functions,
        entry=0,
        content_hash=hashlib.sha256(text.encode("utf-8")).digest(),
    )
    for fname, combined in func_names.items():
        if combined >= len(imports):
            module.func_index_by_name[fname.lstrip("$")] = combined - len(imports)

    _validate(module)
    module.entry = _resolve_entry(module, exports, imports)
    return module


def _resolve_entry(module, exports, imports):
    """Defined-function index of "main", or None; instantiation requires it."""
    target = exports.get("main")
    if target is not None:
        if target.startswith("$"):
            name = target.lstrip("$")
            if name not in module.func_index_by_name:
                raise WatError(f"exported main {target!r} not found")
            return module.func_index_by_name[name]
        idx = int(target) - len(imports)
        if not 0 <= idx < len(module.functions):
            raise WatError("exported main index out of range")
        return idx
    return module.func_index_by_name.get("main")


def _parse_import(form, func_names, import_idx):
    line, col = _pos(form)
    if len(form) != 5:
        raise WatError("import expects module, name and a func description", line, col)
    mod_tok, name_tok, desc = form[2], form[3], form[4]
    if mod_tok.text.strip('"') != "env":
        raise WatError('imports must come from module "env"', line, col)
    if _head(desc) != "func":
        raise WatError("only func imports supported", line, col)
    prim_name = name_tok.text.strip('"')
    params = 0
    results = 0
    alias = None
    for item in desc[2:]:
        if isinstance(item, _Tok) and item.text.startswith("$"):
            alias = item.text
        elif _is_list(item) and _head(item) == "param":
            params += max(1, len(item) - 2)
        elif _is_list(item) and _head(item) == "result":
            results += len(item) - 2
        else:
            raise WatError("unsupported import func item", *_pos(item))
    if results > 1:
        raise WatError("multi-result imports unsupported", line, col)
    kind = "in" if results == 1 else "out"
    if alias is not None:
        func_names[alias] = import_idx
    return ImportDef(name=prim_name, kind=kind, arity=params)


def _parse_global(form, globals_, global_names):
    line, col = _pos(form)
    items = form[2:]
    name = None
    if items and isinstance(items[0], _Tok) and items[0].text.startswith("$"):
        name = items[0].text
        items = items[1:]
    if not items:
        raise WatError("global expects a type", line, col)
    mutable = False
    ty = items[0]
    if _is_list(ty) and _head(ty) == "mut":
        mutable = True
        ty = ty[2]
    if not isinstance(ty, _Tok) or ty.text != "i32":
        raise WatError("only i32 globals supported", line, col)
    init = 0
    if len(items) > 1:
        init_form = items[1]
        if not (_is_list(init_form) and _head(init_form) == "i32.const"):
            raise WatError("global initializer must be (i32.const N)", line, col)
        init = _parse_int(init_form[2])
    if name is not None:
        global_names[name] = len(globals_)
    globals_.append(GlobalDef(mutable=mutable, init=_wrap32(init)))


def _wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - 0x100000000 if v >= 0x80000000 else v


def _parse_func(form, name, func_names, global_names, defined_idx):
    ctx = _FuncCtx()
    items = form[2:]
    if name is not None:
        items = items[1:]
    # leading (export "..") inline form
    while items and _is_list(items[0]) and _head(items[0]) == "export":
        items = items[1:]
    while items and _is_list(items[0]) and _head(items[0]) in ("param", "local"):
        decl = items[0]
        kind = _head(decl)
        entries = decl[2:]
        if entries and isinstance(entries[0], _Tok) and entries[0].text.startswith("$"):
            nm = entries[0].text
            if kind == "param":
                ctx.param_names[nm] = ctx.n_params
                ctx.n_params += 1
            else:
                ctx.local_names[nm] = ctx.n_locals
                ctx.n_locals += 1
            if len(entries) != 2 or entries[1].text != "i32":
                raise WatError("named decl expects a single i32", *_pos(decl))
        else:
            for e in entries:
                if not isinstance(e, _Tok) or e.text != "i32":
                    raise WatError("only i32 params/locals supported", *_pos(decl))
                if kind == "param":
                    ctx.n_params += 1
                else:
                    ctx.n_locals += 1
        items = items[1:]

    body = _parse_instr_seq(items, ctx, func_names, global_names, [])
    return Function(
        name=None if name is None else name.lstrip("$"),
        n_params=ctx.n_params,
        n_locals=ctx.n_locals,
        body=body,
    )


def _local_index(tok, ctx):
    if tok.text.startswith("$"):
        if tok.text in ctx.param_names:
            return ctx.param_names[tok.text]
        if tok.text in ctx.local_names:
            return ctx.n_params + ctx.local_names[tok.text]
        raise WatError(f"unknown local {tok.text}", tok.line, tok.col)
    return _parse_int(tok)


def _label_depth(tok, labels):
    if tok.text.startswith("$"):
        for depth, lbl in enumerate(reversed(labels)):
            if lbl == tok.text:
                return depth
        raise WatError(f"unknown label {tok.text}", tok.line, tok.col)
    return _parse_int(tok)


def _parse_memarg(toks, i):
    offset = 0
    while i < len(toks) and isinstance(toks[i], _Tok) and "=" in toks[i].text:
        key, _, val = toks[i].text.partition("=")
        if key == "offset":
            offset = int(val, 0)
        elif key == "align":
            align = int(val, 0)
            if align > 4:
                raise WatError("align must be <= 4 bytes", toks[i].line, toks[i].col)
        else:
            raise WatError(f"unknown memarg {key!r}", toks[i].line, toks[i].col)
        i += 1
    return offset, i


def _parse_instr_seq(items, ctx, func_names, global_names, labels):
    """Parse a mixed folded/plain instruction sequence into Instr trees."""
    out = []
    i = 0
    while i < len(items):
        item = items[i]
        if _is_list(item):
            out.extend(_parse_folded(item, ctx, func_names, global_names, labels))
            i += 1
            continue
        op = item.text
        line, col = item.line, item.col
        if op in ("block", "loop"):
            label = None
            j = i + 1
            if j < len(items) and isinstance(items[j], _Tok) and items[j].text.startswith("$"):
                label = items[j].text
                j += 1
            inner, j = _slice_until_end(items, j, item)
            body = _parse_instr_seq(inner, ctx, func_names, global_names, labels + [label])
            out.append(Instr(op, body=body, line=line, col=col))
            i = j
        elif op == "if":
            label = None
            j = i + 1
            if j < len(items) and isinstance(items[j], _Tok) and items[j].text.startswith("$"):
                label = items[j].text
                j += 1
            inner, j = _slice_until_end(items, j, item)
            then_part, else_part = _split_plain_else(inner)
            instr = Instr("if", line=line, col=col)
            instr.body = _parse_instr_seq(then_part, ctx, func_names, global_names, labels + [label])
            instr.else_body = _parse_instr_seq(else_part, ctx, func_names, global_names, labels + [label])
            out.append(instr)
            i = j
        else:
            instr, i = _parse_plain(items, i, ctx, func_names, global_names, labels)
            out.append(instr)
    return out


def _slice_until_end(items, j, opener):
    depth = 0
    inner = []
    while j < len(items):
        it = items[j]
        if isinstance(it, _Tok) and it.text in ("block", "loop", "if"):
            depth += 1
        elif isinstance(it, _Tok) and it.text == "end":
            if depth == 0:
                return inner, j + 1
            depth -= 1
        inner.append(it)
        j += 1
    raise WatError(f"missing end for {opener.text}", opener.line, opener.col)


def _split_plain_else(inner):
    depth = 0
    for k, it in enumerate(inner):
        if isinstance(it, _Tok) and it.text in ("block", "loop", "if"):
            depth += 1
        elif isinstance(it, _Tok) and it.text == "end":
            depth -= 1
        elif isinstance(it, _Tok) and it.text == "else" and depth == 0:
            return inner[:k], inner[k + 1:]
    return inner, []


def _parse_plain(items, i, ctx, func_names, global_names, labels):
    tok = items[i]
    op = tok.text
    line, col = tok.line, tok.col

    def imm_tok():
        if i + 1 >= len(items) or not isinstance(items[i + 1], _Tok):
            raise WatError(f"{op} expects an immediate", line, col)
        return items[i + 1]

    if op == "i32.const":
        v = _parse_int(imm_tok())
        if not -0x80000000 <= v <= 0xFFFFFFFF:
            raise WatError("i32.const out of range", line, col)
        return Instr(op, imm=_wrap32(v), line=line, col=col), i + 2
    if op in ("local.get", "local.set", "local.tee"):
        return Instr(op, imm=_local_index(imm_tok(), ctx), line=line, col=col), i + 2
    if op in ("global.get", "global.set"):
        t = imm_tok()
        if t.text.startswith("$"):
            if t.text not in global_names:
                raise WatError(f"unknown global {t.text}", t.line, t.col)
            idx = global_names[t.text]
        else:
            idx = _parse_int(t)
        return Instr(op, imm=idx, line=line, col=col), i + 2
    if op in ("br", "br_if"):
        return Instr(op, imm=_label_depth(imm_tok(), labels), line=line, col=col), i + 2
    if op == "call":
        t = imm_tok()
        if t.text.startswith("$"):
            if t.text not in func_names:
                raise WatError(f"unresolved call target {t.text}", t.line, t.col)
            idx = func_names[t.text]
        else:
            idx = _parse_int(t)
        return Instr(op, imm=idx, line=line, col=col), i + 2
    if op in ("i32.load", "i32.store"):
        offset, j = _parse_memarg(items, i + 1)
        return Instr(op, imm=offset, line=line, col=col), j
    if op in BINOPS or op in RELOPS or op in ("i32.eqz", "drop", "nop", "return"):
        return Instr(op, line=line, col=col), i + 1
    raise WatError(f"unknown instruction {op!r}", line, col)


def _parse_folded(form, ctx, func_names, global_names, labels):
    """Folded instruction: children are unfolded before the operator."""
    head_tok = form[1]
    if not isinstance(head_tok, _Tok):
        raise WatError("expected instruction", *_pos(form))
    op = head_tok.text
    line, col = head_tok.line, head_tok.col
    rest = form[2:]

    if op in ("block", "loop"):
        label = None
        if rest and isinstance(rest[0], _Tok) and rest[0].text.startswith("$"):
            label = rest[0].text
            rest = rest[1:]
        body = _parse_instr_seq(rest, ctx, func_names, global_names, labels + [label])
        return [Instr(op, body=body, line=line, col=col)]

    if op == "if":
        label = None
        if rest and isinstance(rest[0], _Tok) and rest[0].text.startswith("$"):
            label = rest[0].text
            rest = rest[1:]
        cond_forms = []
        then_form = else_form = None
        for item in rest:
            if _is_list(item) and _head(item) == "then":
                then_form = item
            elif _is_list(item) and _head(item) == "else":
                else_form = item
            else:
                cond_forms.append(item)
        if then_form is None:
            raise WatError("folded if requires (then ...)", line, col)
        out = _parse_instr_seq(cond_forms, ctx, func_names, global_names, labels)
        instr = Instr("if", line=line, col=col)
        instr.body = _parse_instr_seq(then_form[2:], ctx, func_names, global_names, labels + [label])
        if else_form is not None:
            instr.else_body = _parse_instr_seq(else_form[2:], ctx, func_names, global_names, labels + [label])
        out.append(instr)
        return out

    # plain op with folded operands: operands first, then the op itself
    flat_toks = [head_tok]
    operand_forms = []
    j = 0
    # immediates directly follow the operator token
    while j < len(rest) and isinstance(rest[j], _Tok):
        flat_toks.append(rest[j])
        j += 1
    operand_forms = rest[j:]
    out = []
    for opf in operand_forms:
        if not _is_list(opf):
            raise WatError("unexpected token in folded instruction", *_pos(opf))
        out.extend(_parse_folded(opf, ctx, func_names, global_names, labels))
    instr, consumed = _parse_plain(flat_toks, 0, ctx, func_names, global_names, labels)
    if consumed != len(flat_toks):
        raise WatError(f"trailing tokens after {op}", line, col)
    out.append(instr)
    return out


# --- validation ------------------------------------------------------------

def _validate(module: Module):
    n_imports = len(module.imports)
    for fidx, func in enumerate(module.functions):
        counter = _number_instrs(func.body, 0)
        func.instr_count = counter
        func.instr_index = {}
        _index_instrs(func.body, func.instr_index)
        _check_stack(module, func, fidx, n_imports)


def _number_instrs(body, counter):
    for instr in body:
        instr.iid = counter
        counter += 1
        if instr.op in ("block", "loop", "if"):
            counter = _number_instrs(instr.body, counter)
            counter = _number_instrs(instr.else_body, counter)
    return counter


def _index_instrs(body, index):
    for instr in body:
        index[instr.iid] = instr
        if instr.op in ("block", "loop", "if"):
            _index_instrs(instr.body, index)
            _index_instrs(instr.else_body, index)


def _check_stack(module, func, fidx, n_imports):
    n_slots = func.n_params + func.n_locals

    def err(instr, msg):
        raise WatError(f"in function {fidx}: {msg}", instr.line, instr.col)

    def walk(body, height, depth):
        """Returns height at fall-through, or None if unreachable."""
        reachable = True
        for instr in body:
            if not reachable:
                continue  # code after br/return is statically dead in this subset
            op = instr.op
            if op == "i32.const":
                height += 1
            elif op in BINOPS or op in RELOPS:
                if height < 2:
                    err(instr, f"stack underflow at {op}")
                height -= 1
            elif op == "i32.eqz":
                if height < 1:
                    err(instr, f"stack underflow at {op}")
            elif op in ("local.get", "local.set", "local.tee"):
                if not 0 <= instr.imm < n_slots:
                    err(instr, f"local index {instr.imm} out of range")
                if op == "local.get":
                    height += 1
                elif op == "local.set":
                    if height < 1:
                        err(instr, "stack underflow at local.set")
                    height -= 1
                else:
                    if height < 1:
                        err(instr, "stack underflow at local.tee")
            elif op in ("global.get", "global.set"):
                if not 0 <= instr.imm < len(module.globals):
                    err(instr, f"global index {instr.imm} out of range")
                if op == "global.get":
                    height += 1
                else:
                    if not module.globals[instr.imm].mutable:
                        err(instr, "global.set on immutable global")
                    if height < 1:
                        err(instr, "stack underflow at global.set")
                    height -= 1
            elif op == "drop":
                if height < 1:
                    err(instr, "stack underflow at drop")
                height -= 1
            elif op == "nop":
                pass
            elif op in ("i32.load", "i32.store"):
                if module.memory_pages == 0:
                    err(instr, f"{op} without memory")
                need = 1 if op == "i32.load" else 2
                if height < need:
                    err(instr, f"stack underflow at {op}")
                if op == "i32.store":
                    height -= 2
            elif op == "call":
                j = instr.imm
                if j < n_imports:
                    arity = module.imports[j].arity
                    if height < arity:
                        err(instr, "stack underflow at primitive call")
                    height -= arity
                    if module.imports[j].kind == "in":
                        height += 1
                else:
                    didx = j - n_imports
                    if not 0 <= didx < len(module.functions):
                        err(instr, f"unresolved call target {j}")
                    callee = module.functions[didx]
                    if height < callee.n_params:
                        err(instr, "stack underflow at call")
                    height -= callee.n_params
            elif op in ("block", "loop"):
                inner = walk(instr.body, height, depth + 1)
                if inner is not None and inner != height:
                    err(instr, f"{op} body leaves {inner - height} extra values")
            elif op == "if":
                if height < 1:
                    err(instr, "stack underflow at if condition")
                height -= 1
                for arm in (instr.body, instr.else_body):
                    inner = walk(arm, height, depth + 1)
                    if inner is not None and inner != height:
                        err(instr, "if arm leaves extra values")
            elif op in ("br", "br_if"):
                if instr.imm >= depth:
                    err(instr, f"branch depth {instr.imm} exceeds nesting")
                if op == "br_if":
                    if height < 1:
                        err(instr, "stack underflow at br_if")
                    height -= 1
                else:
                    reachable = False
            elif op == "return":
                reachable = False
            else:
                err(instr, f"unknown instruction {op!r}")
        return height if reachable else None

    final = walk(func.body, 0, 1)
    if final is not None and final != 0:
        raise WatError(f"function {fidx} body leaves {final} values on the stack")
