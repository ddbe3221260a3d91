"""Bit-exact program-state snapshots.

Layout: magic "MVS1", 32-byte SHA-256 of the module source, then
little-endian u32 sections: globals, frames (func, cursor path length +
path, control stack, locals), value stack, memory length + raw bytes.
A trailing status word (0 running / 1 finished / 2 trapped) plus a
length-prefixed trap reason closes the blob; restore needs it to rebuild
terminated states faithfully.
"""
from __future__ import annotations

import struct

from .vm import Frame, ProgramState
from .wat import Module

MAGIC = b"MVS1"


class SnapshotError(Exception):
    pass


class ModuleHashMismatchError(SnapshotError):
    pass


def _u32(v: int) -> bytes:
    return struct.pack("<I", v & 0xFFFFFFFF)


def snapshot(state: ProgramState) -> bytes:
    out = [MAGIC, state.module.content_hash]
    out.append(_u32(len(state.globals)))
    out.extend(_u32(v) for v in state.globals)
    out.append(_u32(len(state.frames)))
    for fr in state.frames:
        out.append(_u32(fr.func))
        path = []
        for idx, arm in fr.path:
            path.extend((idx, arm))
        path.append(fr.ip)
        out.append(_u32(len(path)))
        out.extend(_u32(p) for p in path)
        control = [fr.base] + fr.blocks
        out.append(_u32(len(control)))
        out.extend(_u32(h) for h in control)
        out.append(_u32(len(fr.locals)))
        out.extend(_u32(v) for v in fr.locals)
    out.append(_u32(len(state.stack)))
    out.extend(_u32(v) for v in state.stack)
    out.append(_u32(len(state.memory)))
    out.append(bytes(state.memory))
    status_code = {"running": 0, "finished": 1, "trapped": 2}[state.status]
    out.append(_u32(status_code))
    reason = (state.trap_reason or "").encode("utf-8")
    out.append(_u32(len(reason)))
    out.append(reason)
    return b"".join(out)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise SnapshotError("truncated snapshot blob")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def i32(self) -> int:
        v = self.u32()
        return v - 0x100000000 if v >= 0x80000000 else v


def restore(blob: bytes, module: Module) -> ProgramState:
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise SnapshotError("bad magic")
    if r.take(32) != module.content_hash:
        raise ModuleHashMismatchError("snapshot was taken from a different module")
    state = ProgramState(module=module)
    state.globals = [r.i32() for _ in range(r.u32())]
    n_frames = r.u32()
    for _ in range(n_frames):
        func = r.u32()
        raw_path = [r.u32() for _ in range(r.u32())]
        if len(raw_path) % 2 != 1:
            raise SnapshotError("malformed cursor path")
        path = [(raw_path[i], raw_path[i + 1]) for i in range(0, len(raw_path) - 1, 2)]
        ip = raw_path[-1]
        control = [r.u32() for _ in range(r.u32())]
        if len(control) != len(path) + 1:
            raise SnapshotError("control stack does not match cursor path")
        locals_ = [r.i32() for _ in range(r.u32())]
        state.frames.append(Frame(func=func, path=path, ip=ip,
                                  blocks=control[1:], locals=locals_,
                                  base=control[0]))
    state.stack = [r.i32() for _ in range(r.u32())]
    mem_len = r.u32()
    state.memory = bytearray(r.take(mem_len))
    status_code = r.u32()
    reason = r.take(r.u32()).decode("utf-8")
    if r.pos != len(blob):
        raise SnapshotError("trailing bytes in snapshot blob")
    state.status = {0: "running", 1: "finished", 2: "trapped"}.get(status_code)
    if state.status is None:
        raise SnapshotError(f"unknown status code {status_code}")
    state.trap_reason = reason or None
    return state
