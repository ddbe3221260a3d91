"""Client/server message vocabulary, newline-delimited JSON wire codec,
and the global scheduler enforcing server-to-client message priority.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

from .wat import InstrId

DEFAULT_TCP_PORT = 9333


class ProtocolError(Exception):
    pass


class DecodeError(ProtocolError):
    pass


# --- server-bound (msg_s) ---------------------------------------------------

@dataclass(frozen=True)
class Step:
    pass


@dataclass(frozen=True)
class Pause:
    pass


@dataclass(frozen=True)
class Play:
    pass


@dataclass(frozen=True)
class BreakAdd:
    id: InstrId


@dataclass(frozen=True)
class BreakRem:
    id: InstrId


@dataclass(frozen=True)
class Mock:
    value: int


@dataclass(frozen=True)
class Inspect:
    pass


@dataclass(frozen=True)
class Reset:
    pass


SERVER_BOUND = (Step, Pause, Play, BreakAdd, BreakRem, Mock, Inspect, Reset)


# --- client-bound (msg_c) ---------------------------------------------------

@dataclass(frozen=True)
class Executed:
    count: int


@dataclass(frozen=True)
class Prim:
    count: int
    prim: int
    args: tuple[int, ...]
    value: int


@dataclass(frozen=True)
class Snapshot:
    blob: bytes


@dataclass(frozen=True)
class SessionError:
    """Out-of-band diagnostic; not part of the formal message alphabet."""
    message: str


CLIENT_BOUND = (Executed, Prim, Snapshot, SessionError)


def encode(msg) -> bytes:
    """One JSON object per line; field order is part of the wire contract."""
    if isinstance(msg, Executed):
        return b'{"type":"executed","count":%d}\n' % msg.count
    if isinstance(msg, Prim):
        args = ",".join(str(a) for a in msg.args)
        return ('{"type":"prim","count":%d,"prim":%d,"args":[%s],"value":%d}\n'
                % (msg.count, msg.prim, args, msg.value)).encode()
    if isinstance(msg, Snapshot):
        blob = base64.b64encode(msg.blob).decode("ascii")
        return ('{"type":"snapshot","blob":"%s"}\n' % blob).encode()
    if isinstance(msg, SessionError):
        return ('{"type":"error","message":%s}\n' % json.dumps(msg.message)).encode()
    if isinstance(msg, Step):
        return b'{"type":"step"}\n'
    if isinstance(msg, Pause):
        return b'{"type":"pause"}\n'
    if isinstance(msg, Play):
        return b'{"type":"play"}\n'
    if isinstance(msg, Inspect):
        return b'{"type":"inspect"}\n'
    if isinstance(msg, Reset):
        return b'{"type":"reset"}\n'
    if isinstance(msg, Mock):
        return b'{"type":"mock","value":%d}\n' % msg.value
    if isinstance(msg, BreakAdd):
        return b'{"type":"breakAdd","func":%d,"instr":%d}\n' % (msg.id.func, msg.id.instr)
    if isinstance(msg, BreakRem):
        return b'{"type":"breakRem","func":%d,"instr":%d}\n' % (msg.id.func, msg.id.instr)
    raise ProtocolError(f"cannot encode {msg!r}")


def _field(obj, key, types):
    if key not in obj:
        raise DecodeError(f"missing field {key!r}")
    v = obj[key]
    if not isinstance(v, types) or isinstance(v, bool):
        raise DecodeError(f"field {key!r} has wrong type")
    return v


def decode(data: bytes | str):
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    line, sep, rest = data.partition("\n")
    if rest.strip():
        raise DecodeError("trailing garbage after message")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise DecodeError(f"bad JSON: {e}") from e
    if not isinstance(obj, dict):
        raise DecodeError("message must be a JSON object")
    t = obj.get("type")
    if t == "step":
        return Step()
    if t == "pause":
        return Pause()
    if t == "play":
        return Play()
    if t == "inspect":
        return Inspect()
    if t == "reset":
        return Reset()
    if t == "mock":
        return Mock(_field(obj, "value", int))
    if t == "breakAdd":
        return BreakAdd(InstrId(_field(obj, "func", int), _field(obj, "instr", int)))
    if t == "breakRem":
        return BreakRem(InstrId(_field(obj, "func", int), _field(obj, "instr", int)))
    if t == "executed":
        count = _field(obj, "count", int)
        if count < 0:
            raise DecodeError("executed.count must be >= 0")
        return Executed(count)
    if t == "prim":
        count = _field(obj, "count", int)
        if count < 1:
            raise DecodeError("prim.count must be >= 1")
        args = _field(obj, "args", list)
        if not all(isinstance(a, int) and not isinstance(a, bool) for a in args):
            raise DecodeError("prim.args must be integers")
        return Prim(count, _field(obj, "prim", int), tuple(args),
                    _field(obj, "value", int))
    if t == "snapshot":
        try:
            blob = base64.b64decode(_field(obj, "blob", str), validate=True)
        except Exception as e:
            raise DecodeError(f"bad snapshot blob: {e}") from e
        return Snapshot(blob)
    if t == "error":
        return SessionError(_field(obj, "message", str))
    raise DecodeError(f"unknown message type {t!r}")


def compatible(es: str, msg) -> bool:
    """Which client messages the server accepts in each execution state.

    While running only pause and breakpoint updates get through; while
    paused everything except pause does.
    """
    if es == "running":
        return isinstance(msg, (Pause, BreakAdd, BreakRem))
    return not isinstance(msg, Pause)


@dataclass
class TickResult:
    fired: str | None  # "server-to-client" | "client-to-server" | "server-step" | None
    error: str | None = None


class SessionScheduler:
    """Single loop applying exactly one global rule per tick, in priority
    order: server-to-client, client-to-server, server-step."""

    def __init__(self, client, server):
        self.client = client
        self.server = server
        self.errors: list[str] = []

    def tick(self) -> TickResult:
        server = self.server
        client = self.client
        if server.outbox:
            msg = server.outbox.popleft()
            client.receive(msg)
            return TickResult("server-to-client")
        if client.outbox:
            head = client.outbox[0]
            if compatible(server.es, head):
                client.outbox.popleft()
                server.handle(head)
                return TickResult("client-to-server")
            # The formal semantics is stuck here; surface the frontend bug
            # and drop the message so the session stays usable.
            client.outbox.popleft()
            err = f"incompatible message {head} for server state {server.es}"
            self.errors.append(err)
            return TickResult(None, error=err)
        if server.es == "running":
            server.run_step()
            return TickResult("server-step")
        return TickResult(None)

    def run_until_idle(self, max_ticks: int = 1_000_000) -> int:
        """Tick until no rule fires; returns the number of rules applied."""
        fired = 0
        for _ in range(max_ticks):
            result = self.tick()
            if result.fired is None:
                return fired
            fired += 1
        raise ProtocolError(f"session did not quiesce within {max_ticks} ticks")
