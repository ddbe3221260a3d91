"""Remote transports: the newline-delimited JSON wire over TCP, and an
HTTP server with a WebSocket endpoint feeding the browser frontend.

The WebSocket implementation covers the subset RFC 6455 needs for a
localhost dev tool: text frames, ping/pong, close; no extensions.
"""
from __future__ import annotations

import base64
import hashlib
import json
import select
import socket
import struct
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from queue import Empty, Queue

from . import protocol as p
from . import vm
from .concolic import Bounds
from .session import Session, parse_instr_id
from .tree import MockLabel, StepLabel

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def serve(session: Session, listen: str) -> int:
    scheme, _, port = listen.partition(":")
    if scheme == "tcp":
        return serve_wire(session, int(port or p.DEFAULT_TCP_PORT))
    if scheme == "http":
        return serve_http(session, int(port or 8080))
    raise SystemExit(f"unknown listen scheme {listen!r}")


# --- raw wire protocol --------------------------------------------------------

def serve_wire(session: Session, port: int, host: str = "127.0.0.1",
               ready: threading.Event | None = None,
               max_sessions: int = 0) -> int:
    """Expose the debug server over TCP; one client at a time.

    Message priority matches the in-process scheduler: pending output is
    flushed before input is consumed, and the program only advances when
    both directions are idle.
    """
    server = session.server
    with socket.create_server((host, port)) as sock:
        sock.settimeout(0.5)
        served = 0
        if ready is not None:
            ready.set()
        while max_sessions == 0 or served < max_sessions:
            try:
                conn, _addr = sock.accept()
            except TimeoutError:
                continue
            with conn:
                _wire_session(server, conn)
            served += 1
    return 0


def _wire_session(server, conn: socket.socket):
    conn.setblocking(True)
    buffer = b""
    while True:
        while server.outbox:
            conn.sendall(p.encode(server.outbox.popleft()))
        if server.inbox:
            msg = server.inbox.popleft()
            if p.compatible(server.es, msg):
                server.handle(msg)
            else:
                conn.sendall(p.encode(p.SessionError(
                    f"incompatible message in state {server.es}")))
            continue
        running = server.es == "running"
        try:
            readable, _, _ = select.select([conn], [], [], 0.0 if running else 0.2)
        except OSError:
            return
        if readable:
            try:
                chunk = conn.recv(65536)
            except OSError:
                return
            if not chunk:
                return
            buffer += chunk
            while b"\n" in buffer:
                line, _, buffer = buffer.partition(b"\n")
                if not line.strip():
                    continue
                try:
                    server.inbox.append(p.decode(line + b"\n"))
                except p.DecodeError as e:
                    conn.sendall(p.encode(p.SessionError(str(e))))
            continue
        if running:
            server.run_step()


# --- websocket plumbing --------------------------------------------------------

class WsConnection:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.lock = threading.Lock()
        self.open = True

    def send_text(self, text: str):
        payload = text.encode("utf-8")
        header = bytearray([0x81])
        n = len(payload)
        if n < 126:
            header.append(n)
        elif n < 65536:
            header.append(126)
            header += struct.pack(">H", n)
        else:
            header.append(127)
            header += struct.pack(">Q", n)
        with self.lock:
            if not self.open:
                return
            try:
                self.sock.sendall(bytes(header) + payload)
            except OSError:
                self.open = False

    def recv_text(self) -> str | None:
        """Next text payload, or None once the connection closes."""
        while True:
            head = self._read_exact(2)
            if head is None:
                return None
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            n = head[1] & 0x7F
            if n == 126:
                ext = self._read_exact(2)
                if ext is None:
                    return None
                n = struct.unpack(">H", ext)[0]
            elif n == 127:
                ext = self._read_exact(8)
                if ext is None:
                    return None
                n = struct.unpack(">Q", ext)[0]
            mask = self._read_exact(4) if masked else b"\x00" * 4
            if mask is None:
                return None
            payload = self._read_exact(n) if n else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                self.open = False
                return None
            if opcode == 0x9:  # ping -> pong
                with self.lock:
                    try:
                        self.sock.sendall(bytes([0x8A, len(payload)]) + payload)
                    except OSError:
                        self.open = False
                        return None
                continue
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8")

    def _read_exact(self, n: int) -> bytes | None:
        data = b""
        while len(data) < n:
            try:
                chunk = self.sock.recv(n - len(data))
            except OSError:
                return None
            if not chunk:
                return None
            data += chunk
        return data


def ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


# --- frontend session -----------------------------------------------------------

class FrontendSession:
    """Runs the in-process session on a worker thread and mirrors the tree
    to connected browsers as treeDelta events."""

    def __init__(self, session: Session):
        self.session = session
        self.events: Queue = Queue()
        self.connections: list[WsConnection] = []
        self.conn_lock = threading.Lock()
        self.pushed_rev = -1
        self.pushed_diag = 0
        self.thread = threading.Thread(target=self._loop, daemon=True)
        self.running = True

    def start(self):
        self.thread.start()

    def attach(self, conn: WsConnection):
        with self.conn_lock:
            self.connections.append(conn)
        self._push_full(conn)

    def detach(self, conn: WsConnection):
        with self.conn_lock:
            if conn in self.connections:
                self.connections.remove(conn)

    def submit(self, event: dict):
        self.events.put(event)

    # -- worker side ------------------------------------------------------------

    def _loop(self):
        while self.running:
            try:
                event = self.events.get(timeout=0.1)
            except Empty:
                continue
            try:
                self._apply(event)
                self.session.settle()
            except Exception as e:  # surface, never kill the loop
                self.session.client.diagnostics.append(str(e))
            self._push_deltas()

    def _apply(self, event: dict):
        session = self.session
        client = session.client
        kind = event.get("type")
        if kind == "step":
            client.send(p.Step())
        elif kind == "pause":
            client.send(p.Pause())
        elif kind == "play":
            client.send(p.Play())
        elif kind == "mock":
            client.send(p.Mock(int(event["value"])))
        elif kind == "reset":
            client.restart()
        elif kind == "slide":
            client.slide(int(event["nodeId"]))
        elif kind == "suggest":
            b = event.get("bounds") or {}
            client.suggest(Bounds(
                max_iterations=int(b.get("maxIterations", 64)),
                max_syms=int(b.get("maxSyms", 16)),
                max_instr=int(b.get("maxInstr", 10_000))))
        elif kind == "breakAdd":
            client.send(p.BreakAdd(parse_instr_id(session.module, event["id"])))
        elif kind == "breakRem":
            client.send(p.BreakRem(parse_instr_id(session.module, event["id"])))
        elif kind == "upload":
            self._upload(event["watText"])
        elif kind == "resync":
            self.pushed_rev = -1  # next push carries the full tree
        else:
            client.diagnostics.append(f"unknown frontend event {kind!r}")

    def _upload(self, text: str):
        from .wat import parse_module
        module = parse_module(text)
        old = self.session
        env = old.server.env.clone_initial()
        fresh = Session.create(module, env, old.client.prims, old.client.solver)
        self.session = fresh
        self.pushed_rev = -1
        self.pushed_diag = 0

    # -- push side ----------------------------------------------------------------

    def _node_doc(self, node) -> dict:
        edges = []
        for e in node.edges:
            if isinstance(e.label, StepLabel):
                entry = {"label": {"step": e.label.count}, "to": e.to}
            else:
                entry = {"label": {"mock": e.label.value}, "to": e.to}
                if node.meta is not None:
                    entry["prim"] = self.session.client.prim_names()[node.meta[0]]
                    entry["args"] = list(node.meta[1])
            edges.append(entry)
        return {"id": node.id, "edges": edges}

    def _delta_doc(self, full: bool) -> dict:
        client = self.session.client
        tree = client.tree
        nodes = [self._node_doc(n) for n in tree.nodes.values()
                 if full or n.rev > self.pushed_rev]
        return {
            "type": "treeDelta",
            "root": tree.root,
            "current": client.current,
            "nodes": nodes,
            "rev": tree.rev,
        }

    def _session_docs(self) -> list[dict]:
        server = self.session.server
        docs = [{"type": "sessionState",
                 "state": "Running" if server.es == "running" else "Paused"}]
        if server.es == "paused" and server.K.status == "running":
            iid = vm.instr_id(server.K)
            docs.append({"type": "sourceHighlight",
                         "func": iid.func, "instr": iid.instr})
        cls = vm.classify(server.K)
        doc = {"type": "classify", "kind": cls.kind.value}
        if cls.prim is not None:
            doc["prim"] = self.session.client.prim_names()[cls.prim]
            doc["args"] = list(cls.args)
            lo, hi = self.session.client.prims.codomain(doc["prim"], cls.args)
            doc["codomain"] = [lo, hi]
        docs.append(doc)
        return docs

    def _push_full(self, conn: WsConnection):
        conn.send_text(json.dumps(self._delta_doc(full=True)))
        for doc in self._session_docs():
            conn.send_text(json.dumps(doc))

    def _push_deltas(self):
        client = self.session.client
        docs = [self._delta_doc(full=False)]
        self.pushed_rev = client.tree.rev
        docs.extend(self._session_docs())
        for msg in client.diagnostics[self.pushed_diag:]:
            docs.append({"type": "diagnostics", "message": msg})
        self.pushed_diag = len(client.diagnostics)
        payloads = [json.dumps(d) for d in docs]
        with self.conn_lock:
            conns = list(self.connections)
        for conn in conns:
            for payload in payloads:
                conn.send_text(payload)


def make_http_handler(frontend: FrontendSession, static_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def do_GET(self):
            if self.path == "/ws":
                self._upgrade()
                return
            self._static()

        def _static(self):
            base = static_dir
            if base is None:
                self.send_response(200)
                self.send_header("Content-Type", "text/html")
                self.end_headers()
                self.wfile.write(b"<html><body>frontend assets not built; "
                                 b"connect to /ws directly</body></html>")
                return
            rel = self.path.lstrip("/") or "index.html"
            target = (base / rel).resolve()
            if not str(target).startswith(str(base.resolve())) or not target.is_file():
                self.send_response(404)
                self.end_headers()
                return
            ctype = {
                ".html": "text/html", ".js": "text/javascript",
                ".css": "text/css", ".map": "application/json",
            }.get(target.suffix, "application/octet-stream")
            data = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _upgrade(self):
            key = self.headers.get("Sec-WebSocket-Key")
            if self.headers.get("Upgrade", "").lower() != "websocket" or not key:
                self.send_response(400)
                self.end_headers()
                return
            self.send_response(101, "Switching Protocols")
            self.send_header("Upgrade", "websocket")
            self.send_header("Connection", "Upgrade")
            self.send_header("Sec-WebSocket-Accept", ws_accept_key(key))
            self.end_headers()
            conn = WsConnection(self.connection)
            frontend.attach(conn)
            try:
                while True:
                    text = conn.recv_text()
                    if text is None:
                        break
                    try:
                        frontend.submit(json.loads(text))
                    except json.JSONDecodeError:
                        conn.send_text(json.dumps(
                            {"type": "diagnostics", "message": "bad event json"}))
            finally:
                frontend.detach(conn)
                self.close_connection = True

    return Handler


def frontend_static_dir() -> Path | None:
    candidate = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def start_http(session: Session, port: int, host: str = "127.0.0.1"):
    """Bind the frontend HTTP server without blocking; returns it with the
    frontend session so callers control the serving thread."""
    frontend = FrontendSession(session)
    frontend.start()
    handler = make_http_handler(frontend, frontend_static_dir())
    httpd = ThreadingHTTPServer((host, port), handler)
    return httpd, frontend


def serve_http(session: Session, port: int, host: str = "127.0.0.1") -> int:
    httpd, _frontend = start_http(session, port, host)
    print(f"frontend on http://{host}:{port}/ (websocket at /ws)")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0
