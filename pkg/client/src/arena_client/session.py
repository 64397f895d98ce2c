"""One session: connect, handshake, answer observations until done.

A session handles one match at a time (the protocol binds a connection to
at most one running match) and never sends an illegal action: extraction
either produces a legal one or the first legal action is used and the raw
model text is logged.
"""

from __future__ import annotations

import json
import socket
import time
from dataclasses import dataclass, field

from arena_client.prompts import extract_action, first_legal, render_prompt, template_for

PROTOCOL_VERSION = 1
ALL_GAMES = ("prisoners_dilemma", "trust_game", "nim", "dictator", "who_is_spy")


class WireError(RuntimeError):
    pass


class LineSocket:
    """Newline-delimited JSON over a stream socket, with outbound seq."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._buffer = bytearray()
        self._seq = 0

    def send(self, kind: str, payload: dict | None = None, match_id: str | None = None) -> None:
        self._seq += 1
        body = {"type": kind, "seq": self._seq, "payload": payload or {}}
        if match_id is not None:
            body["match_id"] = match_id
        data = json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"
        self.sock.sendall(data)

    def recv(self, timeout: float | None = None) -> dict | None:
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            if b"\n" in self._buffer:
                line, _, rest = bytes(self._buffer).partition(b"\n")
                self._buffer = bytearray(rest)
                text = line.decode("utf-8").strip()
                if not text:
                    continue
                return json.loads(text)
            if deadline is not None and time.monotonic() >= deadline:
                return None
            self.sock.settimeout(None if deadline is None else deadline - time.monotonic())
            try:
                chunk = self.sock.recv(4096)
            except (TimeoutError, socket.timeout):
                return None
            if not chunk:
                raise WireError("server closed the connection")
            self._buffer.extend(chunk)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


@dataclass
class SessionSummary:
    agent_id: str = ""
    observations: int = 0
    fallbacks: int = 0
    results: list[dict] = field(default_factory=list)
    log_path: str | None = None


def connect_and_play(
    server: str,
    backend,
    name: str,
    games: tuple[str, ...] = ALL_GAMES,
    matches: int = 1,
    log_path: str | None = None,
) -> SessionSummary:
    """Play until `matches` results arrive (0 means until the server closes)."""
    host, _, port_text = server.partition(":")
    wire = LineSocket(socket.create_connection((host or "127.0.0.1", int(port_text or 4762))))
    summary = SessionSummary(log_path=log_path)
    log_file = open(log_path, "a", encoding="utf-8") if log_path else None

    def log(entry: dict) -> None:
        if log_file:
            log_file.write(json.dumps(entry, sort_keys=True) + "\n")
            log_file.flush()

    try:
        wire.send("hello", {"name": name, "games": list(games), "version": PROTOCOL_VERSION})
        greeting = wire.recv(timeout=15)
        if greeting is None or greeting.get("type") != "welcome":
            raise WireError(f"handshake refused: {greeting}")
        summary.agent_id = greeting["payload"]["agent_id"]

        while True:
            message = wire.recv(timeout=None)
            kind = message.get("type")
            if kind == "ping":
                wire.send("pong")
            elif kind == "observation_request":
                _answer(wire, message, backend, summary, log)
            elif kind == "round_notice":
                log({"event": "round", "match_id": message.get("match_id"), **message["payload"]})
            elif kind == "match_result":
                summary.results.append(message["payload"])
                log({"event": "result", "match_id": message.get("match_id"), **message["payload"]})
                if matches and len(summary.results) >= matches:
                    return summary
            elif kind == "error":
                raise WireError(f"server error: {message['payload']}")
    except WireError:
        if summary.results:
            return summary  # the server hung up after our last match
        raise
    finally:
        if log_file:
            log_file.close()
        wire.close()


def _answer(wire: LineSocket, message: dict, backend, summary: SessionSummary, log) -> None:
    view = message["payload"]
    summary.observations += 1
    deadline_s = max(0.1, (view.get("deadline_ms") or 30_000) / 1000.0 - 0.25)
    prompt = render_prompt(template_for(view["game"]), view)
    try:
        reply = backend.complete(prompt, view, deadline_s)
    except Exception as exc:
        reply = f"(backend failed: {exc})"
    action = extract_action(view, reply)
    fallback = action is None
    if fallback:
        action = first_legal(view)
        summary.fallbacks += 1
    log(
        {
            "event": "decision",
            "match_id": message.get("match_id"),
            "round_no": view.get("round_no"),
            "prompt": prompt,
            "reply": reply,
            "action": action,
            "fallback": fallback,
        }
    )
    wire.send(
        "action_response",
        {"request_seq": message["seq"], "action": action},
        match_id=message.get("match_id"),
    )
