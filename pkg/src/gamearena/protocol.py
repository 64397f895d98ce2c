"""Line-oriented wire protocol for remote agents, and the proxy that makes a
connection look like any other agent to the arena.

One JSON object per newline-terminated UTF-8 line. Envelope fields are
`type`, `seq` (strictly increasing per direction), optional `match_id`, and
`payload`. Unknown envelope fields are ignored for forward compatibility;
blank lines are keep-alive no-ops. See docs/PROTOCOL.md for the full message
reference.
"""

from __future__ import annotations

import itertools
import json
import logging
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Any

from gamearena.agents import (
    BinaryChoice,
    Decision,
    FreeDescription,
    KeepRange,
    NimMoves,
    Observation,
    VoteTargets,
    state_view,
)
from gamearena.errors import (
    IllegalForfeit,
    ProtocolError,
    TimeoutForfeit,
    TransportLost,
)
from gamearena.games.nim import NimMove
from gamearena.games.types import GameKind, binary_action_from_wire

log = logging.getLogger("gamearena.protocol")

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT_S = 10.0
PING_INTERVAL_MS = 15_000

MESSAGE_TYPES = frozenset(
    {
        "hello",
        "welcome",
        "observation_request",
        "action_response",
        "round_notice",
        "match_result",
        "error",
        "ping",
        "pong",
    }
)


@dataclass(frozen=True)
class ProtocolMessage:
    type: str
    seq: int
    match_id: str | None = None
    payload: dict[str, Any] = field(default_factory=dict)


def encode(msg: ProtocolMessage) -> bytes:
    """One message, one line; decode(encode(m)) == m."""
    body: dict[str, Any] = {"type": msg.type, "seq": msg.seq, "payload": msg.payload}
    if msg.match_id is not None:
        body["match_id"] = msg.match_id
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"


def decode(line: bytes | str) -> ProtocolMessage | None:
    """Parse one line; blank lines are keep-alives and decode to None."""
    if isinstance(line, bytes):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"not UTF-8: {exc}", offset=exc.start) from exc
    else:
        text = line
    stripped = text.strip()
    if not stripped:
        return None
    try:
        body = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"bad line: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(body, dict):
        raise ProtocolError("message must be an object", offset=0)
    kind = body.get("type")
    if not isinstance(kind, str) or kind not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type: {kind!r}", code="unknown_type")
    seq = body.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise ProtocolError(f"seq must be an integer, got {seq!r}")
    match_id = body.get("match_id")
    if match_id is not None and not isinstance(match_id, str):
        raise ProtocolError(f"match_id must be a string, got {match_id!r}")
    payload = body.get("payload", {})
    if not isinstance(payload, dict):
        raise ProtocolError("payload must be an object")
    return ProtocolMessage(type=kind, seq=seq, match_id=match_id, payload=payload)


class Connection:
    """Framed, seq-checked transport over one stream socket.

    The writer assigns outbound seq numbers; the reader enforces that inbound
    seq numbers strictly increase (duplicates are protocol errors).
    """

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._buffer = bytearray()
        self._out_seq = itertools.count(1)
        self._last_in_seq = 0
        self._write_lock = threading.Lock()
        self.closed = False

    def send(
        self, kind: str, payload: dict[str, Any] | None = None, match_id: str | None = None
    ) -> ProtocolMessage:
        msg = ProtocolMessage(
            type=kind, seq=next(self._out_seq), match_id=match_id, payload=payload or {}
        )
        data = encode(msg)
        with self._write_lock:
            try:
                self.sock.sendall(data)
            except OSError as exc:
                raise TransportLost(f"send failed: {exc}") from exc
        return msg

    def _read_line(self, timeout: float | None) -> bytes | None:
        deadline = None if timeout is None else time.monotonic() + timeout
        while b"\n" not in self._buffer:
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return None
                self.sock.settimeout(remaining)
            else:
                self.sock.settimeout(None)
            try:
                chunk = self.sock.recv(4096)
            except (TimeoutError, socket.timeout):
                return None
            except OSError as exc:
                raise TransportLost(f"recv failed: {exc}") from exc
            if not chunk:
                raise TransportLost("connection closed by peer")
            self._buffer.extend(chunk)
        line, _, rest = bytes(self._buffer).partition(b"\n")
        self._buffer = bytearray(rest)
        return line

    def recv(self, timeout: float | None = None) -> ProtocolMessage | None:
        """Next message, or None on timeout. Skips blank keep-alive lines."""
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            line = self._read_line(remaining)
            if line is None:
                return None
            msg = decode(line)
            if msg is None:
                continue
            if msg.seq <= self._last_in_seq:
                raise ProtocolError(
                    f"seq must increase: got {msg.seq} after {self._last_in_seq}",
                    code="seq_violation",
                )
            self._last_in_seq = msg.seq
            return msg

    def close(self) -> None:
        self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


def parse_wire_action(obs: Observation, value: Any) -> Any:
    """Typed action from its wire form, validated against the legal set."""
    legal = obs.legal
    try:
        if isinstance(legal, BinaryChoice):
            return binary_action_from_wire(obs.game, str(value))
        if isinstance(legal, NimMoves):
            move = NimMove(int(value[0]), int(value[1]))
            if move not in legal.moves:
                raise ValueError(f"move {move} not legal")
            return move
        if isinstance(legal, KeepRange):
            keep = int(value)
            if not (0 <= keep <= legal.maximum):
                raise ValueError(f"keep {keep} outside [0, {legal.maximum}]")
            return keep
        if isinstance(legal, FreeDescription):
            if not isinstance(value, str):
                raise ValueError("description must be a string")
            return value
        if isinstance(legal, VoteTargets):
            target = int(value)
            if target not in legal.targets:
                raise ValueError(f"target {target} not votable")
            return target
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise IllegalForfeit(f"bad action {value!r}: {exc}", offender=obs.player) from exc
    raise IllegalForfeit(f"bad action {value!r}", offender=obs.player)


class RemoteAgentProxy:
    """Presents a protocol connection as a standard agent.

    A live-but-late client forfeits; a client that stops answering even
    keep-alives is transport-dead and the match aborts instead.
    """

    kind = "remote"

    def __init__(
        self,
        conn: Connection,
        agent_id: str,
        games: frozenset[GameKind],
        ping_interval_ms: int = PING_INTERVAL_MS,
    ):
        self.conn = conn
        self.agent_id = agent_id
        self.games = games
        self.ping_interval_ms = ping_interval_ms
        self.handshake_complete = True
        self.busy = False
        self.dead = False
        self.current_match: str | None = None
        self._lock = threading.Lock()
        self._idle_misses = 0
        self._last_idle_ping = time.monotonic()

    def decide(self, obs: Observation, memory: Any, seed: int) -> Decision:
        del memory, seed  # the remote brain keeps its own state
        with self._lock:
            return self._decide_locked(obs)

    def _decide_locked(self, obs: Observation) -> Decision:
        if self.dead:
            raise TransportLost(f"{self.agent_id}: connection already lost")
        try:
            request = self.conn.send(
                "observation_request", payload=state_view(obs), match_id=self.current_match
            )
        except TransportLost:
            self.dead = True
            raise
        interval = self.ping_interval_ms / 1000.0
        start = time.monotonic()
        deadline = start + (obs.deadline_ms or PING_INTERVAL_MS * 2) / 1000.0
        next_ping_at = start + interval
        heard_since_request = False
        pings_unanswered = 0
        try:
            while True:
                now = time.monotonic()
                if now >= deadline:
                    if not heard_since_request and pings_unanswered > 0:
                        raise TransportLost(f"{self.agent_id}: silent through the deadline")
                    raise TimeoutForfeit(
                        f"{self.agent_id}: no action within {obs.deadline_ms} ms",
                        offender=obs.player,
                    )
                if now >= next_ping_at:
                    if pings_unanswered >= 2:
                        raise TransportLost(f"{self.agent_id}: two missed pongs")
                    self.conn.send("ping")
                    pings_unanswered += 1
                    next_ping_at = now + interval
                wait = max(0.0, min(deadline, next_ping_at) - time.monotonic())
                msg = self.conn.recv(timeout=min(wait, 0.2))
                if msg is None:
                    continue
                heard_since_request = True
                pings_unanswered = 0
                if msg.type == "ping":
                    self.conn.send("pong")
                    continue
                if msg.type != "action_response":
                    continue
                if msg.match_id != self.current_match:
                    continue
                if msg.payload.get("request_seq") != request.seq:
                    continue  # stale answer; keep waiting until the deadline
                action = parse_wire_action(obs, msg.payload.get("action"))
                rationale = msg.payload.get("rationale")
                return Decision(action, rationale if isinstance(rationale, str) else None)
        except (TransportLost, ProtocolError) as exc:
            self.dead = True
            self.conn.close()
            if isinstance(exc, ProtocolError):
                raise TransportLost(f"{self.agent_id}: protocol violation: {exc}") from exc
            raise

    def bind_match(self, match_id: str | None) -> None:
        self.current_match = match_id

    def notify_round(self, match_id: str, payload: dict[str, Any]) -> None:
        try:
            self.conn.send("round_notice", payload=payload, match_id=match_id)
        except TransportLost:
            self.dead = True

    def notify_result(self, match_id: str, payload: dict[str, Any]) -> None:
        try:
            self.conn.send("match_result", payload=payload, match_id=match_id)
        except TransportLost:
            self.dead = True

    def idle_tick(self) -> bool:
        """One lobby keep-alive cycle: drain inbound, ping when due.

        Returns False once the peer stopped answering (two missed pongs) or
        the transport failed; the server then drops the registration.
        """
        if self.dead:
            return False
        if self.busy or not self._lock.acquire(blocking=False):
            return True
        try:
            heard = False
            while True:
                msg = self.conn.recv(timeout=0.01)
                if msg is None:
                    break
                heard = True
                if msg.type == "ping":
                    self.conn.send("pong")
            now = time.monotonic()
            if heard:
                self._idle_misses = 0
                self._last_idle_ping = now
                return True
            if now - self._last_idle_ping >= self.ping_interval_ms / 1000.0:
                if self._idle_misses >= 2:
                    raise TransportLost(f"{self.agent_id}: two missed idle pongs")
                self.conn.send("ping")
                self._idle_misses += 1
                self._last_idle_ping = now
            return True
        except (TransportLost, ProtocolError):
            self.dead = True
            self.conn.close()
            return False
        finally:
            self._lock.release()


def receive_hello(conn: Connection, taken_names: set[str]) -> tuple[str, frozenset[GameKind]]:
    """Server side of the negotiation up to (not including) the welcome.

    Closes the connection on timeout, version mismatch, or a taken name.
    """
    try:
        msg = conn.recv(timeout=HANDSHAKE_TIMEOUT_S)
    except (ProtocolError, TransportLost) as exc:
        conn.close()
        raise TransportLost(f"handshake failed: {exc}") from exc
    if msg is None:
        conn.close()
        raise TransportLost("no hello within the handshake timeout")
    if msg.type != "hello":
        conn.send("error", payload={"code": "expected_hello"})
        conn.close()
        raise TransportLost(f"expected hello, got {msg.type}")
    version = msg.payload.get("version")
    if version != PROTOCOL_VERSION:
        conn.send("error", payload={"code": "version_mismatch", "supported": PROTOCOL_VERSION})
        conn.close()
        raise TransportLost(f"version mismatch: client sent {version!r}")
    name = msg.payload.get("name")
    if not isinstance(name, str) or not name:
        conn.send("error", payload={"code": "bad_name"})
        conn.close()
        raise TransportLost("hello without a usable name")
    if name in taken_names:
        conn.send("error", payload={"code": "duplicate_name", "name": name})
        conn.close()
        raise TransportLost(f"duplicate agent name: {name}")
    games = []
    for token in msg.payload.get("games", []):
        try:
            games.append(GameKind(token))
        except ValueError:
            log.warning("client %s claims unknown game %r; ignored", name, token)
    return name, frozenset(games)


def send_welcome(conn: Connection, agent_id: str, params: dict[str, Any] | None = None) -> None:
    conn.send("welcome", payload={"agent_id": agent_id, "params": params or {}})


def server_handshake(
    conn: Connection, taken_names: set[str], params: dict[str, Any] | None = None
) -> tuple[str, frozenset[GameKind]]:
    """Full server-side handshake: hello in, welcome out."""
    name, games = receive_hello(conn, taken_names)
    send_welcome(conn, name, params)
    return name, games


def client_handshake(conn: Connection, name: str, games: list[str]) -> dict[str, Any]:
    """Client side: say hello, expect a welcome. Raises TransportLost on refusal."""
    conn.send("hello", payload={"name": name, "games": games, "version": PROTOCOL_VERSION})
    msg = conn.recv(timeout=HANDSHAKE_TIMEOUT_S)
    if msg is None:
        raise TransportLost("no welcome within the handshake timeout")
    if msg.type == "error":
        raise TransportLost(f"server refused: {msg.payload.get('code')}")
    if msg.type != "welcome":
        raise TransportLost(f"expected welcome, got {msg.type}")
    return msg.payload
