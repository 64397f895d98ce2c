"""TCP front door: accept remote agents, keep them alive, and run matches
from the serve plan as soon as enough eligible players are idle.

The server owns one Arena; scripted plan agents act as house players and
remote clients join the same pool through the handshake.
"""

from __future__ import annotations

import itertools
import logging
import socket
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from gamearena import storage
from gamearena.arena import (
    AgentRegistration,
    Arena,
    MatchTicket,
    PlanGame,
    ScriptedAgent,
    build_config,
)
from gamearena.errors import TransportLost
from gamearena.games.types import GameKind, derive_seed
from gamearena.protocol import Connection, RemoteAgentProxy, receive_hello, send_welcome

log = logging.getLogger("gamearena.server")


class ArenaServer:
    def __init__(
        self,
        arena: Arena,
        host: str = "127.0.0.1",
        port: int = 0,
        entries: list[PlanGame] | None = None,
        plan_agents: list[tuple[str, Any, frozenset]] | None = None,
        seed: int = 0,
        out_dir: str | Path | None = None,
        ping_interval_ms: int = 15_000,
        max_matches: int = 4,
    ):
        self.arena = arena
        self.entries = entries or []
        self.seed = seed
        self.out_dir = Path(out_dir) if out_dir else None
        self.ping_interval_ms = ping_interval_ms
        self.proxies: dict[str, RemoteAgentProxy] = {}
        self._played: Counter = Counter()
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._pool = ThreadPoolExecutor(max_workers=max_matches)
        self._futures: list = []

        for agent_id, strategy, games in plan_agents or []:
            self.arena.register(
                AgentRegistration(
                    agent_id=agent_id,
                    handler=ScriptedAgent(strategy),
                    supported_games=games,
                )
            )

        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self.address: tuple[str, int] = self._sock.getsockname()[:2]

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        for target in (self._accept_loop, self._matchmaker_loop):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)
        log.info("listening on %s:%d", *self.address)

    def shutdown(self) -> None:
        """Stop accepting, let running matches finish, flush, close."""
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        for thread in self._threads:
            thread.join(timeout=5)
        self._pool.shutdown(wait=True)
        with self._lock:
            for proxy in self.proxies.values():
                proxy.conn.close()
            self.proxies.clear()

    # -- connections ----------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, peer = self._sock.accept()
            except OSError:
                return  # socket closed during shutdown
            threading.Thread(target=self._admit, args=(sock, peer), daemon=True).start()

    def _admit(self, sock: socket.socket, peer) -> None:
        conn = Connection(sock)
        try:
            with self._lock:
                taken = set(self.arena.registry)
            name, games = receive_hello(conn, taken)
            proxy = RemoteAgentProxy(
                conn, agent_id=name, games=games, ping_interval_ms=self.ping_interval_ms
            )
            with self._lock:
                self.arena.register(
                    AgentRegistration(agent_id=name, handler=proxy, supported_games=games)
                )
                self.proxies[name] = proxy
            send_welcome(conn, name, params={"ping_interval_ms": self.ping_interval_ms})
            log.info("agent %s joined from %s (games: %s)", name, peer, sorted(g.value for g in games))
        except Exception as exc:
            log.warning("connection from %s rejected: %s", peer, exc)
            conn.close()

    def _drop(self, name: str) -> None:
        with self._lock:
            self.proxies.pop(name, None)
            self.arena.registry.pop(name, None)
        log.info("agent %s dropped", name)

    # -- matchmaking ----------------------------------------------------------

    def _idle_remotes(self) -> list[str]:
        idle = []
        for name, proxy in list(self.proxies.items()):
            if proxy.dead:
                self._drop(name)
            elif not proxy.busy:
                idle.append(name)
        return idle

    def _available_pool(self) -> list[str]:
        """Scripted house agents plus idle live remotes, in registration order."""
        idle = set(self._idle_remotes())
        pool = []
        for agent_id, reg in self.arena.registry.items():
            if reg.kind == "scripted" or agent_id in idle:
                pool.append(agent_id)
        return pool

    def _matchmaker_loop(self) -> None:
        while not self._stop.is_set():
            self._keepalive_tick()
            started = self._try_start_matches()
            if not started:
                self._stop.wait(0.05)

    def _keepalive_tick(self) -> None:
        for name, proxy in list(self.proxies.items()):
            if not proxy.idle_tick():
                self._drop(name)

    def _next_seats(self, entry_idx: int, entry: PlanGame) -> tuple[str, ...] | None:
        """First seating (in registration order) with repetitions left."""
        pool = self._available_pool()
        eligible = self.arena.eligible(entry.game, pool)
        if entry.game == GameKind.WHO_IS_SPY:
            if len(eligible) < 4:
                return None
            seatings = [tuple(eligible[:6])]
        else:
            if len(eligible) < 2:
                return None
            seatings = list(itertools.combinations(eligible, 2))
        for seats in seatings:
            if self._played[(entry_idx, seats)] < entry.repetitions:
                return seats
        return None

    def _try_start_matches(self) -> bool:
        started = False
        for entry_idx, entry in enumerate(self.entries):
            seats = self._next_seats(entry_idx, entry)
            if seats is None:
                continue
            key = (entry_idx, seats)
            rep = self._played[key]
            self._played[key] += 1
            seed = derive_seed(self.seed, entry.game.value, entry.variant, rep, *seats)
            config = build_config(entry, seats, seed)
            ticket = self.arena.matchmake(config, pool=list(seats))
            for agent_id in seats:
                proxy = self.proxies.get(agent_id)
                if proxy is not None:
                    proxy.busy = True
                    proxy.bind_match(ticket.match_id)
            self._futures.append(self._pool.submit(self._run_ticket, ticket))
            started = True
        return started

    def _run_ticket(self, ticket: MatchTicket) -> None:
        try:
            record = self.arena.run_match(ticket)
            self.arena.apply_records([record])
            if self.out_dir is not None:
                storage.append_transcript(record, self.out_dir)
                storage.export_files(self.arena.board, self.out_dir)
            log.info("match %s %s", ticket.match_id, record.status)
        except TransportLost as exc:
            log.warning("match %s aborted: %s", ticket.match_id, exc)
        except Exception:
            log.exception("match %s crashed", ticket.match_id)
        finally:
            for agent_id in ticket.participants:
                proxy = self.proxies.get(agent_id)
                if proxy is not None:
                    proxy.bind_match(None)
                    proxy.busy = False

    def wait_idle(self, timeout: float = 30.0) -> bool:
        """Block until no match is running (used by tests and shutdown)."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            pending = [f for f in self._futures if not f.done()]
            if not pending:
                return True
            time.sleep(0.02)
        return False
