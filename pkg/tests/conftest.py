"""Shared fixtures and a minimal conforming wire client used by the
protocol and CLI integration tests."""

from __future__ import annotations

import socket
import threading

import pytest

from gamearena.arena import Arena, PlanAgent, PlanGame, TournamentPlan
from gamearena.agents import StrategyKind
from gamearena.games.types import GameKind
from gamearena.protocol import Connection, client_handshake


def small_plan(seed: int = 42, workers: int = 1) -> TournamentPlan:
    return TournamentPlan(
        agents=(
            PlanAgent("tft", StrategyKind.TIT_FOR_TAT),
            PlanAgent("grim", StrategyKind.GRIM_TRIGGER),
            PlanAgent("rand_a", StrategyKind.RANDOM_SEEDED),
            PlanAgent("rand_b", StrategyKind.RANDOM_SEEDED),
        ),
        games=(
            PlanGame(GameKind.PRISONERS_DILEMMA, "single", 1),
            PlanGame(GameKind.PRISONERS_DILEMMA, "multi", 1),
            PlanGame(GameKind.TRUST_GAME, "single", 1),
            PlanGame(GameKind.TRUST_GAME, "multi", 1),
            PlanGame(GameKind.NIM, "single", 1),
            PlanGame(GameKind.DICTATOR, "single", 1),
            PlanGame(GameKind.DICTATOR, "multi", 1),
        ),
        seed=seed,
        workers=workers,
    )


@pytest.fixture
def arena() -> Arena:
    return Arena()


class WireClient:
    """Test-side conforming client: answers observation requests with a
    policy function over the wire-level state view."""

    def __init__(self, host: str, port: int, name: str, games: list[str], policy):
        self.name = name
        self.policy = policy
        sock = socket.create_connection((host, port), timeout=10)
        self.conn = Connection(sock)
        self.welcome = client_handshake(self.conn, name, games)
        self.results: list[dict] = []
        self.done = threading.Event()
        self.thread = threading.Thread(target=self._loop, daemon=True)

    def start(self) -> "WireClient":
        self.thread.start()
        return self

    def _loop(self) -> None:
        try:
            while True:
                msg = self.conn.recv(timeout=20)
                if msg is None:
                    return
                if msg.type == "ping":
                    self.conn.send("pong")
                elif msg.type == "observation_request":
                    action = self.policy(msg.payload)
                    self.conn.send(
                        "action_response",
                        payload={"request_seq": msg.seq, "action": action},
                        match_id=msg.match_id,
                    )
                elif msg.type == "match_result":
                    self.results.append(msg.payload)
                    self.done.set()
                    return
        except Exception:
            self.done.set()

    def close(self) -> None:
        self.conn.close()


def tit_for_tat_policy(view: dict):
    """Wire-level tit for tat over the state view's public history."""
    me = view["player"]
    history = view.get("history", [])
    if not history:
        return "cooperate"
    return history[-1][1 - me]
