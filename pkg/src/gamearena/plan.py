"""Declarative tournament plan files (JSON), schema-checked before any
match runs. Unknown keys are rejected with the offending key path.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from gamearena.agents import STRATEGY_GAMES, StrategyKind
from gamearena.arena import DEFAULT_DEADLINE_MS, PlanAgent, PlanGame, TournamentPlan
from gamearena.errors import PlanError
from gamearena.games.types import GameKind

_TOP_KEYS = {"agents", "games", "seed", "workers", "deadline_ms", "out"}
_AGENT_KEYS = {"id", "name", "strategy", "remote", "games"}
_GAME_KEYS = {"game", "variant", "repetitions", "rounds", "endowment", "piles", "words"}


def _require(condition: bool, message: str, location: str) -> None:
    if not condition:
        raise PlanError(message, location)


def _check_keys(obj: dict, allowed: set[str], location: str) -> None:
    for key in obj:
        if key not in allowed:
            raise PlanError(f"unknown key {key!r}", f"{location}.{key}" if location else key)


def _parse_game_kind(token: Any, location: str) -> GameKind:
    try:
        return GameKind(token)
    except ValueError:
        raise PlanError(
            f"unknown game {token!r} (expected one of {', '.join(g.value for g in GameKind)})",
            location,
        ) from None


def _parse_agent(obj: Any, location: str) -> PlanAgent:
    _require(isinstance(obj, dict), "agent must be an object", location)
    _check_keys(obj, _AGENT_KEYS, location)
    _require("id" in obj, "agent needs an id", location)
    agent_id = obj["id"]
    _require(isinstance(agent_id, str) and agent_id != "", "agent id must be a non-empty string", f"{location}.id")
    remote = obj.get("remote", False)
    _require(isinstance(remote, bool), "remote must be true or false", f"{location}.remote")
    strategy = None
    if not remote:
        _require("strategy" in obj, "scripted agent needs a strategy", location)
    if "strategy" in obj:
        _require(not remote, "a remote agent cannot also have a strategy", f"{location}.strategy")
        try:
            strategy = StrategyKind(obj["strategy"])
        except ValueError:
            raise PlanError(
                f"unknown strategy {obj['strategy']!r} "
                f"(expected one of {', '.join(s.value for s in StrategyKind)})",
                f"{location}.strategy",
            ) from None
    games = None
    if "games" in obj:
        _require(isinstance(obj["games"], list), "games must be a list", f"{location}.games")
        games = frozenset(
            _parse_game_kind(token, f"{location}.games[{i}]")
            for i, token in enumerate(obj["games"])
        )
        if strategy is not None:
            playable = STRATEGY_GAMES[strategy]
            for game in games:
                _require(
                    game in playable,
                    f"strategy {strategy.value} cannot play {game.value}",
                    f"{location}.games",
                )
    return PlanAgent(
        agent_id=agent_id,
        strategy=strategy,
        display_name=obj.get("name", ""),
        games=games,
    )


def _parse_game(obj: Any, location: str) -> PlanGame:
    _require(isinstance(obj, dict), "game entry must be an object", location)
    _check_keys(obj, _GAME_KEYS, location)
    _require("game" in obj, "game entry needs a game", location)
    game = _parse_game_kind(obj["game"], f"{location}.game")
    variant = obj.get("variant", "single")
    _require(variant in ("single", "multi"), "variant must be 'single' or 'multi'", f"{location}.variant")
    repetitions = obj.get("repetitions", 1)
    _require(
        isinstance(repetitions, int) and repetitions >= 0,
        "repetitions must be a non-negative integer",
        f"{location}.repetitions",
    )
    rounds = obj.get("rounds")
    if rounds is not None:
        _require(isinstance(rounds, int) and rounds >= 1, "rounds must be >= 1", f"{location}.rounds")
    piles = obj.get("piles")
    if piles is not None:
        _require(
            isinstance(piles, list) and piles and all(isinstance(p, int) and p >= 1 for p in piles),
            "piles must be a non-empty list of positive integers",
            f"{location}.piles",
        )
        piles = tuple(piles)
    words = obj.get("words")
    if words is not None:
        _require(
            isinstance(words, list) and len(words) == 2 and all(isinstance(w, str) for w in words),
            "words must be [civilian_word, spy_word]",
            f"{location}.words",
        )
        words = tuple(words)
    endowment = obj.get("endowment")
    if endowment is not None:
        _require(
            isinstance(endowment, int) and endowment >= 0,
            "endowment must be a non-negative integer",
            f"{location}.endowment",
        )
    return PlanGame(
        game=game,
        variant=variant,
        repetitions=repetitions,
        rounds=rounds,
        endowment=endowment,
        piles=piles,
        words=words,
    )


def parse_plan(data: Any) -> tuple[TournamentPlan, str | None]:
    """Validate a decoded plan document; returns the plan and its `out` dir."""
    if not isinstance(data, dict):
        raise PlanError("plan must be a JSON object", "")
    _check_keys(data, _TOP_KEYS, "")
    _require("agents" in data and isinstance(data["agents"], list), "plan needs an agents list", "agents")
    _require("games" in data and isinstance(data["games"], list), "plan needs a games list", "games")
    agents = tuple(_parse_agent(a, f"agents[{i}]") for i, a in enumerate(data["agents"]))
    seen: set[str] = set()
    for i, agent in enumerate(agents):
        _require(agent.agent_id not in seen, f"duplicate agent id {agent.agent_id!r}", f"agents[{i}].id")
        seen.add(agent.agent_id)
    games = tuple(_parse_game(g, f"games[{i}]") for i, g in enumerate(data["games"]))
    seed = data.get("seed", 0)
    _require(isinstance(seed, int) and seed >= 0, "seed must be a non-negative integer", "seed")
    workers = data.get("workers", 1)
    _require(isinstance(workers, int) and workers >= 1, "workers must be >= 1", "workers")
    deadline = data.get("deadline_ms", DEFAULT_DEADLINE_MS)
    _require(isinstance(deadline, int) and deadline >= 1, "deadline_ms must be >= 1", "deadline_ms")
    out = data.get("out")
    if out is not None:
        _require(isinstance(out, str) and out != "", "out must be a non-empty path", "out")
    plan = TournamentPlan(
        agents=agents, games=games, seed=seed, workers=workers, deadline_ms=deadline
    )
    return plan, out


def load_plan(path: str | Path) -> tuple[TournamentPlan, str | None]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanError(f"cannot read plan: {exc}", str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanError(f"not valid JSON: {exc.msg} (line {exc.lineno})", str(path)) from exc
    return parse_plan(data)
