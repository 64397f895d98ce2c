"""Agent-side loop: observe the public state, decide, remember.

Observations are strict projections of the match state onto what one player
may see; no other player's word or role ever appears in one. Scripted
strategies are deterministic in (observation, seed) so they double as
oracles for the arena tests.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Any

from gamearena.errors import IllegalMove
from gamearena.games.engine import (
    DictatorGameState,
    GameState,
    MatrixGameState,
    NimGameState,
    SpyGameState,
)
from gamearena.games.nim import NimMove, NimState, nim_legal_moves, nim_optimal_move
from gamearena.games.spy import SpyPhase
from gamearena.games.types import (
    BinaryAction,
    GameKind,
    RoundResult,
    action_labels,
    derive_seed,
)


class StrategyKind(str, Enum):
    ALWAYS_COOPERATE = "always_cooperate"
    ALWAYS_DEFECT = "always_defect"
    TIT_FOR_TAT = "tit_for_tat"
    GRIM_TRIGGER = "grim_trigger"
    RANDOM_SEEDED = "random"
    NIM_OPTIMAL = "nim_optimal"
    NIM_RANDOM = "nim_random"
    DICTATOR_FAIR = "dictator_fair"
    DICTATOR_SELFISH = "dictator_selfish"
    SPY_SCRIPTED = "spy_scripted"


MATRIX = {GameKind.PRISONERS_DILEMMA, GameKind.TRUST_GAME}

STRATEGY_GAMES: dict[StrategyKind, set[GameKind]] = {
    StrategyKind.ALWAYS_COOPERATE: set(MATRIX),
    StrategyKind.ALWAYS_DEFECT: set(MATRIX),
    StrategyKind.TIT_FOR_TAT: set(MATRIX),
    StrategyKind.GRIM_TRIGGER: set(MATRIX),
    StrategyKind.RANDOM_SEEDED: set(GameKind),
    StrategyKind.NIM_OPTIMAL: {GameKind.NIM},
    StrategyKind.NIM_RANDOM: {GameKind.NIM},
    StrategyKind.DICTATOR_FAIR: {GameKind.DICTATOR},
    StrategyKind.DICTATOR_SELFISH: {GameKind.DICTATOR},
    StrategyKind.SPY_SCRIPTED: {GameKind.WHO_IS_SPY},
}


# ---------------------------------------------------------------------------
# legal-action summaries


@dataclass(frozen=True)
class BinaryChoice:
    labels: tuple[str, str]


@dataclass(frozen=True)
class NimMoves:
    moves: tuple[NimMove, ...]


@dataclass(frozen=True)
class KeepRange:
    maximum: int


@dataclass(frozen=True)
class FreeDescription:
    pass


@dataclass(frozen=True)
class VoteTargets:
    targets: tuple[int, ...]


LegalActions = Any


@dataclass(frozen=True)
class Observation:
    """Player-visible slice of a match: public history plus the legal actions."""

    game: GameKind
    round_no: int
    player: int
    player_count: int
    rounds: int
    payoffs: tuple[int, ...]
    legal: LegalActions
    deadline_ms: int | None = None
    history: tuple = ()
    piles: tuple[int, ...] | None = None
    to_move: int | None = None
    endowment: int | None = None
    dictator: int | None = None
    phase: str | None = None
    alive: tuple[bool, ...] | None = None
    descriptions: tuple[tuple[int, int, str], ...] | None = None
    votes: tuple[tuple[int, int, int], ...] | None = None
    word: str | None = None


@dataclass(frozen=True)
class AgentMemory:
    """Per-match memory: observed round results, reflections, own running payoff."""

    player: int = 0
    rounds: tuple[RoundResult, ...] = ()
    reflections: tuple[str, ...] = ()
    payoff: int = 0


@dataclass(frozen=True)
class Decision:
    action: Any
    rationale: str | None = None


def legal_summary(obs: Observation) -> dict[str, Any]:
    """Wire form of the legal-action summary."""
    legal = obs.legal
    if isinstance(legal, BinaryChoice):
        return {"kind": "binary", "actions": list(legal.labels)}
    if isinstance(legal, NimMoves):
        return {"kind": "nim", "moves": [[m.pile_index, m.take] for m in legal.moves]}
    if isinstance(legal, KeepRange):
        return {"kind": "keep", "min": 0, "max": legal.maximum}
    if isinstance(legal, FreeDescription):
        return {"kind": "describe"}
    if isinstance(legal, VoteTargets):
        return {"kind": "vote", "targets": list(legal.targets)}
    raise TypeError(f"unknown legal-action summary: {legal!r}")


def state_view(obs: Observation) -> dict[str, Any]:
    """Canonical JSON-able view of an observation; also what goes on the wire."""
    view: dict[str, Any] = {
        "game": obs.game.value,
        "round_no": obs.round_no,
        "player": obs.player,
        "player_count": obs.player_count,
        "rounds": obs.rounds,
        "payoffs": list(obs.payoffs),
        "legal": legal_summary(obs),
        "deadline_ms": obs.deadline_ms,
    }
    if obs.game in MATRIX:
        labels = action_labels(obs.game)
        view["history"] = [
            [labels[0] if a == BinaryAction.COOPERATE else labels[1] for a in pair]
            for pair in obs.history
        ]
    elif obs.game == GameKind.NIM:
        view["piles"] = list(obs.piles or ())
        view["to_move"] = obs.to_move
        view["history"] = [[m.pile_index, m.take] for m in obs.history]
    elif obs.game == GameKind.DICTATOR:
        view["endowment"] = obs.endowment
        view["dictator"] = obs.dictator
        view["history"] = [list(entry) for entry in obs.history]
    else:
        view["phase"] = obs.phase
        view["alive"] = list(obs.alive or ())
        view["descriptions"] = [list(d) for d in obs.descriptions or ()]
        view["votes"] = [list(v) for v in obs.votes or ()]
        view["word"] = obs.word
    return view


def observation_digest(obs: Observation) -> str:
    canonical = json.dumps(state_view(obs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def perceive(
    state: GameState,
    player: int,
    memory: AgentMemory,
    deadline_ms: int | None = None,
) -> Observation:
    """Project the authoritative state onto one player's view. Pure."""
    config = state.config
    common = dict(
        game=config.game,
        round_no=state.round_no,
        player=player,
        player_count=config.player_count,
        rounds=config.rounds,
        deadline_ms=deadline_ms,
    )
    if isinstance(state, MatrixGameState):
        return Observation(
            payoffs=state.payoffs,
            legal=BinaryChoice(labels=action_labels(config.game)),
            history=state.history,
            **common,
        )
    if isinstance(state, NimGameState):
        moves = tuple(nim_legal_moves(state.nim)) if state.nim.to_move == player else ()
        return Observation(
            payoffs=state.payoffs,
            legal=NimMoves(moves=moves),
            history=state.moves,
            piles=state.nim.piles,
            to_move=state.nim.to_move,
            **common,
        )
    if isinstance(state, DictatorGameState):
        return Observation(
            payoffs=state.payoffs,
            legal=KeepRange(maximum=config.endowment),
            history=state.allocations,
            endowment=config.endowment,
            dictator=state.dictator(),
            **common,
        )
    if isinstance(state, SpyGameState):
        spy = state.spy
        if spy.phase == SpyPhase.VOTE:
            targets = tuple(i for i in spy.alive_players() if i != player)
            legal: LegalActions = VoteTargets(targets=targets)
        else:
            legal = FreeDescription()
        return Observation(
            payoffs=(0,) * config.player_count,
            legal=legal,
            phase=spy.phase.value,
            alive=spy.alive,
            descriptions=spy.descriptions,
            votes=spy.votes,
            word=spy.words[player],
            **common,
        )
    raise TypeError(f"unknown game state: {state!r}")


def remember(
    memory: AgentMemory, round_result: RoundResult, reflections: str | None = None
) -> AgentMemory:
    """Extend the memory by exactly one round; prior entries are untouched."""
    notes = memory.reflections + ((reflections,) if reflections else ())
    own = 0
    if 0 <= memory.player < len(round_result.payoffs):
        own = round_result.payoffs[memory.player]
    return AgentMemory(
        player=memory.player,
        rounds=memory.rounds + (round_result,),
        reflections=notes,
        payoff=memory.payoff + own,
    )


# ---------------------------------------------------------------------------
# scripted strategies


def _opponent_history(obs: Observation) -> list[BinaryAction]:
    other = 1 - obs.player
    return [pair[other] for pair in obs.history]


def spy_token(word: str, round_no: int) -> str:
    """Fixed per-round description token; never equals the word itself."""
    digest = hashlib.sha256(f"{word.strip().lower()}|{round_no}".encode("utf-8")).hexdigest()
    token = f"d{digest[:6]}"
    if token.lower() == word.strip().lower():
        token += "x"
    return token


def _spy_vote(obs: Observation) -> int:
    """Vote for the player whose current-round token is rarest; ties go low."""
    assert obs.descriptions is not None and obs.alive is not None
    current = {
        player: text
        for rnd, player, text in obs.descriptions
        if rnd == obs.round_no and obs.alive[player]
    }
    freq = Counter(current.values())
    targets = obs.legal.targets
    if not targets:
        raise IllegalMove("no vote targets", offender=obs.player)
    return min(targets, key=lambda p: (freq[current.get(p, "")], p))


def decide(
    strategy: StrategyKind, obs: Observation, memory: AgentMemory, seed: int
) -> Decision:
    """Pure strategy dispatch: same (strategy, obs, memory, seed) → same decision."""
    rng = random.Random(derive_seed(seed, obs.game.value, obs.round_no, obs.phase or "", obs.player))

    if strategy == StrategyKind.ALWAYS_COOPERATE:
        return Decision(BinaryAction.COOPERATE)
    if strategy == StrategyKind.ALWAYS_DEFECT:
        return Decision(BinaryAction.DEFECT)
    if strategy == StrategyKind.TIT_FOR_TAT:
        seen = _opponent_history(obs)
        return Decision(seen[-1] if seen else BinaryAction.COOPERATE)
    if strategy == StrategyKind.GRIM_TRIGGER:
        triggered = BinaryAction.DEFECT in _opponent_history(obs)
        return Decision(BinaryAction.DEFECT if triggered else BinaryAction.COOPERATE)
    if strategy == StrategyKind.NIM_OPTIMAL:
        assert obs.piles is not None
        return Decision(nim_optimal_move(NimState(piles=obs.piles, to_move=obs.player)))
    if strategy == StrategyKind.NIM_RANDOM:
        return Decision(rng.choice(list(obs.legal.moves)))
    if strategy == StrategyKind.DICTATOR_FAIR:
        assert obs.endowment is not None
        return Decision((obs.endowment + 1) // 2)
    if strategy == StrategyKind.DICTATOR_SELFISH:
        return Decision(obs.endowment)
    if strategy == StrategyKind.SPY_SCRIPTED:
        if obs.phase == SpyPhase.VOTE.value:
            return Decision(_spy_vote(obs))
        assert obs.word is not None
        return Decision(spy_token(obs.word, obs.round_no))
    if strategy == StrategyKind.RANDOM_SEEDED:
        return Decision(_random_action(obs, rng))
    raise ValueError(f"unknown strategy: {strategy}")


def _random_action(obs: Observation, rng: random.Random) -> Any:
    legal = obs.legal
    if isinstance(legal, BinaryChoice):
        return rng.choice((BinaryAction.COOPERATE, BinaryAction.DEFECT))
    if isinstance(legal, NimMoves):
        return rng.choice(list(legal.moves))
    if isinstance(legal, KeepRange):
        return rng.randint(0, legal.maximum)
    if isinstance(legal, FreeDescription):
        token = f"tok{rng.randrange(4)}"
        if obs.word and token.lower() == obs.word.strip().lower():
            token += "x"
        return token
    if isinstance(legal, VoteTargets):
        return rng.choice(list(legal.targets))
    raise TypeError(f"unknown legal-action summary: {legal!r}")


def action_is_legal(obs: Observation, action: Any) -> bool:
    """Validate a decision against the observation's legal-action summary."""
    legal = obs.legal
    if isinstance(legal, BinaryChoice):
        return isinstance(action, BinaryAction)
    if isinstance(legal, NimMoves):
        try:
            return NimMove(*action) in legal.moves
        except (TypeError, ValueError):
            return False
    if isinstance(legal, KeepRange):
        return isinstance(action, int) and 0 <= action <= legal.maximum
    if isinstance(legal, FreeDescription):
        return isinstance(action, str)
    if isinstance(legal, VoteTargets):
        return action in legal.targets
    return False
