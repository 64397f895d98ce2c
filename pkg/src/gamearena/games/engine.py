"""One pure state machine per game behind a common step interface.

A match is a sequence of `game_step(state, joint_actions)` calls; the same
inputs always produce the same outputs, which is what makes transcripts
replayable bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Union

from gamearena.errors import IllegalAllocation, IllegalMove
from gamearena.games import spy as spy_rules
from gamearena.games.nim import NimMove, NimState, nim_apply, nim_winner
from gamearena.games.payoffs import dictator_settle, pd_payoff, trust_payoff
from gamearena.games.spy import SpyPhase, SpyState
from gamearena.games.types import (
    BinaryAction,
    GameKind,
    MatchConfig,
    MatchOutcome,
    RoundResult,
    binary_action_to_wire,
    derive_seed,
)

MATRIX_GAMES = (GameKind.PRISONERS_DILEMMA, GameKind.TRUST_GAME)


@dataclass(frozen=True)
class MatrixGameState:
    config: MatchConfig
    history: tuple[tuple[BinaryAction, BinaryAction], ...] = ()
    payoffs: tuple[int, int] = (0, 0)

    @property
    def round_no(self) -> int:
        return len(self.history) + 1

    def is_terminal(self) -> bool:
        return len(self.history) >= self.config.rounds


@dataclass(frozen=True)
class NimGameState:
    config: MatchConfig
    nim: NimState = field(default_factory=lambda: NimState(piles=(1,)))
    moves: tuple[NimMove, ...] = ()
    payoffs: tuple[int, int] = (0, 0)

    @property
    def round_no(self) -> int:
        return len(self.moves) + 1

    def is_terminal(self) -> bool:
        return self.nim.is_terminal()


@dataclass(frozen=True)
class DictatorGameState:
    config: MatchConfig
    allocations: tuple[tuple[int, int], ...] = ()  # (dictator, keep)
    payoffs: tuple[int, int] = (0, 0)

    @property
    def round_no(self) -> int:
        return len(self.allocations) + 1

    def dictator(self) -> int:
        # roles alternate so both seats get rated on dictator behavior
        return (self.round_no - 1) % 2

    def is_terminal(self) -> bool:
        return len(self.allocations) >= self.config.rounds


@dataclass(frozen=True)
class SpyGameState:
    config: MatchConfig
    spy: SpyState

    @property
    def round_no(self) -> int:
        return self.spy.round_no

    def is_terminal(self) -> bool:
        return self.spy.phase == SpyPhase.FINISHED


GameState = Union[MatrixGameState, NimGameState, DictatorGameState, SpyGameState]


def init_state(config: MatchConfig) -> GameState:
    config.validate()
    if config.game in MATRIX_GAMES:
        return MatrixGameState(config=config)
    if config.game == GameKind.NIM:
        return NimGameState(config=config, nim=NimState(piles=config.initial_piles))
    if config.game == GameKind.DICTATOR:
        return DictatorGameState(config=config)
    return SpyGameState(
        config=config, spy=spy_rules.spy_init(config, derive_seed(config.rng_seed, "deal"))
    )


def actors(state: GameState) -> list[int]:
    """Players whose action is required for the next step."""
    if state.is_terminal():
        return []
    if isinstance(state, MatrixGameState):
        return [0, 1]
    if isinstance(state, NimGameState):
        return [state.nim.to_move]
    if isinstance(state, DictatorGameState):
        return [state.dictator()]
    return state.spy.alive_players()


def game_step(state: GameState, joint_actions: dict[int, Any]) -> tuple[GameState, RoundResult]:
    """Apply one round (or one spy phase) and return the new state.

    Raises a RuleViolation carrying the offending player when an action is
    illegal; the arena converts that into a forfeit or abstention.
    """
    if state.is_terminal():
        raise IllegalMove("match already finished")
    if isinstance(state, MatrixGameState):
        return _matrix_step(state, joint_actions)
    if isinstance(state, NimGameState):
        return _nim_step(state, joint_actions)
    if isinstance(state, DictatorGameState):
        return _dictator_step(state, joint_actions)
    return _spy_step(state, joint_actions)


def _matrix_step(state: MatrixGameState, joint: dict[int, Any]) -> tuple[MatrixGameState, RoundResult]:
    game = state.config.game
    try:
        a0, a1 = BinaryAction(joint[0]), BinaryAction(joint[1])
    except (KeyError, ValueError) as exc:
        raise IllegalMove(f"both players must submit a {game.value} action: {exc}") from exc
    if game == GameKind.PRISONERS_DILEMMA:
        p0, p1 = pd_payoff(a0, a1, state.config.payoff_table.pd)
    else:
        p0, p1 = trust_payoff(a0, a1, state.config.payoff_table.trust)
    next_state = replace(
        state,
        history=state.history + ((a0, a1),),
        payoffs=(state.payoffs[0] + p0, state.payoffs[1] + p1),
    )
    result = RoundResult(
        payoffs=(p0, p1),
        actions={0: binary_action_to_wire(game, a0), 1: binary_action_to_wire(game, a1)},
    )
    return next_state, result


def _nim_step(state: NimGameState, joint: dict[int, Any]) -> tuple[NimGameState, RoundResult]:
    mover = state.nim.to_move
    if mover not in joint:
        raise IllegalMove(f"player {mover} is to move", offender=mover)
    move = NimMove(*joint[mover])
    nim = nim_apply(state.nim, move)
    winner = nim_winner(nim)
    payoffs = [0, 0]
    info: dict[str, Any] = {"piles": list(nim.piles)}
    if winner is not None:
        payoffs[winner] = 1  # the last stone wins the game's single point
        info["winner"] = winner
    next_state = replace(
        state,
        nim=nim,
        moves=state.moves + (move,),
        payoffs=(state.payoffs[0] + payoffs[0], state.payoffs[1] + payoffs[1]),
    )
    result = RoundResult(payoffs=tuple(payoffs), actions={mover: [move.pile_index, move.take]}, info=info)
    return next_state, result


def _dictator_step(state: DictatorGameState, joint: dict[int, Any]) -> tuple[DictatorGameState, RoundResult]:
    dictator = state.dictator()
    if dictator not in joint:
        raise IllegalMove(f"player {dictator} dictates this round", offender=dictator)
    keep = int(joint[dictator])
    try:
        kept, given = dictator_settle(state.config.endowment, keep)
    except IllegalAllocation as exc:
        raise IllegalAllocation(str(exc), offender=dictator) from exc
    payoffs = [0, 0]
    payoffs[dictator] = kept
    payoffs[1 - dictator] = given
    next_state = replace(
        state,
        allocations=state.allocations + ((dictator, keep),),
        payoffs=(state.payoffs[0] + payoffs[0], state.payoffs[1] + payoffs[1]),
    )
    result = RoundResult(
        payoffs=tuple(payoffs), actions={dictator: keep}, info={"dictator": dictator}
    )
    return next_state, result


def _spy_step(state: SpyGameState, joint: dict[int, Any]) -> tuple[SpyGameState, RoundResult]:
    spy = state.spy
    n = len(spy.roles)
    if spy.phase == SpyPhase.DESCRIBE:
        texts = {p: str(joint.get(p, "")) for p in spy.alive_players()}
        next_spy, eliminated = spy_rules.apply_descriptions(spy, texts)
        info: dict[str, Any] = {
            "phase": "describe",
            "eliminated": eliminated,
            "alive_after": next_spy.alive_players(),
        }
        actions: dict[int, Any] = dict(texts)
    else:
        ballots = {int(p): int(t) for p, t in joint.items()}
        next_spy, out = spy_rules.apply_votes(spy, ballots)
        info = {
            "phase": "vote",
            "eliminated": [out],
            "alive_after": next_spy.alive_players(),
        }
        actions = dict(sorted(ballots.items()))
    result = RoundResult(payoffs=(0,) * n, actions=actions, info=info)
    return replace(state, spy=next_spy), result


def outcome(state: GameState) -> MatchOutcome:
    """Terminal outcome; two-player scores always sum to exactly one."""
    if not state.is_terminal():
        raise IllegalMove("match still in progress")
    if isinstance(state, SpyGameState):
        winners = spy_rules.spy_check_win(state.spy)
        assert winners is not None
        n = len(state.spy.roles)
        scores = tuple(1.0 if i in winners else 0.0 for i in range(n))
        return MatchOutcome(
            scores=scores,
            payoffs=(0,) * n,
            winners=winners,
            info={"spy": state.spy.spy, "rounds_played": state.spy.round_no},
        )
    p0, p1 = state.payoffs
    if p0 > p1:
        scores = (1.0, 0.0)
    elif p1 > p0:
        scores = (0.0, 1.0)
    else:
        scores = (0.5, 0.5)
    return MatchOutcome(scores=scores, payoffs=(p0, p1))


def forfeit_outcome(state: GameState, offender: int, reason: str) -> MatchOutcome:
    """Two-player forfeit: the opponent scores a full win."""
    winner = 1 - offender
    scores = [0.0, 0.0]
    scores[winner] = 1.0
    return MatchOutcome(
        scores=tuple(scores),
        payoffs=state.payoffs,
        info={"forfeit": offender, "reason": reason},
    )
