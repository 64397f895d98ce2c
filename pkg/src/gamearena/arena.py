"""Matchmaking and match execution: pair registered agents, drive games to
completion, and totalize rating updates so concurrent runs stay reproducible.

Every match is a single sequential loop over pure game-core transitions; the
only cross-match coordination is the worker pool and the single-writer
leaderboard, so the worker budget never changes any output.
"""

from __future__ import annotations

import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from gamearena.agents import (
    AgentMemory,
    Decision,
    Observation,
    StrategyKind,
    action_is_legal,
    decide,
    observation_digest,
    perceive,
    remember,
)
from gamearena.errors import (
    IllegalForfeit,
    RegistrationError,
    RuleViolation,
    TimeoutForfeit,
    TransportLost,
    WaitingForPlayers,
)
from gamearena.games.engine import (
    GameState,
    SpyGameState,
    actors,
    forfeit_outcome,
    game_step,
    init_state,
    outcome,
)
from gamearena.games.spy import SpyPhase
from gamearena.games.types import (
    GameKind,
    MatchConfig,
    MatchOutcome,
    MULTI_ROUND_DEFAULT,
    RoundResult,
    derive_seed,
)
from gamearena.rating import Leaderboard, track_for

log = logging.getLogger("gamearena.arena")

DEFAULT_DEADLINE_MS = 30_000


class ScriptedAgent:
    """In-process agent: a deterministic strategy behind the decide contract."""

    kind = "scripted"

    def __init__(self, strategy: StrategyKind):
        self.strategy = strategy

    def decide(self, obs: Observation, memory: AgentMemory, seed: int) -> Decision:
        return decide(self.strategy, obs, memory, seed)

    def notify_round(self, match_id: str, payload: dict[str, Any]) -> None:
        pass

    def notify_result(self, match_id: str, payload: dict[str, Any]) -> None:
        pass


@dataclass
class AgentRegistration:
    agent_id: str
    handler: Any
    supported_games: frozenset[GameKind]
    display_name: str = ""

    def __post_init__(self):
        if not self.display_name:
            self.display_name = self.agent_id

    @property
    def kind(self) -> str:
        return self.handler.kind


@dataclass
class MatchTicket:
    match_id: str
    config: MatchConfig
    participants: tuple[str, ...]
    state: str = "waiting"  # waiting -> running -> finished | aborted
    ts: int = 0


@dataclass(frozen=True)
class RoundRecord:
    index: int
    actions: dict[int, Any]
    payoffs: tuple[int, ...]
    digests: dict[int, str]
    rationales: dict[int, str] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)
    tags: tuple[str, ...] = ()


@dataclass
class MatchRecord:
    """Immutable transcript of one match, sufficient to replay it."""

    match_id: str
    config: MatchConfig
    participants: tuple[str, ...]
    rounds: tuple[RoundRecord, ...]
    outcome: MatchOutcome | None
    status: str  # finished | aborted
    ts: int = 0
    abort_reason: str | None = None

    @property
    def seed(self) -> int:
        return self.config.rng_seed

    def completion_key(self) -> tuple[int, str]:
        return (self.ts, self.match_id)


class Arena:
    """Owns the agent pool, runs matches, and serializes rating updates."""

    def __init__(self, deadline_ms: int = DEFAULT_DEADLINE_MS):
        self.deadline_ms = deadline_ms
        self.registry: dict[str, AgentRegistration] = {}
        self.board = Leaderboard()
        self._board_lock = threading.Lock()
        self._ticket_seq = itertools.count(1)

    # -- registration -----------------------------------------------------

    def register(self, registration: AgentRegistration) -> str:
        if registration.agent_id in self.registry:
            raise RegistrationError(f"agent id already taken: {registration.agent_id}")
        handshake_ok = getattr(registration.handler, "handshake_complete", True)
        if registration.kind == "remote" and not handshake_ok:
            raise RegistrationError(
                f"remote agent {registration.agent_id} has not completed the handshake"
            )
        self.registry[registration.agent_id] = registration
        with self._board_lock:
            self.board.register(registration.agent_id)
        return registration.agent_id

    def eligible(self, game: GameKind, pool: list[str] | None = None) -> list[str]:
        ids = pool if pool is not None else list(self.registry)
        return [a for a in ids if game in self.registry[a].supported_games]

    # -- matchmaking ------------------------------------------------------

    def matchmake(self, config: MatchConfig, pool: list[str] | None = None) -> MatchTicket:
        """Fill a ticket from the pool or raise WaitingForPlayers (queued, not fatal)."""
        candidates = self.eligible(config.game, pool)
        needed = config.player_count
        if len(candidates) < needed:
            raise WaitingForPlayers(
                f"{config.game.value} needs {needed} players, have {len(candidates)}"
            )
        seq = next(self._ticket_seq)
        track = track_for(config.game, config.rounds)
        return MatchTicket(
            match_id=f"live{seq:05d}-{track}",
            config=config,
            participants=tuple(candidates[:needed]),
            ts=seq,
        )

    # -- match execution --------------------------------------------------

    def run_match(self, ticket: MatchTicket) -> MatchRecord:
        """Drive one match to termination under the forfeit/abort policy."""
        if ticket.state != "waiting":
            raise RuleViolation(f"ticket {ticket.match_id} is {ticket.state}, not waiting")
        ticket.state = "running"
        config = ticket.config
        handlers = [self.registry[a].handler for a in ticket.participants]
        memories = [AgentMemory(player=i) for i in range(len(handlers))]
        state: GameState = init_state(config)
        rounds: list[RoundRecord] = []
        final: MatchOutcome | None = None
        status = "finished"
        abort_reason: str | None = None

        try:
            while not state.is_terminal():
                acting = actors(state)
                observations: dict[int, Observation] = {}
                decisions: dict[int, Decision] = {}
                faults: dict[int, str] = {}
                for player in acting:
                    obs = perceive(state, player, memories[player], deadline_ms=self.deadline_ms)
                    observations[player] = obs
                    try:
                        decision = handlers[player].decide(
                            obs, memories[player], derive_seed(config.rng_seed, "agent", player)
                        )
                        if not action_is_legal(obs, decision.action):
                            raise IllegalForfeit(
                                f"action outside the legal set: {decision.action!r}",
                                offender=player,
                            )
                        decisions[player] = decision
                    except (TimeoutForfeit, IllegalForfeit) as fault:
                        faults[player] = type(fault).__name__

                if faults and not isinstance(state, SpyGameState):
                    offender = min(faults)
                    final = forfeit_outcome(state, offender, faults[offender])
                    break
                if faults and isinstance(state, SpyGameState):
                    # a silent describer says nothing; a bad ballot abstains
                    if state.spy.phase == SpyPhase.DESCRIBE:
                        for player in faults:
                            decisions[player] = Decision("")
                    # vote phase: simply omit the faulted ballots

                joint = {p: d.action for p, d in decisions.items()}
                try:
                    state, result = self._step(state, joint)
                except RuleViolation as violation:
                    if config.player_count != 2:
                        raise
                    offender = violation.offender if violation.offender is not None else acting[0]
                    final = forfeit_outcome(state, offender, type(violation).__name__)
                    break
                rounds.append(
                    RoundRecord(
                        index=len(rounds) + 1,
                        actions=result.actions,
                        payoffs=result.payoffs,
                        digests={p: observation_digest(o) for p, o in observations.items()},
                        rationales={
                            p: d.rationale for p, d in decisions.items() if d.rationale
                        },
                        info=result.info,
                    )
                )
                self._notify_round(ticket, handlers, rounds[-1])
                for player in range(config.player_count):
                    memories[player] = remember(memories[player], result)
            if final is None:
                final = outcome(state)
        except TransportLost as lost:
            status = "aborted"
            abort_reason = str(lost) or "transport lost"
            final = None
        ticket.state = status
        record = MatchRecord(
            match_id=ticket.match_id,
            config=config,
            participants=ticket.participants,
            rounds=tuple(rounds),
            outcome=final,
            status=status,
            ts=ticket.ts,
            abort_reason=abort_reason,
        )
        self._notify_result(record, handlers)
        return record

    def _step(self, state: GameState, joint: dict[int, Any]) -> tuple[GameState, RoundResult]:
        """Apply a step; an engine-level violation falls back to the fault policy."""
        try:
            return game_step(state, joint)
        except RuleViolation as violation:
            if (
                isinstance(state, SpyGameState)
                and state.spy.phase == SpyPhase.VOTE
                and violation.offender is not None
                and violation.offender in joint
            ):
                trimmed = {p: a for p, a in joint.items() if p != violation.offender}
                return self._step(state, trimmed)
            raise

    def _notify_round(self, ticket: MatchTicket, handlers, record: RoundRecord) -> None:
        payload = {
            "index": record.index,
            "actions": {str(p): a for p, a in record.actions.items()},
            "payoffs": list(record.payoffs),
        }
        for handler in handlers:
            handler.notify_round(ticket.match_id, payload)

    def _notify_result(self, record: MatchRecord, handlers) -> None:
        payload = {"status": record.status}
        if record.outcome is not None:
            payload["scores"] = list(record.outcome.scores)
            payload["payoffs"] = list(record.outcome.payoffs)
        for handler in handlers:
            handler.notify_result(record.match_id, payload)

    # -- rating -----------------------------------------------------------

    def apply_records(self, records: list[MatchRecord]) -> list[MatchRecord]:
        """Apply finished records in (ts, match_id) order; aborted ones are skipped."""
        ordered = sorted(records, key=MatchRecord.completion_key)
        with self._board_lock:
            for record in ordered:
                if record.status != "finished":
                    log.warning("match %s aborted (%s); not rated", record.match_id, record.abort_reason)
                    continue
                self.board.apply_outcome(record)
        return ordered


# ---------------------------------------------------------------------------
# tournaments


@dataclass(frozen=True)
class PlanAgent:
    agent_id: str
    strategy: StrategyKind | None = None  # None marks a remote seat
    display_name: str = ""
    games: frozenset[GameKind] | None = None

    def supported(self) -> frozenset[GameKind]:
        if self.games is not None:
            return self.games
        if self.strategy is None:
            return frozenset(GameKind)
        from gamearena.agents import STRATEGY_GAMES

        return frozenset(STRATEGY_GAMES[self.strategy])


@dataclass(frozen=True)
class PlanGame:
    game: GameKind
    variant: str = "single"  # single | multi
    repetitions: int = 1
    rounds: int | None = None
    endowment: int | None = None
    piles: tuple[int, ...] | None = None
    words: tuple[str, str] | None = None

    def resolved_rounds(self) -> int:
        if self.rounds is not None:
            return self.rounds
        return MULTI_ROUND_DEFAULT if self.variant == "multi" else 1


@dataclass(frozen=True)
class TournamentPlan:
    agents: tuple[PlanAgent, ...]
    games: tuple[PlanGame, ...]
    seed: int = 0
    workers: int = 1
    deadline_ms: int = DEFAULT_DEADLINE_MS


def build_config(entry: PlanGame, participants: tuple[str, ...], seed: int) -> MatchConfig:
    kwargs: dict[str, Any] = {}
    if entry.endowment is not None:
        kwargs["endowment"] = entry.endowment
    if entry.piles is not None:
        kwargs["initial_piles"] = entry.piles
    if entry.words is not None:
        kwargs["word_pair"] = entry.words
    return MatchConfig(
        game=entry.game,
        rounds=entry.resolved_rounds(),
        player_count=len(participants),
        rng_seed=seed,
        **kwargs,
    )


def schedule(arena: Arena, plan: TournamentPlan) -> list[MatchTicket]:
    """Deterministic round-robin schedule; per-match seeds derive from the
    master seed, the variant, the pairing, and the repetition index."""
    tickets: list[MatchTicket] = []
    idx = 0
    for entry in plan.games:
        eligible = arena.eligible(entry.game)
        track = track_for(entry.game, entry.resolved_rounds())
        if entry.game == GameKind.WHO_IS_SPY:
            if len(eligible) < 4:
                log.warning(
                    "skipping %s: %d eligible agents, need at least 4", track, len(eligible)
                )
                continue
            seatings = [tuple(eligible[:6])]
        else:
            if len(eligible) < 2:
                log.warning(
                    "skipping %s: %d eligible agents, need at least 2", track, len(eligible)
                )
                continue
            seatings = [tuple(pair) for pair in itertools.combinations(eligible, 2)]
        for rep in range(entry.repetitions):
            for seats in seatings:
                idx += 1
                seed = derive_seed(plan.seed, entry.game.value, entry.variant, rep, *seats)
                tickets.append(
                    MatchTicket(
                        match_id=f"m{idx:05d}-{track}",
                        config=build_config(entry, seats, seed),
                        participants=seats,
                        ts=idx,
                    )
                )
    return tickets


def run_tournament(
    arena: Arena, plan: TournamentPlan
) -> tuple[list[MatchRecord], Leaderboard, list[dict[str, Any]]]:
    """Run every scheduled match (up to plan.workers in parallel) and fold the
    results into the leaderboard in totalized order. Bit-reproducible for
    scripted agents regardless of the worker budget."""
    for agent in plan.agents:
        if agent.agent_id in arena.registry:
            continue  # remote agents may already be connected under this id
        if agent.strategy is None:
            raise RegistrationError(
                f"remote agent {agent.agent_id} is not connected"
            )
        arena.register(
            AgentRegistration(
                agent_id=agent.agent_id,
                handler=ScriptedAgent(agent.strategy),
                supported_games=agent.supported(),
                display_name=agent.display_name or agent.agent_id,
            )
        )
    tickets = schedule(arena, plan)
    workers = max(1, plan.workers)
    if workers == 1:
        records = [arena.run_match(t) for t in tickets]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(arena.run_match, tickets))
    ordered = arena.apply_records(records)
    events: list[dict[str, Any]] = []
    for record in ordered:
        events.append(
            {
                "event": "match_scheduled",
                "match_id": record.match_id,
                "ts": record.ts,
                "game": record.config.game.value,
                "participants": list(record.participants),
            }
        )
        events.append(
            {
                "event": "match_finished" if record.status == "finished" else "match_aborted",
                "match_id": record.match_id,
                "ts": record.ts,
                "rounds": len(record.rounds),
                "rated": record.status == "finished",
            }
        )
    return ordered, arena.board, events
