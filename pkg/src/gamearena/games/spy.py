"""Hidden-role word game: describe, vote, eliminate, until one side wins.

Players never learn their own role; they only hold a word. Exactly one
player (the spy) holds a different word from everyone else.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum

from gamearena.errors import ConfigError, IllegalVote
from gamearena.games.types import GameKind, MatchConfig


class Role(str, Enum):
    CIVILIAN = "civilian"
    SPY = "spy"


class SpyPhase(str, Enum):
    DESCRIBE = "describe"
    VOTE = "vote"
    FINISHED = "finished"


# Spy wins by surviving until too few civilians remain to out-vote them.
SPY_WIN_CIVILIAN_COUNT = 2


@dataclass(frozen=True)
class SpyState:
    roles: tuple[Role, ...]
    words: tuple[str, ...]
    alive: tuple[bool, ...]
    phase: SpyPhase = SpyPhase.DESCRIBE
    round_no: int = 1
    descriptions: tuple[tuple[int, int, str], ...] = ()  # (round, player, text)
    votes: tuple[tuple[int, int, int], ...] = ()  # (round, voter, target)

    @property
    def spy(self) -> int:
        return self.roles.index(Role.SPY)

    def alive_players(self) -> list[int]:
        return [i for i, a in enumerate(self.alive) if a]


def spy_init(config: MatchConfig, seed: int) -> SpyState:
    """Deal words: one uniformly seeded spy, everyone else civilian."""
    if config.game != GameKind.WHO_IS_SPY:
        raise ConfigError(f"not a spy config: {config.game.value}")
    config.validate()
    n = config.player_count
    spy = random.Random(seed).randrange(n)
    civilian_word, spy_word = config.word_pair
    roles = tuple(Role.SPY if i == spy else Role.CIVILIAN for i in range(n))
    words = tuple(spy_word if i == spy else civilian_word for i in range(n))
    return SpyState(roles=roles, words=words, alive=(True,) * n)


def spy_tally_votes(
    votes: list[tuple[int, int]], alive: tuple[bool, ...], require_all: bool = False
) -> int:
    """Plurality elimination; ties (including zero votes) go to the lowest index.

    Each vote must come from a living player and target a different living
    player. With require_all every living player must have voted; the arena
    instead drops illegal or missing votes as abstentions before tallying.
    """
    seen_voters: set[int] = set()
    for voter, target in votes:
        if not (0 <= voter < len(alive)) or not alive[voter]:
            raise IllegalVote(f"vote by dead or unknown player {voter}", offender=voter)
        if not (0 <= target < len(alive)) or not alive[target]:
            raise IllegalVote(f"vote for dead or unknown player {target}", offender=voter)
        if voter == target:
            raise IllegalVote(f"player {voter} voted for themselves", offender=voter)
        if voter in seen_voters:
            raise IllegalVote(f"player {voter} voted twice", offender=voter)
        seen_voters.add(voter)
    if require_all:
        for i, living in enumerate(alive):
            if living and i not in seen_voters:
                raise IllegalVote(f"player {i} did not vote", offender=i)

    counts = Counter(target for _, target in votes)
    candidates = [i for i, a in enumerate(alive) if a]
    best = max(counts[c] for c in candidates) if candidates else 0
    for c in candidates:
        if counts[c] == best:
            return c
    raise IllegalVote("no living player to eliminate")


def spy_check_win(state: SpyState) -> frozenset[int] | None:
    """Winner set, or None while the game continues.

    Civilians win as a team (all of them, eliminated ones included) the
    moment the spy is out; the spy wins once at most two civilians survive.
    """
    spy = state.spy
    if not state.alive[spy]:
        return frozenset(i for i, r in enumerate(state.roles) if r == Role.CIVILIAN)
    alive_civilians = sum(
        1 for i, r in enumerate(state.roles) if r == Role.CIVILIAN and state.alive[i]
    )
    if alive_civilians <= SPY_WIN_CIVILIAN_COUNT:
        return frozenset({spy})
    return None


def apply_descriptions(state: SpyState, texts: dict[int, str]) -> tuple[SpyState, list[int]]:
    """Record one description per living player and move to the vote phase.

    Uttering your own word verbatim (case-insensitive) is self-exposure and
    eliminates you on the spot. Returns the new state and the eliminated
    players.
    """
    recorded = list(state.descriptions)
    alive = list(state.alive)
    eliminated: list[int] = []
    for player in state.alive_players():
        text = texts.get(player, "")
        recorded.append((state.round_no, player, text))
        if text.strip().lower() == state.words[player].strip().lower():
            alive[player] = False
            eliminated.append(player)

    next_state = replace(
        state,
        descriptions=tuple(recorded),
        alive=tuple(alive),
        phase=SpyPhase.VOTE,
    )
    if spy_check_win(next_state) is not None:
        next_state = replace(next_state, phase=SpyPhase.FINISHED)
    return next_state, eliminated


def apply_votes(state: SpyState, ballots: dict[int, int]) -> tuple[SpyState, int]:
    """Tally one vote phase; returns the new state and the eliminated player.

    `ballots` may omit abstaining players; every present ballot must be legal
    (spy_tally_votes raises IllegalVote otherwise).
    """
    votes = sorted(ballots.items())
    out = spy_tally_votes(votes, state.alive)
    alive = list(state.alive)
    alive[out] = False
    recorded = state.votes + tuple((state.round_no, voter, target) for voter, target in votes)
    next_state = replace(state, alive=tuple(alive), votes=recorded)
    if spy_check_win(next_state) is not None:
        next_state = replace(next_state, phase=SpyPhase.FINISHED)
    else:
        next_state = replace(
            next_state, phase=SpyPhase.DESCRIBE, round_no=state.round_no + 1
        )
    return next_state, out
