"""Elo rating engine plus the point scheme for the multiplayer word game.

Each (game, round-mode) variant is an independent ladder ("track"): seven
Elo tracks for the two-player games and one cumulative point track for the
spy game. Ratings start at 1000 and move by at most K=32 per match.
"""

from __future__ import annotations

from dataclasses import dataclass

from gamearena.errors import UnfinishedMatch, UnregisteredAgent
from gamearena.games.types import GameKind

DRAW = 0.5


@dataclass(frozen=True)
class EloParams:
    k: float = 32.0
    scale: float = 400.0
    initial: float = 1000.0


DEFAULT_PARAMS = EloParams()


def expected_score(ra: float, rb: float, params: EloParams = DEFAULT_PARAMS) -> tuple[float, float]:
    """Logistic win expectancies; Ea + Eb == 1 up to float rounding."""
    ea = 1.0 / (1.0 + 10.0 ** ((rb - ra) / params.scale))
    eb = 1.0 / (1.0 + 10.0 ** ((ra - rb) / params.scale))
    return ea, eb


def elo_update(
    ra: float, rb: float, sa: float, params: EloParams = DEFAULT_PARAMS
) -> tuple[float, float]:
    """Move each rating by K times the gap between actual and expected score."""
    if sa not in (0.0, DRAW, 1.0):
        raise ValueError(f"score must be 0, 0.5 or 1, got {sa}")
    ea, eb = expected_score(ra, rb, params)
    sb = 1.0 - sa
    return ra + params.k * (sa - ea), rb + params.k * (sb - eb)


# ---------------------------------------------------------------------------
# tracks

TRACKS = (
    "who_is_spy",
    "pd_multi",
    "pd_single",
    "trust_multi",
    "trust_single",
    "nim",
    "dictator_multi",
    "dictator_single",
)

TRACK_TITLES = {
    "who_is_spy": "Who Is Spy",
    "pd_multi": "Prisoner's Dilemma (Multi)",
    "pd_single": "Prisoner's Dilemma (Single)",
    "trust_multi": "Trust Game (Multi)",
    "trust_single": "Trust Game (Single)",
    "nim": "Nim",
    "dictator_multi": "Dictator (Multi)",
    "dictator_single": "Dictator (Single)",
}

_TRACK_PREFIX = {
    GameKind.PRISONERS_DILEMMA: "pd",
    GameKind.TRUST_GAME: "trust",
    GameKind.DICTATOR: "dictator",
}


def track_for(game: GameKind, rounds: int) -> str:
    """Ladder key for a match: game plus single/multi round mode."""
    if game == GameKind.NIM:
        return "nim"
    if game == GameKind.WHO_IS_SPY:
        return "who_is_spy"
    return f"{_TRACK_PREFIX[game]}_{'multi' if rounds > 1 else 'single'}"


@dataclass
class Rating:
    value: float
    games_played: int = 0


@dataclass
class SpyScore:
    points: int = 0
    games_played: int = 0


def spy_points(record) -> dict[str, int]:
    """Point deltas for one finished spy match, derived from its transcript.

    Every player earns 2 points per vote phase they were still alive after;
    each civilian earns 10 when the team wins; a winning spy earns 30.
    """
    if record.config.game != GameKind.WHO_IS_SPY:
        raise UnfinishedMatch(f"not a spy match: {record.match_id}")
    if record.status != "finished" or record.outcome is None:
        raise UnfinishedMatch(f"match {record.match_id} did not finish")
    points = {agent: 0 for agent in record.participants}
    for rnd in record.rounds:
        if rnd.info.get("phase") != "vote":
            continue
        for player in rnd.info["alive_after"]:
            points[record.participants[player]] += 2
    winners = record.outcome.winners or frozenset()
    spy = record.outcome.info["spy"]
    for player in winners:
        points[record.participants[player]] += 30 if player == spy else 10
    return points


class Leaderboard:
    """Registration-ordered, per-track scores with a single serialized writer."""

    def __init__(self, params: EloParams = DEFAULT_PARAMS):
        self.params = params
        self.agents: list[str] = []
        self.tracks: dict[str, dict[str, Rating | SpyScore]] = {t: {} for t in TRACKS}

    def register(self, agent_id: str) -> None:
        if agent_id not in self.agents:
            self.agents.append(agent_id)

    def _elo_entry(self, track: str, agent_id: str) -> Rating:
        if agent_id not in self.agents:
            raise UnregisteredAgent(agent_id)
        entry = self.tracks[track].setdefault(agent_id, Rating(value=self.params.initial))
        assert isinstance(entry, Rating)
        return entry

    def _spy_entry(self, agent_id: str) -> SpyScore:
        if agent_id not in self.agents:
            raise UnregisteredAgent(agent_id)
        entry = self.tracks["who_is_spy"].setdefault(agent_id, SpyScore())
        assert isinstance(entry, SpyScore)
        return entry

    def apply_outcome(self, record) -> None:
        """Fold one finished match into its track; atomic per record."""
        if record.status != "finished" or record.outcome is None:
            raise UnfinishedMatch(f"match {record.match_id} did not finish")
        for agent in record.participants:
            if agent not in self.agents:
                raise UnregisteredAgent(agent)
        track = track_for(record.config.game, record.config.rounds)
        if record.config.game == GameKind.WHO_IS_SPY:
            for agent, delta in spy_points(record).items():
                entry = self._spy_entry(agent)
                entry.points += delta
                entry.games_played += 1
            return
        a, b = record.participants
        ra, rb = self._elo_entry(track, a), self._elo_entry(track, b)
        ra.value, rb.value = elo_update(
            ra.value, rb.value, record.outcome.scores[0], self.params
        )
        ra.games_played += 1
        rb.games_played += 1

    def value(self, track: str, agent_id: str) -> float | int | None:
        entry = self.tracks[track].get(agent_id)
        if entry is None:
            return None
        return entry.points if isinstance(entry, SpyScore) else entry.value

    def rows(self) -> list[tuple[str, dict[str, float | int | None]]]:
        """One row per registered agent in registration order."""
        return [
            (agent, {track: self.value(track, agent) for track in TRACKS})
            for agent in self.agents
        ]

    def standings(self, track: str) -> list[str]:
        """Agents that played the track, best first; ties keep registration order."""
        played = [a for a in self.agents if a in self.tracks[track]]
        return sorted(played, key=lambda a: -self.value(track, a))

    def same_scores(self, other: "Leaderboard") -> bool:
        """True when every track holds identical entries (order-insensitive)."""
        for track in TRACKS:
            mine, theirs = self.tracks[track], other.tracks[track]
            if set(mine) != set(theirs):
                return False
            for agent, entry in mine.items():
                peer = theirs[agent]
                if type(entry) is not type(peer):
                    return False
                if isinstance(entry, SpyScore):
                    if (entry.points, entry.games_played) != (peer.points, peer.games_played):
                        return False
                elif (entry.value, entry.games_played) != (peer.value, peer.games_played):
                    return False
        return True
