"""Shared domain types for the five games: kinds, payoff tables, configs.

All state is value-semantic (frozen dataclasses and tuples) so matches can be
evaluated concurrently without sharing anything mutable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from gamearena.errors import ConfigError

MAX_SEED = 2**64 - 1


class GameKind(str, Enum):
    PRISONERS_DILEMMA = "prisoners_dilemma"
    TRUST_GAME = "trust_game"
    NIM = "nim"
    DICTATOR = "dictator"
    WHO_IS_SPY = "who_is_spy"


class BinaryAction(str, Enum):
    """Joint action space of the two matrix games.

    The trust game names defection "cheat" on the wire and in transcripts;
    internally both games share this enum.
    """

    COOPERATE = "cooperate"
    DEFECT = "defect"


def action_labels(game: GameKind) -> tuple[str, str]:
    """Wire labels for (COOPERATE, DEFECT) in the given matrix game."""
    if game == GameKind.TRUST_GAME:
        return ("cooperate", "cheat")
    return ("cooperate", "defect")


def binary_action_to_wire(game: GameKind, action: BinaryAction) -> str:
    labels = action_labels(game)
    return labels[0] if action == BinaryAction.COOPERATE else labels[1]


def binary_action_from_wire(game: GameKind, text: str) -> BinaryAction:
    labels = action_labels(game)
    lowered = text.strip().lower()
    if lowered == labels[0]:
        return BinaryAction.COOPERATE
    if lowered == labels[1]:
        return BinaryAction.DEFECT
    raise ValueError(f"not an action of {game.value}: {text!r}")


@dataclass(frozen=True)
class PdTable:
    """Prisoner's dilemma payoff matrix (temptation/reward/punishment/sucker)."""

    temptation: int = 5
    reward: int = 3
    punishment: int = 1
    sucker: int = 0

    def validate(self) -> None:
        t, r, p, s = self.temptation, self.reward, self.punishment, self.sucker
        if not (t > r > p > s):
            raise ConfigError(f"payoff ordering must satisfy T > R > P > S, got {(t, r, p, s)}")
        if not (2 * r > t + s):
            raise ConfigError(f"payoffs must satisfy 2R > T + S, got 2*{r} <= {t}+{s}")


@dataclass(frozen=True)
class TrustTable:
    """Trust game joint payoffs keyed by (player0, player1) choices.

    Defaults: mutual cooperation nets each invested coin doubled (+1); a lone
    cooperator loses the coin (-1) while the cheater pockets it doubled (+2);
    mutual cheating pays nothing.
    """

    both_cooperate: tuple[int, int] = (1, 1)
    coop_cheat: tuple[int, int] = (-1, 2)
    cheat_coop: tuple[int, int] = (2, -1)
    both_cheat: tuple[int, int] = (0, 0)

    def validate(self) -> None:
        if self.both_cheat != (0, 0):
            raise ConfigError(f"mutual cheating must pay (0, 0), got {self.both_cheat}")


@dataclass(frozen=True)
class PayoffTable:
    pd: PdTable = field(default_factory=PdTable)
    trust: TrustTable = field(default_factory=TrustTable)

    def validate(self) -> None:
        self.pd.validate()
        self.trust.validate()


ARITY = {
    GameKind.PRISONERS_DILEMMA: (2, 2),
    GameKind.TRUST_GAME: (2, 2),
    GameKind.NIM: (2, 2),
    GameKind.DICTATOR: (2, 2),
    GameKind.WHO_IS_SPY: (4, 6),
}

DEFAULT_ENDOWMENT = 100
DEFAULT_PILES = (3, 4, 5)
DEFAULT_WORDS = ("apple", "pear")
MULTI_ROUND_DEFAULT = 10


@dataclass(frozen=True)
class MatchConfig:
    game: GameKind
    rounds: int = 1
    player_count: int = 2
    payoff_table: PayoffTable = field(default_factory=PayoffTable)
    endowment: int = DEFAULT_ENDOWMENT
    initial_piles: tuple[int, ...] = DEFAULT_PILES
    word_pair: tuple[str, str] = DEFAULT_WORDS
    rng_seed: int = 0

    def validate(self) -> None:
        lo, hi = ARITY[self.game]
        if not (lo <= self.player_count <= hi):
            raise ConfigError(
                f"{self.game.value} takes {lo}-{hi} players, got {self.player_count}"
            )
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if not (0 <= self.rng_seed <= MAX_SEED):
            raise ConfigError(f"rng_seed must fit in 64 bits, got {self.rng_seed}")
        self.payoff_table.validate()
        if self.game == GameKind.NIM:
            if not self.initial_piles or any(p < 1 for p in self.initial_piles):
                raise ConfigError(f"all nim piles must be >= 1, got {self.initial_piles}")
        if self.game == GameKind.DICTATOR and self.endowment < 0:
            raise ConfigError(f"endowment must be non-negative, got {self.endowment}")
        if self.game == GameKind.WHO_IS_SPY:
            civ, spy = self.word_pair
            if civ.strip().lower() == spy.strip().lower():
                raise ConfigError("civilian and spy words must differ")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "game": self.game.value,
            "rounds": self.rounds,
            "player_count": self.player_count,
            "rng_seed": self.rng_seed,
        }
        if self.game in (GameKind.PRISONERS_DILEMMA, GameKind.TRUST_GAME):
            pd, tr = self.payoff_table.pd, self.payoff_table.trust
            out["payoffs"] = {
                "pd": [pd.temptation, pd.reward, pd.punishment, pd.sucker],
                "trust": [
                    list(tr.both_cooperate),
                    list(tr.coop_cheat),
                    list(tr.cheat_coop),
                    list(tr.both_cheat),
                ],
            }
        if self.game == GameKind.DICTATOR:
            out["endowment"] = self.endowment
        if self.game == GameKind.NIM:
            out["initial_piles"] = list(self.initial_piles)
        if self.game == GameKind.WHO_IS_SPY:
            out["word_pair"] = list(self.word_pair)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MatchConfig":
        game = GameKind(data["game"])
        table = PayoffTable()
        if "payoffs" in data:
            t, r, p, s = data["payoffs"]["pd"]
            trust_rows = [tuple(row) for row in data["payoffs"]["trust"]]
            table = PayoffTable(
                pd=PdTable(t, r, p, s),
                trust=TrustTable(*trust_rows),
            )
        cfg = cls(
            game=game,
            rounds=int(data.get("rounds", 1)),
            player_count=int(data.get("player_count", 2)),
            payoff_table=table,
            endowment=int(data.get("endowment", DEFAULT_ENDOWMENT)),
            initial_piles=tuple(data.get("initial_piles", DEFAULT_PILES)),
            word_pair=tuple(data.get("word_pair", DEFAULT_WORDS)),
            rng_seed=int(data.get("rng_seed", 0)),
        )
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class RoundResult:
    """Per-round outcome: one payoff and one recorded action per player."""

    payoffs: tuple[int, ...]
    actions: dict[int, Any]
    info: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class MatchOutcome:
    """Terminal result: game scores for rating plus raw cumulative payoffs.

    Two-player scores are {0, 0.5, 1} and sum to one; the spy game reports a
    winner set instead (scores mark winner-set membership).
    """

    scores: tuple[float, ...]
    payoffs: tuple[int, ...]
    winners: frozenset[int] | None = None
    info: dict[str, Any] = field(default_factory=dict)


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit sub-seed from arbitrary labeled parts (sha256-based)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
