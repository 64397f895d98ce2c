"""Deterministic rules and payoff logic for the five games."""

from gamearena.games.engine import (
    DictatorGameState,
    GameState,
    MatrixGameState,
    NimGameState,
    SpyGameState,
    actors,
    forfeit_outcome,
    game_step,
    init_state,
    outcome,
)
from gamearena.games.nim import (
    NimMove,
    NimState,
    nim_apply,
    nim_legal_moves,
    nim_optimal_move,
    nim_sum,
    nim_winner,
)
from gamearena.games.payoffs import dictator_settle, pd_payoff, trust_payoff
from gamearena.games.spy import (
    Role,
    SpyPhase,
    SpyState,
    spy_check_win,
    spy_init,
    spy_tally_votes,
)
from gamearena.games.types import (
    BinaryAction,
    GameKind,
    MatchConfig,
    MatchOutcome,
    PayoffTable,
    PdTable,
    RoundResult,
    TrustTable,
    action_labels,
    binary_action_from_wire,
    binary_action_to_wire,
    derive_seed,
)

__all__ = [
    "BinaryAction",
    "DictatorGameState",
    "GameKind",
    "GameState",
    "MatchConfig",
    "MatchOutcome",
    "MatrixGameState",
    "NimGameState",
    "NimMove",
    "NimState",
    "PayoffTable",
    "PdTable",
    "Role",
    "RoundResult",
    "SpyGameState",
    "SpyPhase",
    "SpyState",
    "TrustTable",
    "action_labels",
    "actors",
    "binary_action_from_wire",
    "binary_action_to_wire",
    "derive_seed",
    "dictator_settle",
    "forfeit_outcome",
    "game_step",
    "init_state",
    "nim_apply",
    "nim_legal_moves",
    "nim_optimal_move",
    "nim_sum",
    "nim_winner",
    "outcome",
    "pd_payoff",
    "spy_check_win",
    "spy_init",
    "spy_tally_votes",
    "trust_payoff",
]
