"""Nim under the normal play convention: taking the last stone wins."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from gamearena.errors import IllegalMove


class NimMove(NamedTuple):
    pile_index: int
    take: int


@dataclass(frozen=True)
class NimState:
    piles: tuple[int, ...]
    to_move: int = 0

    def is_terminal(self) -> bool:
        return all(p == 0 for p in self.piles)


def nim_sum(piles) -> int:
    """Bitwise XOR fold of the pile sizes; zero iff the mover is losing."""
    total = 0
    for p in piles:
        total ^= p
    return total


def nim_legal_moves(state: NimState) -> list[NimMove]:
    """All legal moves, ordered by pile index then take count."""
    moves = []
    for i, pile in enumerate(state.piles):
        for take in range(1, pile + 1):
            moves.append(NimMove(i, take))
    return moves


def nim_apply(state: NimState, move: NimMove) -> NimState:
    if not (0 <= move.pile_index < len(state.piles)):
        raise IllegalMove(f"no pile {move.pile_index}", offender=state.to_move)
    pile = state.piles[move.pile_index]
    if not (1 <= move.take <= pile):
        raise IllegalMove(
            f"cannot take {move.take} from pile of {pile}", offender=state.to_move
        )
    piles = list(state.piles)
    piles[move.pile_index] -= move.take
    return NimState(piles=tuple(piles), to_move=1 - state.to_move)


def nim_winner(state: NimState) -> int | None:
    """In a terminal state the player who just moved (not to_move) won."""
    if state.is_terminal():
        return 1 - state.to_move
    return None


def nim_optimal_move(state: NimState) -> NimMove:
    """A move to a zero nim-sum position when one exists.

    From a zero position every move loses against optimal play, so the
    fallback is fixed: take one stone from the first non-empty pile.
    """
    if state.is_terminal():
        raise IllegalMove("no moves in a terminal position", offender=state.to_move)
    target = nim_sum(state.piles)
    if target != 0:
        for i, pile in enumerate(state.piles):
            # x ^ s < x exactly when reducing pile i can zero the nim-sum
            reduced = pile ^ target
            if reduced < pile:
                return NimMove(i, pile - reduced)
    for i, pile in enumerate(state.piles):
        if pile > 0:
            return NimMove(i, 1)
    raise AssertionError("unreachable: non-terminal state has a non-empty pile")
