"""Payoff functions for the one-shot decisions: matrix games and dictator."""

from __future__ import annotations

from gamearena.errors import IllegalAllocation
from gamearena.games.types import BinaryAction, PdTable, TrustTable

DEFAULT_PD = PdTable()
DEFAULT_TRUST = TrustTable()

C = BinaryAction.COOPERATE
D = BinaryAction.DEFECT


def pd_payoff(a1: BinaryAction, a2: BinaryAction, table: PdTable = DEFAULT_PD) -> tuple[int, int]:
    """Joint prisoner's dilemma payoff; symmetric under swapping the players."""
    if a1 == C and a2 == C:
        return (table.reward, table.reward)
    if a1 == C and a2 == D:
        return (table.sucker, table.temptation)
    if a1 == D and a2 == C:
        return (table.temptation, table.sucker)
    return (table.punishment, table.punishment)


def trust_payoff(a1: BinaryAction, a2: BinaryAction, table: TrustTable = DEFAULT_TRUST) -> tuple[int, int]:
    """Joint trust-game payoff; mutual cheating always nets (0, 0)."""
    if a1 == C and a2 == C:
        return table.both_cooperate
    if a1 == C and a2 == D:
        return table.coop_cheat
    if a1 == D and a2 == C:
        return table.cheat_coop
    return table.both_cheat


def dictator_settle(endowment: int, keep: int) -> tuple[int, int]:
    """Split the endowment: the dictator keeps `keep`, the receiver gets the rest.

    Over-allocation is rejected, not clamped; the arena turns the rejection
    into a forfeit.
    """
    if not (0 <= keep <= endowment):
        raise IllegalAllocation(f"keep must be in [0, {endowment}], got {keep}", offender=None)
    return (keep, endowment - keep)
