"""Exception hierarchy shared across the arena.

Two failure families matter for scoring: a RuleViolation or AgentFault is
attributable to an agent and scored as a forfeit, while TransportLost is an
infrastructure failure that aborts the match with no rating effect.
"""

from __future__ import annotations


class ArenaError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ArenaError):
    """Invalid match or plan configuration."""


class RuleViolation(ArenaError):
    """An action that breaks the rules of the game being played."""

    def __init__(self, message: str, offender: int | None = None):
        super().__init__(message)
        self.offender = offender


class IllegalMove(RuleViolation):
    pass


class IllegalAllocation(RuleViolation):
    pass


class IllegalVote(RuleViolation):
    pass


class AgentFault(ArenaError):
    """Agent-attributable failure while answering an observation."""

    def __init__(self, message: str, offender: int | None = None):
        super().__init__(message)
        self.offender = offender


class TimeoutForfeit(AgentFault):
    """Decision arrived after (or never within) the observation deadline."""


class IllegalForfeit(AgentFault):
    """Remote agent answered with an action outside the legal set."""


class TransportLost(ArenaError):
    """Connection to a remote agent is gone; the match aborts, unrated."""


class RegistrationError(ArenaError):
    pass


class WaitingForPlayers(ArenaError):
    """Not enough eligible agents in the pool; ticket stays queued."""


class ProtocolError(ArenaError):
    """Malformed or out-of-contract wire traffic."""

    def __init__(self, message: str, code: str = "malformed", offset: int | None = None):
        super().__init__(message)
        self.code = code
        self.offset = offset


class IntegrityError(ArenaError):
    """Transcript is corrupt or does not replay to its recorded result."""


class DuplicateMatch(ArenaError):
    """A transcript for this match id already exists."""


class UnfinishedMatch(ArenaError):
    """Operation requires a finished match record."""


class UnregisteredAgent(ArenaError):
    pass


class PlanError(ArenaError):
    """Plan file failed validation; `location` points at the offending key."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
