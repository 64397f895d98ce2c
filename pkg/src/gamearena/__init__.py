"""Multi-agent game-theory arena.

Five classic games, a zoo of deterministic scripted strategies, remote
agents over a newline-delimited JSON protocol, Elo-based leaderboards, and
replayable match transcripts.
"""

__version__ = "0.1.0"
