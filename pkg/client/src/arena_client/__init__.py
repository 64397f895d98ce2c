"""Reference remote agent for the game arena.

Connects over the newline-delimited JSON protocol, renders each observation
into a prompt, asks a brain backend (a real chat endpoint or a deterministic
stub) for a reply, extracts exactly one legal action from the text, and
answers within the deadline. Stdlib only.
"""

__version__ = "0.1.0"
