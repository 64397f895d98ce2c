"""Durable persistence: one self-contained transcript file per match, a
global ordered index, and leaderboard exports.

Transcript files are newline-delimited JSON (a header line, one line per
round, and a footer), written atomically via temp file and rename, so a file
on disk is always either absent or complete. Replaying a transcript
re-executes the recorded actions through the game engine and cross-checks
every payoff. Format reference: docs/TRANSCRIPTS.md.
"""

from __future__ import annotations

import io
import json
import os
from pathlib import Path
from typing import Any

from gamearena.arena import MatchRecord, RoundRecord
from gamearena.errors import DuplicateMatch, IntegrityError
from gamearena.games.engine import game_step, init_state, outcome as engine_outcome
from gamearena.games.nim import NimMove
from gamearena.games.types import (
    GameKind,
    MatchConfig,
    MatchOutcome,
    binary_action_from_wire,
)
from gamearena.rating import TRACK_TITLES, TRACKS, Leaderboard

BEHAVIOR_TAGS = ("trust", "confrontation", "pretense", "leadership", "deception")

INDEX_FILE = "index.ndjson"


def _dump(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def transcript_lines(record: MatchRecord) -> list[str]:
    header = {
        "kind": "header",
        "match_id": record.match_id,
        "config": record.config.to_dict(),
        "seed": record.seed,
        "participants": list(record.participants),
        "ts": record.ts,
    }
    lines = [_dump(header)]
    for rnd in record.rounds:
        lines.append(
            _dump(
                {
                    "kind": "round",
                    "index": rnd.index,
                    "actions": {str(p): a for p, a in rnd.actions.items()},
                    "payoffs": list(rnd.payoffs),
                    "digests": {str(p): d for p, d in rnd.digests.items()},
                    "rationales": {str(p): r for p, r in rnd.rationales.items()},
                    "info": rnd.info,
                    "tags": list(rnd.tags),
                }
            )
        )
    footer: dict[str, Any] = {"kind": "footer", "status": record.status, "ts": record.ts}
    if record.abort_reason:
        footer["abort_reason"] = record.abort_reason
    if record.outcome is not None:
        footer["outcome"] = {
            "scores": list(record.outcome.scores),
            "payoffs": list(record.outcome.payoffs),
            "winners": sorted(record.outcome.winners) if record.outcome.winners is not None else None,
            "info": record.outcome.info,
        }
    lines.append(_dump(footer))
    return lines


def transcript_path(out_dir: str | Path, match_id: str) -> Path:
    return Path(out_dir) / "transcripts" / f"{match_id}.ndjson"


def append_transcript(record: MatchRecord, out_dir: str | Path) -> Path:
    """Write one match transcript; duplicate match ids are rejected."""
    path = transcript_path(out_dir, record.match_id)
    if path.exists():
        raise DuplicateMatch(f"transcript already written: {record.match_id}")
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, "\n".join(transcript_lines(record)) + "\n")
    _append_index(Path(out_dir), record)
    return path


def _append_index(out_dir: Path, record: MatchRecord) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    entry = {
        "match_id": record.match_id,
        "ts": record.ts,
        "status": record.status,
        "game": record.config.game.value,
        "participants": list(record.participants),
    }
    with open(out_dir / INDEX_FILE, "a", encoding="utf-8") as fh:
        fh.write(_dump(entry) + "\n")


def read_index(out_dir: str | Path) -> list[dict[str, Any]]:
    path = Path(out_dir) / INDEX_FILE
    if not path.exists():
        return []
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entries.append(json.loads(line))
    return entries


# ---------------------------------------------------------------------------
# reading transcripts back


def _wire_to_action(game: GameKind, phase: str | None, value: Any):
    if game in (GameKind.PRISONERS_DILEMMA, GameKind.TRUST_GAME):
        return binary_action_from_wire(game, str(value))
    if game == GameKind.NIM:
        return NimMove(int(value[0]), int(value[1]))
    if game == GameKind.DICTATOR:
        return int(value)
    if phase == "vote":
        return int(value)
    return str(value)


def load_transcript(path: str | Path) -> MatchRecord:
    """Parse a transcript file without verifying it."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IntegrityError(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"{path}:{lineno}: bad JSON: {exc.msg}") from exc
    if len(records) < 2:
        raise IntegrityError(f"{path}: transcript needs a header and a footer")
    header, *rounds, footer = records
    if header.get("kind") != "header" or footer.get("kind") != "footer":
        raise IntegrityError(f"{path}: header or footer missing")
    try:
        config = MatchConfig.from_dict(header["config"])
        round_records = []
        for i, rnd in enumerate(rounds, start=1):
            if rnd.get("kind") != "round" or rnd.get("index") != i:
                raise IntegrityError(f"{path}: rounds out of order at #{i}")
            round_records.append(
                RoundRecord(
                    index=rnd["index"],
                    actions={int(p): a for p, a in rnd["actions"].items()},
                    payoffs=tuple(rnd["payoffs"]),
                    digests={int(p): d for p, d in rnd.get("digests", {}).items()},
                    rationales={int(p): r for p, r in rnd.get("rationales", {}).items()},
                    info=rnd.get("info", {}),
                    tags=tuple(rnd.get("tags", ())),
                )
            )
        out = None
        if "outcome" in footer:
            data = footer["outcome"]
            winners = data.get("winners")
            out = MatchOutcome(
                scores=tuple(data["scores"]),
                payoffs=tuple(data["payoffs"]),
                winners=frozenset(winners) if winners is not None else None,
                info=data.get("info", {}),
            )
        return MatchRecord(
            match_id=header["match_id"],
            config=config,
            participants=tuple(header["participants"]),
            rounds=tuple(round_records),
            outcome=out,
            status=footer["status"],
            ts=header.get("ts", 0),
            abort_reason=footer.get("abort_reason"),
        )
    except IntegrityError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"{path}: malformed transcript: {exc}") from exc


def replay(path: str | Path) -> MatchRecord:
    """Load a transcript and re-execute it; any divergence is an IntegrityError."""
    record = load_transcript(path)
    verify_record(record, source=str(path))
    return record


def verify_record(record: MatchRecord, source: str = "") -> None:
    """Re-run the recorded actions through the engine and compare payoffs."""
    label = source or record.match_id
    state = init_state(record.config)
    game = record.config.game
    for rnd in record.rounds:
        phase = rnd.info.get("phase")
        try:
            joint = {p: _wire_to_action(game, phase, a) for p, a in rnd.actions.items()}
            state, result = game_step(state, joint)
        except Exception as exc:
            raise IntegrityError(f"{label}: round {rnd.index} does not replay: {exc}") from exc
        if result.payoffs != rnd.payoffs:
            raise IntegrityError(
                f"{label}: round {rnd.index} payoffs {list(rnd.payoffs)} "
                f"recompute to {list(result.payoffs)}"
            )
        if result.info.get("phase") != phase or (
            phase == "vote" and result.info.get("eliminated") != rnd.info.get("eliminated")
        ):
            raise IntegrityError(f"{label}: round {rnd.index} diverges from the rules")
    if record.status != "finished":
        return
    if record.outcome is None:
        raise IntegrityError(f"{label}: finished match without an outcome")
    if "forfeit" in record.outcome.info:
        # play stopped early; check the totals instead of re-deriving the end
        totals = [0] * record.config.player_count
        for rnd in record.rounds:
            for i, p in enumerate(rnd.payoffs):
                totals[i] += p
        if tuple(totals) != record.outcome.payoffs:
            raise IntegrityError(f"{label}: forfeit totals do not match the rounds")
        return
    if not state.is_terminal():
        raise IntegrityError(f"{label}: recorded rounds do not reach a terminal state")
    recomputed = engine_outcome(state)
    if (
        recomputed.scores != record.outcome.scores
        or recomputed.payoffs != record.outcome.payoffs
        or recomputed.winners != record.outcome.winners
    ):
        raise IntegrityError(f"{label}: outcome does not match the replayed match")


def rebuild_leaderboard(out_dir: str | Path, upto: int | None = None) -> Leaderboard:
    """Reconstruct the leaderboard from the index + transcripts on disk.

    With `upto`, only the first `upto` index entries are applied: a snapshot
    as of that match-log position, reproducible from the prefix it names.
    """
    board = Leaderboard()
    entries = sorted(read_index(out_dir), key=lambda e: (e["ts"], e["match_id"]))
    if upto is not None:
        entries = entries[:upto]
    for entry in entries:
        for agent in entry["participants"]:
            board.register(agent)
        if entry["status"] != "finished":
            continue
        record = load_transcript(transcript_path(out_dir, entry["match_id"]))
        board.apply_outcome(record)
    return board


# ---------------------------------------------------------------------------
# annotation


def annotate(path: str | Path, round_index: int, tag: str) -> None:
    """Append one behavior tag to a round record; everything else is untouched."""
    if tag not in BEHAVIOR_TAGS:
        raise ValueError(f"tag must be one of {', '.join(BEHAVIOR_TAGS)}; got {tag!r}")
    path = Path(path)
    record = load_transcript(path)  # validates shape before we touch the file
    if not (1 <= round_index <= len(record.rounds)):
        raise ValueError(f"no round {round_index} in {path.name}")
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    target = 1 + (round_index - 1)  # header is line 0
    body = json.loads(lines[target])
    body.setdefault("tags", []).append(tag)
    lines[target] = _dump(body)
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# leaderboard export


def _format_cell(value: float | int | None) -> str:
    if value is None:
        return "-"
    if isinstance(value, int):
        return str(value)
    return f"{value:.2f}"


def export_leaderboard(board: Leaderboard, fmt: str) -> str:
    """Render agents × game-variant tracks; unplayed tracks show as "-"."""
    rows = board.rows()
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("agent," + ",".join(TRACKS) + "\n")
        for agent, values in rows:
            buf.write(agent + "," + ",".join(_format_cell(values[t]) for t in TRACKS) + "\n")
        return buf.getvalue()
    if fmt == "markdown":
        head = "| Agent | " + " | ".join(TRACK_TITLES[t] for t in TRACKS) + " |"
        sep = "|" + "---|" * (len(TRACKS) + 1)
        lines = [head, sep]
        for agent, values in rows:
            lines.append(
                "| " + agent + " | " + " | ".join(_format_cell(values[t]) for t in TRACKS) + " |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown leaderboard format: {fmt!r}")


def write_summary(records, board: Leaderboard, plan, out_dir: str | Path) -> Path:
    """One-page run summary: counts, configuration, and per-track leaders."""
    finished = [r for r in records if r.status == "finished"]
    leaders = {}
    for track in TRACKS:
        standings = board.standings(track)
        if standings:
            leaders[track] = {"agent": standings[0], "value": board.value(track, standings[0])}
    summary = {
        "matches_scheduled": len(records),
        "matches_finished": len(finished),
        "matches_aborted": len(records) - len(finished),
        "seed": plan.seed,
        "workers": plan.workers,
        "agents": [a.agent_id for a in plan.agents],
        "games": [
            {"game": g.game.value, "variant": g.variant, "repetitions": g.repetitions}
            for g in plan.games
        ],
        "leaders": leaders,
    }
    path = Path(out_dir) / "summary.json"
    _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def export_files(board: Leaderboard, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "leaderboard.csv", export_leaderboard(board, "csv"))
    _atomic_write(out / "leaderboard.md", export_leaderboard(board, "markdown"))


def write_outputs(
    records: list[MatchRecord],
    board: Leaderboard,
    events: list[dict[str, Any]],
    out_dir: str | Path,
) -> None:
    """Persist a finished tournament: transcripts, index, events, exports."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for record in records:
        append_transcript(record, out)
    with open(out / "events.ndjson", "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(_dump(event) + "\n")
    export_files(board, out)
