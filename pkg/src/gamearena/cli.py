"""Operator entry point: serve the arena, run plan-file tournaments, replay
and annotate transcripts.

Exit codes: 0 ok, 1 usage or config problem, 2 environment problem
(e.g. port in use), 3 transcript integrity failure. Settings resolve as
flag > environment variable > plan file > default.
"""

from __future__ import annotations

import logging
import os
import signal
import sys
from pathlib import Path

import click

from gamearena import storage
from gamearena.arena import Arena, run_tournament
from gamearena.errors import IntegrityError, PlanError
from gamearena.plan import load_plan
from gamearena.server import ArenaServer

log = logging.getLogger("gamearena.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENVIRONMENT = 2
EXIT_INTEGRITY = 3

ENV_PREFIX = "GAMEARENA_"


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _resolve(flag, env_name: str, plan_value, default, cast=str):
    """flag > environment > plan > default."""
    if flag is not None:
        return flag
    env_value = _env(env_name)
    if env_value is not None:
        try:
            return cast(env_value)
        except ValueError:
            raise click.ClickException(f"bad {ENV_PREFIX}{env_name}: {env_value!r}")
    if plan_value is not None:
        return plan_value
    return default


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(), help="Tournament plan file (JSON).")
@click.option("--out", "out_flag", default=None, type=click.Path(), help="Output directory.")
@click.option("--workers", "workers_flag", default=None, type=int, help="Parallel match budget.")
@click.option("--seed", "seed_flag", default=None, type=int, help="Master seed override.")
@click.option("--deadline-ms", "deadline_flag", default=None, type=int, help="Per-move deadline override.")
def tournament(plan_path, out_flag, workers_flag, seed_flag, deadline_flag) -> None:
    """Run every scheduled match from a plan file and write the artifacts."""
    try:
        plan, plan_out = load_plan(plan_path)
    except PlanError as exc:
        click.echo(f"plan error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    from dataclasses import replace

    plan = replace(
        plan,
        seed=_resolve(seed_flag, "SEED", None, plan.seed, int),
        workers=_resolve(workers_flag, "WORKERS", None, plan.workers, int),
        deadline_ms=_resolve(deadline_flag, "DEADLINE_MS", None, plan.deadline_ms, int),
    )
    out_dir = _resolve(out_flag, "OUT", plan_out, "arena-out")
    arena = Arena(deadline_ms=plan.deadline_ms)
    records, board, events = run_tournament(arena, plan)
    storage.write_outputs(records, board, events, out_dir)
    finished = sum(1 for r in records if r.status == "finished")
    storage.write_summary(records, board, plan, out_dir)
    click.echo(f"{len(records)} matches scheduled, {finished} finished, out: {out_dir}")
    click.echo(storage.export_leaderboard(board, "markdown"))
    sys.exit(EXIT_OK)


@main.command()
@click.option("--listen", "listen_flag", default=None, help="host:port to bind (default 127.0.0.1:4762).")
@click.option("--plan", "plan_path", default=None, type=click.Path(), help="Serve defaults: games and house agents.")
@click.option("--out", "out_flag", default=None, type=click.Path(), help="Output directory.")
@click.option("--seed", "seed_flag", default=None, type=int, help="Master seed for served matches.")
@click.option("--deadline-ms", "deadline_flag", default=None, type=int, help="Per-move deadline.")
def serve(listen_flag, plan_path, out_flag, seed_flag, deadline_flag) -> None:
    """Host the arena: accept remote agents and match them as they arrive."""
    plan = None
    plan_out = None
    if plan_path:
        try:
            plan, plan_out = load_plan(plan_path)
        except PlanError as exc:
            click.echo(f"plan error: {exc}", err=True)
            sys.exit(EXIT_USAGE)
    listen = _resolve(listen_flag, "LISTEN", None, "127.0.0.1:4762")
    host, _, port_text = listen.partition(":")
    try:
        port = int(port_text) if port_text else 4762
    except ValueError:
        click.echo(f"bad --listen value: {listen!r}", err=True)
        sys.exit(EXIT_USAGE)
    seed = _resolve(seed_flag, "SEED", plan.seed if plan else None, 0, int)
    deadline_ms = _resolve(
        deadline_flag, "DEADLINE_MS", plan.deadline_ms if plan else None, 30_000, int
    )
    out_dir = _resolve(out_flag, "OUT", plan_out, "arena-out")

    entries = list(plan.games) if plan else _default_serve_entries()
    house = []
    if plan:
        house = [
            (agent.agent_id, agent.strategy, agent.supported())
            for agent in plan.agents
            if agent.strategy is not None
        ]
    arena = Arena(deadline_ms=deadline_ms)
    try:
        server = ArenaServer(
            arena,
            host=host or "127.0.0.1",
            port=port,
            entries=entries,
            plan_agents=house,
            seed=seed,
            out_dir=out_dir,
        )
    except OSError as exc:
        click.echo(f"cannot bind {listen}: {exc}", err=True)
        sys.exit(EXIT_ENVIRONMENT)

    import threading

    stop = threading.Event()

    def _graceful(signum, frame):
        del frame
        click.echo(f"signal {signum}: finishing running matches, then exiting", err=True)
        stop.set()

    signal.signal(signal.SIGINT, _graceful)
    signal.signal(signal.SIGTERM, _graceful)

    server.start()
    click.echo(f"listening on {server.address[0]}:{server.address[1]}")
    sys.stdout.flush()
    try:
        while not stop.wait(0.2):
            pass
    except KeyboardInterrupt:
        pass
    server.wait_idle()
    server.shutdown()
    sys.exit(EXIT_OK)


def _default_serve_entries():
    from gamearena.arena import PlanGame
    from gamearena.games.types import GameKind

    return [PlanGame(game=GameKind.PRISONERS_DILEMMA, variant="multi", repetitions=1)]


@main.command()
@click.argument("transcript", type=click.Path())
@click.option("--verify", is_flag=True, help="Re-execute and cross-check the recorded results.")
def replay(transcript, verify) -> None:
    """Pretty-print a transcript; with --verify, re-run it through the rules."""
    path = Path(transcript)
    if not path.exists():
        click.echo(f"no such transcript: {path}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        record = storage.load_transcript(path)
        if verify:
            storage.verify_record(record, source=str(path))
    except IntegrityError as exc:
        click.echo(f"integrity error: {exc}", err=True)
        sys.exit(EXIT_INTEGRITY)
    click.echo(f"match {record.match_id} [{record.config.game.value}] {record.status}")
    click.echo(f"participants: {', '.join(record.participants)} (seed {record.seed})")
    for rnd in record.rounds:
        actions = ", ".join(f"p{p}={a!r}" for p, a in sorted(rnd.actions.items()))
        extra = f" tags={','.join(rnd.tags)}" if rnd.tags else ""
        click.echo(f"  round {rnd.index}: {actions} -> payoffs {list(rnd.payoffs)}{extra}")
    if record.outcome is not None:
        click.echo(f"scores: {list(record.outcome.scores)} payoffs: {list(record.outcome.payoffs)}")
        if record.outcome.winners is not None:
            click.echo(f"winners: {sorted(record.outcome.winners)}")
    if verify:
        click.echo("verify: ok")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("transcript", type=click.Path())
@click.option("--round", "round_index", required=True, type=int, help="1-based round number.")
@click.option("--tag", required=True, help=f"One of: {', '.join(storage.BEHAVIOR_TAGS)}.")
def annotate(transcript, round_index, tag) -> None:
    """Attach a behavior tag to one round of a transcript."""
    path = Path(transcript)
    if not path.exists():
        click.echo(f"no such transcript: {path}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        storage.annotate(path, round_index, tag)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_USAGE)
    except IntegrityError as exc:
        click.echo(f"integrity error: {exc}", err=True)
        sys.exit(EXIT_INTEGRITY)
    click.echo(f"tagged round {round_index} of {path.name} with {tag}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
