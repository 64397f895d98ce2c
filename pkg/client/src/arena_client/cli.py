"""Command line for the reference client.

The auth token for HTTP backends is read from the environment only
(ARENA_CLIENT_TOKEN by default), never from a flag.
"""

from __future__ import annotations

import argparse
import sys

from arena_client.backends import STUB_POLICIES, build_backend
from arena_client.session import ALL_GAMES, connect_and_play


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="arena-client",
        description="Remote agent for the game arena (stub policy or chat endpoint).",
    )
    parser.add_argument("--server", default="127.0.0.1:4762", help="arena host:port")
    parser.add_argument(
        "--backend",
        default="stub:first_legal",
        help=f"stub:<policy> (policies: {', '.join(STUB_POLICIES)}) or http:<base-url>",
    )
    parser.add_argument("--model", default="", help="model name for http backends")
    parser.add_argument("--name", required=True, help="agent name to register")
    parser.add_argument(
        "--games", default=",".join(ALL_GAMES), help="comma-separated games to offer"
    )
    parser.add_argument("--matches", type=int, default=1, help="stop after N results (0 = forever)")
    parser.add_argument("--log", default=None, help="prompt/response log file (ndjson)")
    parser.add_argument("--timeout", type=float, default=20.0, help="http request timeout (s)")
    args = parser.parse_args(argv)

    try:
        backend = build_backend(args.backend, model=args.model, timeout_s=args.timeout)
    except ValueError as exc:
        parser.error(str(exc))
    games = tuple(g.strip() for g in args.games.split(",") if g.strip())
    try:
        summary = connect_and_play(
            args.server,
            backend,
            name=args.name,
            games=games,
            matches=args.matches,
            log_path=args.log,
        )
    except Exception as exc:
        print(f"session failed: {exc}", file=sys.stderr)
        return 1
    wins = sum(1 for r in summary.results if r.get("status") == "finished")
    print(
        f"{summary.agent_id}: {len(summary.results)} match(es), {wins} finished, "
        f"{summary.observations} observations, {summary.fallbacks} fallbacks"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
