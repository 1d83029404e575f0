"""``cowherd`` command line: serve, team, local, bench, render.

Exit codes: 0 success, 1 usage or input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import statistics
import sys
import time
from pathlib import Path

from cowherd.client import TeamError, UnknownStrategy, check_strategy, run_team
from cowherd.config import SimConfig
from cowherd.replay import read_replay, render_frame
from cowherd.server import DEFAULT_PORT, NET, LobbyTimeout, run_match, run_match_async
from cowherd.world import MapError, demo_map_path, load_map

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", type=Path, default=None, help="map JSON (default: bundled demo map)")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agents-per-team", type=int, default=6)
    p.add_argument("--deadline-ms", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cowherd", description="Cow-herding match simulator.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("serve", help="host a networked match")
    _match_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--replay", type=Path, default=Path("match.replay"))
    p.add_argument("--lobby-timeout", type=float, default=60.0)
    p.add_argument("--fill-baseline", default=None, metavar="NAME",
                   help="strategy substituted for a team that never connects")

    p = sub.add_parser("team", help="play one team over the network")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--team", choices=("A", "B"), required=True)
    p.add_argument("--strategy", default="jason-dtu")
    p.add_argument("--token", default=None)
    p.add_argument("--seed", type=int, default=0, help="strategy RNG seed (use the match seed for parity)")
    p.add_argument("--agents-per-team", type=int, default=6)
    p.add_argument("--retries", type=int, default=5)

    p = sub.add_parser("local", help="run a whole match in-process")
    _match_flags(p)
    p.add_argument("--a", default="jason-dtu")
    p.add_argument("--b", default="random")
    p.add_argument("--replay", type=Path, default=Path("match.replay"))

    p = sub.add_parser("bench", help="run many local matches and summarise")
    _match_flags(p)
    p.add_argument("--matches", type=int, default=20)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--a", default="jason-dtu")
    p.add_argument("--b", default="random")

    p = sub.add_parser("render", help="print replay frames as ASCII")
    p.add_argument("replay", type=Path)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--step", type=int, default=0)
    g.add_argument("--animate", action="store_true")
    p.add_argument("--fps", type=float, default=4.0)
    return ap


def _config(args, seed: int | None = None) -> SimConfig:
    try:
        return SimConfig(
            steps=args.steps,
            seed=args.seed if seed is None else seed,
            agents_per_team=args.agents_per_team,
            deadline_ms=args.deadline_ms,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    path = args.map or demo_map_path()
    try:
        return load_map(path)
    except FileNotFoundError:
        raise UsageError(f"map file not found: {path}") from None
    except MapError as exc:
        raise UsageError(f"bad map {path}: {exc}") from None


def _strategies(*names: str) -> None:
    try:
        for n in names:
            check_strategy(n)
    except UnknownStrategy as exc:
        raise UsageError(str(exc)) from None


def cmd_serve(args) -> int:
    gmap = _load(args)
    config = _config(args)
    if args.fill_baseline:
        _strategies(args.fill_baseline)
    try:
        gmap_ok = config.agents_per_team <= min(len(gmap.agents["A"]), len(gmap.agents["B"]))
        if not gmap_ok:
            raise UsageError("map has fewer agent start cells than --agents-per-team")
        result = asyncio.run(
            run_match_async(
                config, gmap, NET, NET, args.replay,
                host=args.host, port=args.port,
                lobby_timeout=args.lobby_timeout, fill_baseline=args.fill_baseline,
                on_listen=lambda port: print(f"listening on {args.host}:{port}", file=sys.stderr, flush=True),
            )
        )
    except OSError as exc:
        print(f"cowherd serve: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except LobbyTimeout as exc:
        print(f"cowherd serve: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(result.line())
    return EXIT_OK


def cmd_team(args) -> int:
    _strategies(args.strategy)
    try:
        end = run_team(
            args.host, args.port, args.team, args.strategy, args.token, args.seed,
            SimConfig(agents_per_team=args.agents_per_team), retries=args.retries,
        )
    except (OSError, TeamError) as exc:
        print(f"cowherd team: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"scores A={end.scores[0]} B={end.scores[1]} winner={end.winner}")
    return EXIT_OK


def cmd_local(args) -> int:
    _strategies(args.a, args.b)
    gmap = _load(args)
    try:
        result = run_match(_config(args), gmap, args.a, args.b, args.replay)
    except MapError as exc:
        raise UsageError(str(exc)) from None
    print(result.line())
    return EXIT_OK


def bench_summary(results: list[tuple[int, int]], a: str, b: str) -> list[str]:
    n = len(results)
    wins = sum(1 for x, y in results if x > y)
    draws = sum(1 for x, y in results if x == y)
    sa = [x for x, _ in results]
    sb = [y for _, y in results]
    return [
        f"matches {n}  A={a}  B={b}",
        f"A wins/draws/losses: {wins}/{draws}/{n - wins - draws}",
        f"score A: mean {statistics.fmean(sa):.2f}  std {statistics.pstdev(sa):.2f}",
        f"score B: mean {statistics.fmean(sb):.2f}  std {statistics.pstdev(sb):.2f}",
    ]


def cmd_bench(args) -> int:
    if args.matches < 1:
        raise UsageError("--matches must be >= 1")
    _strategies(args.a, args.b)
    gmap = _load(args)
    results = []
    t0 = time.perf_counter()
    for k in range(args.matches):
        try:
            r = run_match(_config(args, seed=args.seed_base + k), gmap, args.a, args.b)
        except MapError as exc:
            raise UsageError(str(exc)) from None
        results.append(r.scores)
    elapsed = (time.perf_counter() - t0) / args.matches
    for line in bench_summary(results, args.a, args.b):
        print(line)
    print(f"wall-clock per match: {elapsed:.3f} s")
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        header, records = read_replay(args.replay)
    except FileNotFoundError:
        raise UsageError(f"replay not found: {args.replay}") from None
    except ValueError as exc:
        raise UsageError(f"bad replay: {exc}") from None
    if args.animate:
        for rec in records:
            print(render_frame(header, rec), end="\n\n", flush=True)
            time.sleep(1.0 / args.fps)
        return EXIT_OK
    by_step = {r["step"]: r for r in records}
    if args.step not in by_step:
        raise UsageError(f"step {args.step} not in replay (0..{records[-1]['step']})")
    print(render_frame(header, by_step[args.step]))
    return EXIT_OK


COMMANDS = {
    "serve": cmd_serve,
    "team": cmd_team,
    "local": cmd_local,
    "bench": cmd_bench,
    "render": cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cowherd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
