"""Team runtime: one shared belief base and one planner for all agents of a team."""

from __future__ import annotations

import logging
import random
import secrets
import socket
import time
from dataclasses import replace

from cowherd.belief import BeliefBase, merge_percept
from cowherd.config import SimConfig
from cowherd.protocol import Actions, Auth, Error, Percept, SimEnd, SimStart, decode, encode
from cowherd.strategy import RolePlan, plan_team
from cowherd.world import MOVES, Action

log = logging.getLogger(__name__)

STRATEGIES = ("jason-dtu", "jason-dtu-no-disruptor", "random", "idle")


class UnknownStrategy(ValueError):
    pass


class TeamError(RuntimeError):
    """The server rejected this team."""


def check_strategy(name: str) -> str:
    if name not in STRATEGIES:
        raise UnknownStrategy(f"unknown strategy {name!r} (choose from {', '.join(STRATEGIES)})")
    return name


class TeamRuntime:
    """Turns percepts into actions for a whole team.

    All work happens inside :meth:`act`; nothing runs between sending the
    actions and receiving the next percept.
    """

    def __init__(self, team: str, strategy: str, config: SimConfig | None = None, seed: int = 0):
        self.team = team
        self.strategy = check_strategy(strategy)
        config = config or SimConfig()
        if strategy == "jason-dtu-no-disruptor":
            config = replace(config, disruptor=False)
        self.config = config
        # str seeds hash through sha512, so this stream is stable across runs
        self.rng = random.Random(f"{seed}:{team}")
        self.belief: BeliefBase | None = None
        self.plan: RolePlan = {}
        self.agent_ids: tuple[int, ...] = ()

    def start(self, msg: SimStart) -> None:
        if self.belief is not None:
            return
        self.belief = BeliefBase(self.team, msg.width, msg.height)
        self.agent_ids = tuple(msg.agent_ids)

    def act(self, percept: Percept) -> Actions:
        if self.belief is None:
            raise RuntimeError("percept received before sim-start")
        self.belief = merge_percept(self.belief, percept)
        if self.strategy == "idle":
            moves = {i: Action.SKIP for i in sorted(self.belief.own)}
        elif self.strategy == "random":
            moves = self._random_moves()
        else:
            self.plan, moves = plan_team(self.belief, self.plan, percept.step, self.config)
        return Actions(percept.step, moves)

    def _random_moves(self) -> dict[int, Action]:
        belief = self.belief
        occupied = set(belief.fresh()) | set(belief.own.values())
        moves = {}
        for i in sorted(belief.own):
            x, y = belief.own[i]
            legal = [Action.SKIP]
            for a in MOVES:
                dx, dy = a.delta
                q = (x + dx, y + dy)
                if belief.in_bounds(q) and belief.terrain_at(q) not in (None, "#") and q not in occupied:
                    legal.append(a)
            moves[i] = self.rng.choice(legal)
        return moves


def run_team(
    host: str,
    port: int,
    team: str,
    strategy: str,
    token: str | None = None,
    seed: int = 0,
    config: SimConfig | None = None,
    retries: int = 5,
    retry_delay: float = 0.2,
) -> SimEnd:
    """Play one match over TCP and return the server's final message.

    Dropped or refused connections are retried with the same token, which
    lets the server resume the team mid-match.
    """
    runtime = TeamRuntime(team, strategy, config, seed)
    token = token or secrets.token_hex(8)
    agent_count = runtime.config.agents_per_team
    failures = 0
    while True:
        try:
            with socket.create_connection((host, port)) as sock:
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                stream = sock.makefile("rwb")
                stream.write(encode(Auth(team, token, agent_count)))
                stream.flush()
                for line in stream:
                    msg = decode(line)
                    if isinstance(msg, SimStart):
                        runtime.start(msg)
                    elif isinstance(msg, Percept):
                        stream.write(encode(runtime.act(msg)))
                        stream.flush()
                    elif isinstance(msg, SimEnd):
                        return msg
                    elif isinstance(msg, Error):
                        raise TeamError(f"{msg.code}: {msg.text}")
                raise ConnectionResetError("server closed the connection")
        except OSError as exc:
            failures += 1
            if failures > retries:
                raise
            log.warning("connection problem (%s), retry %d/%d", exc, failures, retries)
            time.sleep(retry_delay)
