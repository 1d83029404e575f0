"""Match hosting: lobby, lockstep loop with per-step deadlines, replay output.

The session task is the only code that touches the world. Connection
handlers just decode lines and drop them into a per-team inbox.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO

from cowherd.client import TeamRuntime, check_strategy
from cowherd.config import SimConfig
from cowherd.protocol import (
    Actions,
    AgentPercept,
    Auth,
    Bye,
    DecodeError,
    Error,
    Message,
    Percept,
    SimEnd,
    SimStart,
    decode,
    encode,
)
from cowherd.replay import ReplayWriter, header_record, step_record
from cowherd.world import TEAMS, Action, GridMap, WorldState, new_world, step, visible_cells, winner

log = logging.getLogger(__name__)

NET = "net"
DEFAULT_PORT = 12300


class Phase(str, Enum):
    LOBBY = "lobby"
    RUNNING = "running"
    FINISHED = "finished"


class LobbyTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class MatchResult:
    scores: tuple[int, int]
    winner: str

    def line(self) -> str:
        return f"scores A={self.scores[0]} B={self.scores[1]} winner={self.winner}"


@dataclass(eq=False)
class TeamSlot:
    team: str
    source: str
    runtime: TeamRuntime | None = None
    token: str | None = None
    writer: asyncio.StreamWriter | None = None
    inbox: asyncio.Queue = field(default_factory=asyncio.Queue)
    joined: asyncio.Event = field(default_factory=asyncio.Event)

    @property
    def networked(self) -> bool:
        return self.runtime is None

    @property
    def connected(self) -> bool:
        return self.writer is not None


def build_percept(world: WorldState, team: str) -> Percept:
    seen = visible_cells(world, team)
    agents = tuple(
        AgentPercept(i, world.agents[team][i], tuple(cells))
        for i, cells in seen.items()
    )
    return Percept(world.step, world.config.deadline_ms, tuple(world.scores), agents)


class MatchSession:
    """One match: at most two team links, one world, one replay sink."""

    def __init__(
        self,
        config: SimConfig,
        gmap: GridMap,
        sources: dict[str, str],
        replay: str | Path | IO[str] | None = None,
        lobby_timeout: float = 60.0,
        fill_baseline: str | None = None,
        strategy_seed: int | None = None,
    ):
        self.config = config
        self.map = gmap
        self.world = new_world(gmap, config)
        self.phase = Phase.LOBBY
        self.lobby_timeout = lobby_timeout
        self.fill_baseline = check_strategy(fill_baseline) if fill_baseline else None
        self.strategy_seed = config.seed if strategy_seed is None else strategy_seed
        self.slots = {}
        for t in TEAMS:
            src = sources[t]
            slot = TeamSlot(t, src)
            if src != NET:
                slot.runtime = TeamRuntime(t, src, config, self.strategy_seed)
            self.slots[t] = slot
        self.replay = ReplayWriter(replay)
        self.server: asyncio.AbstractServer | None = None
        self.port: int | None = None

    # ------------------------------------------------------------ network

    async def listen(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT) -> int:
        self.server = await asyncio.start_server(self._handle, host, port)
        self.port = self.server.sockets[0].getsockname()[1]
        return self.port

    async def close(self) -> None:
        for slot in self.slots.values():
            if slot.writer is not None:
                slot.writer.close()
                slot.writer = None
        if self.server is not None:
            self.server.close()
            await self.server.wait_closed()
            self.server = None

    async def _send(self, writer: asyncio.StreamWriter, msg: Message) -> None:
        try:
            writer.write(encode(msg))
            await writer.drain()
        except (ConnectionError, RuntimeError):
            pass

    async def _reject(self, writer: asyncio.StreamWriter, code: str, text: str) -> None:
        await self._send(writer, Error(code, text))
        writer.close()

    def _sim_start(self, team: str) -> SimStart:
        return SimStart(
            team,
            self.map.width,
            self.map.height,
            self.config.steps,
            tuple(range(self.config.agents_per_team)),
            self.config.deadline_ms,
        )

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            line = await reader.readline()
            msg = decode(line)
        except DecodeError as exc:
            await self._reject(writer, "bad-message", str(exc))
            return
        except ConnectionError:
            writer.close()
            return
        if not isinstance(msg, Auth):
            await self._reject(writer, "auth-required", "first message must be auth")
            return
        slot = self.slots[msg.team]
        if self.phase is Phase.FINISHED:
            await self._reject(writer, "finished", "match finished")
            return
        if not slot.networked:
            await self._reject(writer, "slot-unavailable", f"team {msg.team} is played by the server")
            return
        if msg.agent_count != self.config.agents_per_team:
            await self._reject(
                writer, "agent-count", f"expected {self.config.agents_per_team} agents"
            )
            return
        if slot.connected:
            await self._reject(writer, "already-connected", f"team {msg.team} is already connected")
            return
        if self.phase is Phase.RUNNING:
            if not await self.handle_reconnect(msg, writer):
                return
        elif slot.token is not None and msg.token != slot.token:
            await self._reject(writer, "bad-token", "token does not match this team")
            return
        else:
            slot.token = msg.token
            await self._attach(slot, writer)
        await self._read_loop(slot, reader, writer)

    async def handle_reconnect(self, auth: Auth, writer: asyncio.StreamWriter) -> bool:
        """Resume a dropped team mid-match; steps it missed were played as Skip."""
        slot = self.slots[auth.team]
        if self.phase is Phase.FINISHED:
            await self._reject(writer, "finished", "match finished")
            return False
        if slot.connected:
            await self._reject(writer, "already-connected", f"team {auth.team} is already connected")
            return False
        if auth.token != slot.token:
            await self._reject(writer, "bad-token", "token does not match this team")
            return False
        log.info("team %s reconnected at step %d", slot.team, self.world.step)
        await self._attach(slot, writer)
        return True

    async def _attach(self, slot: TeamSlot, writer: asyncio.StreamWriter) -> None:
        slot.writer = writer
        while not slot.inbox.empty():
            slot.inbox.get_nowait()
        await self._send(writer, self._sim_start(slot.team))
        slot.joined.set()

    async def _read_loop(self, slot: TeamSlot, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                try:
                    msg = decode(line)
                except DecodeError as exc:
                    await self._send(writer, Error("bad-message", str(exc)))
                    continue
                if isinstance(msg, Bye):
                    break
                if isinstance(msg, Actions):
                    slot.inbox.put_nowait(msg)
        except ConnectionError:
            pass
        finally:
            if slot.writer is writer:
                slot.writer = None
                slot.inbox.put_nowait(None)
            writer.close()

    # --------------------------------------------------------------- loop

    async def lobby(self) -> None:
        waiting = [s for s in self.slots.values() if s.networked]
        for slot in waiting:
            try:
                await asyncio.wait_for(slot.joined.wait(), self.lobby_timeout)
            except asyncio.TimeoutError:
                if self.fill_baseline is None:
                    raise LobbyTimeout(f"team {slot.team} did not connect") from None
                log.info("team %s absent, substituting %s", slot.team, self.fill_baseline)
                slot.source = self.fill_baseline
                slot.runtime = TeamRuntime(slot.team, self.fill_baseline, self.config, self.strategy_seed)
        for slot in self.slots.values():
            if not slot.networked:
                slot.runtime.start(self._sim_start(slot.team))
        self.phase = Phase.RUNNING
        self.replay.write(header_record(self.world, {t: s.source for t, s in self.slots.items()}))
        self.replay.write(step_record(self.world, None, final=self.world.finished))

    async def _collect(self, slot: TeamSlot, step_no: int, deadline: float) -> dict[int, Action]:
        loop = asyncio.get_running_loop()
        while slot.connected:
            remaining = deadline - loop.time()
            if remaining <= 0:
                break
            try:
                msg = await asyncio.wait_for(slot.inbox.get(), remaining)
            except asyncio.TimeoutError:
                break
            if msg is not None and msg.step == step_no:
                return dict(msg.moves)
        log.info("team %s: no actions for step %d, skipping", slot.team, step_no)
        return {}

    async def play_step(self) -> None:
        world = self.world
        loop = asyncio.get_running_loop()
        deadline = loop.time() + self.config.deadline_ms / 1000
        percepts = {t: build_percept(world, t) for t in TEAMS}
        for t, slot in self.slots.items():
            if slot.networked and slot.connected:
                await self._send(slot.writer, percepts[t])
        moves = {}
        for t, slot in self.slots.items():
            if not slot.networked:
                moves[t] = dict(slot.runtime.act(percepts[t]).moves)
        waits = {t: self._collect(s, world.step, deadline) for t, s in self.slots.items() if s.networked}
        if waits:
            got = await asyncio.gather(*waits.values())
            moves.update(zip(waits, got))
        applied = {
            t: [moves[t].get(i, Action.SKIP) for i in range(len(world.agents[t]))] for t in TEAMS
        }
        self.world = step(world, applied["A"], applied["B"])
        self.replay.write(step_record(self.world, applied, final=self.world.finished))

    async def finish(self) -> MatchResult:
        self.phase = Phase.FINISHED
        result = MatchResult(tuple(self.world.scores), winner(self.world.scores))
        end = SimEnd(result.scores, result.winner)
        for slot in self.slots.values():
            if slot.connected:
                await self._send(slot.writer, end)
        self.replay.close()
        return result

    async def run(self) -> MatchResult:
        try:
            await self.lobby()
            while not self.world.finished:
                await self.play_step()
            return await self.finish()
        finally:
            self.replay.close()


async def run_match_async(
    config: SimConfig,
    gmap: GridMap,
    team_a: str,
    team_b: str,
    replay: str | Path | IO[str] | None = None,
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    lobby_timeout: float = 60.0,
    fill_baseline: str | None = None,
    on_listen=None,
) -> MatchResult:
    session = MatchSession(
        config, gmap, {"A": team_a, "B": team_b}, replay, lobby_timeout, fill_baseline
    )
    try:
        if NET in (team_a, team_b):
            bound = await session.listen(host, port)
            if on_listen is not None:
                on_listen(bound)
        return await session.run()
    finally:
        await session.close()


def run_match(
    config: SimConfig,
    gmap: GridMap,
    team_a: str,
    team_b: str,
    replay: str | Path | IO[str] | None = None,
    **kwargs,
) -> MatchResult:
    """Host one match. A team source is ``"net"`` or a built-in strategy name."""
    for src in (team_a, team_b):
        if src != NET:
            check_strategy(src)
    return asyncio.run(run_match_async(config, gmap, team_a, team_b, replay, **kwargs))
