"""Replay log: one JSON record per line, header first.

The header carries config, map and seed; every following record is the
state after a step together with the actions that produced it. The final
record also names the winner.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable, Sequence

from cowherd.config import SimConfig
from cowherd.world import TEAMS, Action, GridMap, WorldState, new_world, step, winner


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def header_record(world: WorldState, teams: dict[str, str] | None = None) -> dict:
    return {
        "type": "header",
        "seed": world.config.seed,
        "config": world.config.to_dict(),
        "map": world.map.to_json(),
        "teams": dict(teams or {}),
    }


def step_record(
    world: WorldState,
    actions: dict[str, Sequence[Action]] | None,
    final: bool = False,
) -> dict:
    rec = {
        "type": "step",
        "step": world.step,
        "agents": {t: [list(c) for c in world.agents[t]] for t in TEAMS},
        "cows": [list(c) for c in world.cows],
        "actions": None if actions is None else {t: [a.value for a in actions[t]] for t in TEAMS},
        "scores": list(world.scores),
    }
    if final:
        rec["winner"] = winner(world.scores)
    return rec


class ReplayWriter:
    def __init__(self, sink: str | Path | IO[str] | None):
        self._own = isinstance(sink, (str, Path))
        self._fh = open(sink, "w", encoding="utf-8", newline="\n") if self._own else sink
        self.records: list[dict] = []

    def write(self, record: dict) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(_dump(record))

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            if self._own:
                self._fh.close()
            self._fh = None


def read_replay(path: str | Path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError("empty replay")
    records = [json.loads(line) for line in lines]
    header, body = records[0], records[1:]
    if header.get("type") != "header":
        raise ValueError("replay does not start with a header record")
    for a, b in zip(body, body[1:]):
        if b["step"] <= a["step"]:
            raise ValueError("replay records out of order")
    return header, body


def resimulate(header: dict, records: Iterable[dict]) -> list[dict]:
    """Rebuild every record from the header and the recorded actions."""
    config = SimConfig.from_dict(header["config"])
    world = new_world(GridMap.from_json(header["map"]), config)
    records = list(records)
    out = [step_record(world, None, final=config.steps == 0)]
    for rec in records[1:]:
        acts = {t: [Action(v) for v in rec["actions"][t]] for t in TEAMS}
        world = step(world, acts["A"], acts["B"])
        out.append(step_record(world, acts, final=world.finished))
    return out


def render_frame(header: dict, record: dict) -> str:
    """ASCII frame, two characters per cell.

    ``#`` obstacle, ``.`` open, ``a``/``b`` corral, ``C`` cow, ``A0``.. agents.
    """
    gmap = header["map"]
    grid = [[ch.lower() + " " for ch in row] for row in gmap["rows"]]
    for x, y in record["cows"]:
        grid[y][x] = "C "
    for t in TEAMS:
        for i, (x, y) in enumerate(record["agents"][t]):
            grid[y][x] = t + "0123456789abcdefghijklmnopqrstuvwxyz"[i % 36]
    a, b = record["scores"]
    head = f"step {record['step']}  A={a} B={b}"
    if "winner" in record:
        head += f"  winner={record['winner']}"
    return "\n".join([head] + ["".join(row).rstrip() for row in grid])
