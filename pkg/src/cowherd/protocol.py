"""Line-delimited JSON wire protocol between match server and team clients.

Every message is one compact JSON object terminated by ``\\n``. Keys are
written in a fixed order (``type`` first, then the fields in declaration
order) so encodings are byte-stable and diffable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Union

from cowherd.world import Action

Cell = tuple[int, int]

TERRAIN_CODES = frozenset(".#AB")
OCCUPANT_CODES = frozenset(["", "c", "a", "b"])
WINNERS = frozenset(["A", "B", "draw"])


class DecodeError(ValueError):
    """A line that is not a valid protocol message.

    ``field`` names the offending field (``"line"`` for syntax errors).
    """

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


@dataclass(frozen=True)
class Auth:
    team: str
    token: str
    agent_count: int


@dataclass(frozen=True)
class SimStart:
    team: str
    width: int
    height: int
    steps: int
    agent_ids: tuple[int, ...]
    deadline_ms: int


@dataclass(frozen=True)
class AgentPercept:
    id: int
    pos: Cell
    # (x, y, terrain code, occupant code)
    cells: tuple[tuple[int, int, str, str], ...]


@dataclass(frozen=True)
class Percept:
    step: int
    deadline_ms: int
    scores: tuple[int, int]
    agents: tuple[AgentPercept, ...]


@dataclass(frozen=True)
class Actions:
    step: int
    moves: Mapping[int, Action] = field(default_factory=dict)


@dataclass(frozen=True)
class SimEnd:
    scores: tuple[int, int]
    winner: str


@dataclass(frozen=True)
class Error:
    code: str
    text: str


@dataclass(frozen=True)
class Bye:
    pass


Message = Union[Auth, SimStart, Percept, Actions, SimEnd, Error, Bye]

_TAGS = {
    Auth: "auth",
    SimStart: "sim-start",
    Percept: "percept",
    Actions: "actions",
    SimEnd: "sim-end",
    Error: "error",
    Bye: "bye",
}


def _body(msg: Message) -> dict[str, Any]:
    if isinstance(msg, Auth):
        return {"team": msg.team, "token": msg.token, "agent_count": msg.agent_count}
    if isinstance(msg, SimStart):
        return {
            "team": msg.team,
            "width": msg.width,
            "height": msg.height,
            "steps": msg.steps,
            "agent_ids": list(msg.agent_ids),
            "deadline_ms": msg.deadline_ms,
        }
    if isinstance(msg, Percept):
        return {
            "step": msg.step,
            "deadline_ms": msg.deadline_ms,
            "scores": list(msg.scores),
            "agents": [
                {"id": a.id, "pos": list(a.pos), "cells": [list(c) for c in a.cells]}
                for a in msg.agents
            ],
        }
    if isinstance(msg, Actions):
        return {
            "step": msg.step,
            "moves": {str(i): msg.moves[i].value for i in sorted(msg.moves)},
        }
    if isinstance(msg, SimEnd):
        return {"scores": list(msg.scores), "winner": msg.winner}
    if isinstance(msg, Error):
        return {"code": msg.code, "text": msg.text}
    if isinstance(msg, Bye):
        return {}
    raise TypeError(f"not a protocol message: {msg!r}")


def encode(msg: Message) -> bytes:
    obj = {"type": _TAGS[type(msg)], **_body(msg)}
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8") + b"\n"


def _get(obj: Mapping, key: str) -> Any:
    if key not in obj:
        raise DecodeError(key, "missing required field")
    return obj[key]


def _int(obj: Mapping, key: str, minimum: int = 0) -> int:
    v = _get(obj, key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise DecodeError(key, "expected an integer")
    if v < minimum:
        raise DecodeError(key, f"{key} out of range")
    return v


def _str(obj: Mapping, key: str) -> str:
    v = _get(obj, key)
    if not isinstance(v, str):
        raise DecodeError(key, "expected a string")
    return v


def _team(obj: Mapping, key: str = "team") -> str:
    v = _str(obj, key)
    if v not in ("A", "B"):
        raise DecodeError(key, f"unknown team {v!r}")
    return v


def _scores(obj: Mapping) -> tuple[int, int]:
    v = _get(obj, "scores")
    if (
        not isinstance(v, list)
        or len(v) != 2
        or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in v)
    ):
        raise DecodeError("scores", "expected two non-negative integers")
    return (v[0], v[1])


def _cell(v: Any, name: str) -> Cell:
    if (
        not isinstance(v, list)
        or len(v) != 2
        or not all(isinstance(c, int) and not isinstance(c, bool) for c in v)
    ):
        raise DecodeError(name, "expected an [x, y] integer pair")
    return (v[0], v[1])


def _agent_percept(v: Any) -> AgentPercept:
    if not isinstance(v, dict):
        raise DecodeError("agents", "expected an object per agent")
    aid = _int(v, "id")
    pos = _cell(_get(v, "pos"), "pos")
    raw = _get(v, "cells")
    if not isinstance(raw, list):
        raise DecodeError("cells", "expected a list")
    cells = []
    for c in raw:
        if not isinstance(c, list) or len(c) != 4:
            raise DecodeError("cells", "expected [x, y, terrain, occupant]")
        x, y, t, o = c
        if not isinstance(x, int) or not isinstance(y, int):
            raise DecodeError("cells", "cell coordinates must be integers")
        if t not in TERRAIN_CODES:
            raise DecodeError("cells", f"unknown terrain code {t!r}")
        if o not in OCCUPANT_CODES:
            raise DecodeError("cells", f"unknown occupant code {o!r}")
        cells.append((x, y, t, o))
    return AgentPercept(aid, pos, tuple(cells))


def _moves(obj: Mapping) -> dict[int, Action]:
    raw = _get(obj, "moves")
    if not isinstance(raw, dict):
        raise DecodeError("moves", "expected an object")
    out = {}
    for k, v in raw.items():
        if not (isinstance(k, str) and k.isdigit()):
            raise DecodeError("moves", f"agent id {k!r} is not a non-negative integer")
        try:
            out[int(k)] = Action(v)
        except ValueError:
            raise DecodeError("moves", f"unknown direction {v!r}") from None
    return out


def decode(line: bytes | str) -> Message:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("line", f"invalid UTF-8: {exc}") from None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DecodeError("line", f"syntax error: {exc}") from None
    if not isinstance(obj, dict):
        raise DecodeError("line", "expected a JSON object")
    tag = _str(obj, "type")
    if tag == "auth":
        return Auth(_team(obj), _str(obj, "token"), _int(obj, "agent_count", 1))
    if tag == "sim-start":
        ids = _get(obj, "agent_ids")
        if not isinstance(ids, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) and i >= 0 for i in ids
        ):
            raise DecodeError("agent_ids", "expected a list of non-negative integers")
        return SimStart(
            _team(obj),
            _int(obj, "width", 1),
            _int(obj, "height", 1),
            _int(obj, "steps"),
            tuple(ids),
            _int(obj, "deadline_ms", 1),
        )
    if tag == "percept":
        agents = _get(obj, "agents")
        if not isinstance(agents, list):
            raise DecodeError("agents", "expected a list")
        return Percept(
            _int(obj, "step"),
            _int(obj, "deadline_ms", 1),
            _scores(obj),
            tuple(_agent_percept(a) for a in agents),
        )
    if tag == "actions":
        return Actions(_int(obj, "step"), _moves(obj))
    if tag == "sim-end":
        w = _str(obj, "winner")
        if w not in WINNERS:
            raise DecodeError("winner", f"unknown winner {w!r}")
        return SimEnd(_scores(obj), w)
    if tag == "error":
        return Error(_str(obj, "code"), _str(obj, "text"))
    if tag == "bye":
        return Bye()
    raise DecodeError("type", f"unknown message type {tag!r}")
