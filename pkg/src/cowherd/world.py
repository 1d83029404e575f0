"""World model and the lockstep step engine.

Coordinates are ``(x, y)`` with x growing east and y growing south. Terrain is
kept as one character per cell, exactly as in the map file rows.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from cowherd.config import SimConfig

Cell = tuple[int, int]

TEAMS = ("A", "B")

OPEN = "."
OBSTACLE = "#"
CORRAL = {"A": "A", "B": "B"}

# occupant codes, shared with the wire protocol
NOBODY = ""
COW = "c"
AGENT_CODE = {"A": "a", "B": "b"}


class Terrain(str, Enum):
    OPEN = "."
    OBSTACLE = "#"
    CORRAL_A = "A"
    CORRAL_B = "B"


class Action(Enum):
    SKIP = "skip"
    N = "n"
    NE = "ne"
    E = "e"
    SE = "se"
    S = "s"
    SW = "sw"
    W = "w"
    NW = "nw"

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]

    @classmethod
    def from_delta(cls, dx: int, dy: int) -> Action:
        return _FROM_DELTA[(dx, dy)]


_DELTAS = {
    Action.SKIP: (0, 0),
    Action.N: (0, -1),
    Action.NE: (1, -1),
    Action.E: (1, 0),
    Action.SE: (1, 1),
    Action.S: (0, 1),
    Action.SW: (-1, 1),
    Action.W: (-1, 0),
    Action.NW: (-1, -1),
}
_FROM_DELTA = {d: a for a, d in _DELTAS.items()}

# stay first, then clockwise from north; this order is the cow tie-break
CANDIDATE_DELTAS = tuple(_DELTAS[a] for a in Action)
MOVES = tuple(a for a in Action if a is not Action.SKIP)


class MapError(ValueError):
    """Raised when a map violates a structural invariant."""


class SimError(RuntimeError):
    pass


def chebyshev(p: Cell, q: Cell) -> int:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


class GridMap:
    """Static terrain plus entity start cells."""

    def __init__(
        self,
        width: int,
        height: int,
        rows: Sequence[str],
        cows: Iterable[Cell] = (),
        agents: Mapping[str, Iterable[Cell]] | None = None,
    ):
        self.width = int(width)
        self.height = int(height)
        self.rows = tuple(rows)
        self.cows = tuple(tuple(c) for c in cows)
        agents = agents or {}
        self.agents = {t: tuple(tuple(c) for c in agents.get(t, ())) for t in TEAMS}
        self._check()
        self.corrals = {
            t: frozenset(
                (x, y)
                for y, row in enumerate(self.rows)
                for x, ch in enumerate(row)
                if ch == CORRAL[t]
            )
            for t in TEAMS
        }
        self._check_corrals()
        self._obstacles_near: dict[int, dict[Cell, tuple[Cell, ...]]] = {}

    def _check(self) -> None:
        if self.width < 8 or self.height < 8:
            raise MapError(f"map too small: {self.width}x{self.height} (minimum 8x8)")
        if len(self.rows) != self.height:
            raise MapError(f"expected {self.height} rows, got {len(self.rows)}")
        for y, row in enumerate(self.rows):
            if len(row) != self.width:
                raise MapError(f"row {y} has length {len(row)}, expected {self.width}")
            bad = set(row) - set(".#AB")
            if bad:
                raise MapError(f"row {y} has unknown terrain characters {sorted(bad)}")
        starts = list(self.cows) + [c for t in TEAMS for c in self.agents[t]]
        for c in starts:
            if not self.in_bounds(c):
                raise MapError(f"start cell {c} out of bounds")
            if self.char(c) == OBSTACLE:
                raise MapError(f"start cell {c} is an obstacle")
        if len(set(starts)) != len(starts):
            raise MapError("occupancy violation: two entities share a start cell")

    def _check_corrals(self) -> None:
        for t in TEAMS:
            cells = self.corrals[t]
            if not cells:
                raise MapError(f"missing corral for team {t}")
            seen = {min(cells)}
            todo = list(seen)
            while todo:
                x, y = todo.pop()
                for dx, dy in CANDIDATE_DELTAS[1:]:
                    q = (x + dx, y + dy)
                    if q in cells and q not in seen:
                        seen.add(q)
                        todo.append(q)
            if len(seen) != len(cells):
                raise MapError(f"corral of team {t} is not one 8-connected region")

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def char(self, c: Cell) -> str:
        return self.rows[c[1]][c[0]]

    def terrain(self, c: Cell) -> Terrain:
        return Terrain(self.char(c))

    def passable(self, c: Cell) -> bool:
        return self.in_bounds(c) and self.char(c) != OBSTACLE

    def obstacles_near(self, c: Cell, radius: int) -> tuple[Cell, ...]:
        table = self._obstacles_near.setdefault(radius, {})
        hit = table.get(c)
        if hit is None:
            x0, y0 = c
            hit = tuple(
                (x, y)
                for y in range(max(0, y0 - radius), min(self.height, y0 + radius + 1))
                for x in range(max(0, x0 - radius), min(self.width, x0 + radius + 1))
                if self.rows[y][x] == OBSTACLE
            )
            table[c] = hit
        return hit

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "rows": list(self.rows),
            "cows": [list(c) for c in self.cows],
            "agents": {t: [list(c) for c in self.agents[t]] for t in TEAMS},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> GridMap:
        try:
            return cls(
                data["width"],
                data["height"],
                data["rows"],
                data.get("cows", []),
                data.get("agents", {}),
            )
        except (KeyError, TypeError) as exc:
            raise MapError(f"malformed map: {exc!r}") from exc


def load_map(path: str | Path) -> GridMap:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MapError(f"map file is not valid JSON: {exc}") from exc
    return GridMap.from_json(data)


def demo_map_path() -> Path:
    return Path(__file__).parent / "maps" / "demo.json"


@dataclass(eq=False)
class WorldState:
    map: GridMap
    config: SimConfig
    step: int
    agents: dict[str, list[Cell]]
    cows: list[Cell]
    scores: list[int]
    rng: random.Random
    occupancy: dict[Cell, str] = field(default_factory=dict)

    def copy(self) -> WorldState:
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return WorldState(
            self.map,
            self.config,
            self.step,
            {t: list(v) for t, v in self.agents.items()},
            list(self.cows),
            list(self.scores),
            rng,
            dict(self.occupancy),
        )

    @property
    def finished(self) -> bool:
        return self.step >= self.config.steps

    def snapshot(self) -> dict:
        return {
            "step": self.step,
            "agents": {t: [list(c) for c in self.agents[t]] for t in TEAMS},
            "cows": [list(c) for c in self.cows],
            "scores": list(self.scores),
        }


def new_world(gmap: GridMap, config: SimConfig) -> WorldState:
    agents = {}
    for t in TEAMS:
        starts = gmap.agents[t]
        if len(starts) < config.agents_per_team:
            raise MapError(
                f"team {t} has {len(starts)} start cells, "
                f"needs {config.agents_per_team}"
            )
        agents[t] = list(starts[: config.agents_per_team])
    occupancy = {c: COW for c in gmap.cows}
    for t in TEAMS:
        for c in agents[t]:
            occupancy[c] = AGENT_CODE[t]
    return WorldState(
        map=gmap,
        config=config,
        step=0,
        agents=agents,
        cows=list(gmap.cows),
        scores=[0, 0],
        rng=random.Random(config.seed),
        occupancy=occupancy,
    )


def state_hash(world: WorldState) -> str:
    payload = world.snapshot()
    version, internal, gauss = world.rng.getstate()
    payload["rng"] = [version, list(internal), gauss]
    blob = json.dumps(payload, separators=(",", ":"), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def cow_candidates(world: WorldState, p: Cell) -> list[Cell]:
    gmap = world.map
    rows = gmap.rows
    w, h = gmap.width, gmap.height
    occ = world.occupancy
    home = rows[p[1]][p[0]]
    penned = home in "AB"
    px, py = p
    out = [p]
    for dx, dy in CANDIDATE_DELTAS[1:]:
        x, y = px + dx, py + dy
        if not (0 <= x < w and 0 <= y < h):
            continue
        t = rows[y][x]
        if t == OBSTACLE or (x, y) in occ:
            continue
        if penned and t != home:
            continue
        out.append((x, y))
    return out


def cow_scores(world: WorldState, cow_id: int, candidates: Sequence[Cell]) -> list[float]:
    """Attraction/repulsion score of each candidate cell, without jitter."""
    p = world.cows[cow_id]
    px, py = p
    r = world.config.cow_visibility
    agents = [
        c
        for t in TEAMS
        for c in world.agents[t]
        if abs(c[0] - px) <= r and abs(c[1] - py) <= r
    ]
    herd = [
        c
        for j, c in enumerate(world.cows)
        if j != cow_id and abs(c[0] - px) <= r and abs(c[1] - py) <= r
    ]
    obstacles = world.map.obstacles_near(p, r)
    hypot = math.hypot
    scores = []
    for qx, qy in candidates:
        s = 0.0
        for ex, ey in agents:
            s -= 5.0 / (1.0 + hypot(qx - ex, qy - ey))
        for ex, ey in herd:
            d = hypot(qx - ex, qy - ey)
            if d < 2:
                s -= 2.0 / (1.0 + d)
            else:
                s += 1.0 / (1.0 + d)
        for ex, ey in obstacles:
            s -= 1.0 / (1.0 + hypot(qx - ex, qy - ey))
        scores.append(s)
    return scores


def cow_target(world: WorldState, cow_id: int, jitter_enabled: bool = False) -> Cell:
    """Cell the cow moves to this step.

    With jitter enabled one uniform draw per candidate is taken from
    ``world.rng`` in candidate order, so the call advances the world's stream.
    """
    if not 0 <= cow_id < len(world.cows):
        raise KeyError(f"unknown cow id {cow_id}")
    candidates = cow_candidates(world, world.cows[cow_id])
    scores = cow_scores(world, cow_id, candidates)
    if jitter_enabled:
        eps = world.config.cow_jitter
        rnd = world.rng.random
        scores = [s + rnd() * eps for s in scores]
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return candidates[best]


def _action_for(actions: Mapping[int, Action] | Sequence[Action] | None, i: int) -> Action:
    if actions is None:
        return Action.SKIP
    if isinstance(actions, Mapping):
        return actions.get(i, Action.SKIP)
    return actions[i] if i < len(actions) else Action.SKIP


def step(
    world: WorldState,
    actions_a: Mapping[int, Action] | Sequence[Action] | None,
    actions_b: Mapping[int, Action] | Sequence[Action] | None,
) -> WorldState:
    """Advance one step and return the new state; ``world`` is left untouched."""
    if world.finished:
        raise SimError(f"match finished at step {world.step}")
    nxt = world.copy()
    gmap = nxt.map
    occ = nxt.occupancy

    for team, actions in (("A", actions_a), ("B", actions_b)):
        positions = nxt.agents[team]
        code = AGENT_CODE[team]
        for i, pos in enumerate(positions):
            act = _action_for(actions, i)
            if act is Action.SKIP:
                continue
            dx, dy = act.delta
            q = (pos[0] + dx, pos[1] + dy)
            if not gmap.passable(q) or q in occ:
                continue
            del occ[pos]
            occ[q] = code
            positions[i] = q

    for j in range(len(nxt.cows)):
        p = nxt.cows[j]
        q = cow_target(nxt, j, jitter_enabled=True)
        if q != p:
            del occ[p]
            occ[q] = COW
            nxt.cows[j] = q

    for k, team in enumerate(TEAMS):
        pen = gmap.corrals[team]
        nxt.scores[k] += sum(1 for c in nxt.cows if c in pen)
    nxt.step += 1
    return nxt


def visible_cells(world: WorldState, team: str) -> dict[int, list[tuple[int, int, str, str]]]:
    """Per-agent percept: ``(x, y, terrain char, occupant code)`` in row-major order."""
    r = world.config.agent_visibility
    gmap = world.map
    rows = gmap.rows
    occ = world.occupancy
    out = {}
    for i, (ax, ay) in enumerate(world.agents[team]):
        cells = []
        for y in range(max(0, ay - r), min(gmap.height, ay + r + 1)):
            row = rows[y]
            for x in range(max(0, ax - r), min(gmap.width, ax + r + 1)):
                cells.append((x, y, row[x], occ.get((x, y), NOBODY)))
        out[i] = cells
    return out


def winner(scores: Sequence[int]) -> str:
    if scores[0] > scores[1]:
        return "A"
    if scores[1] > scores[0]:
        return "B"
    return "draw"
