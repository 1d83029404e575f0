"""Team-wide shared memory of terrain and sightings."""

from __future__ import annotations

from dataclasses import dataclass, field

from cowherd.pathfind import BLOCKED, PASSABLE, UNKNOWN, MapView
from cowherd.protocol import Percept

Cell = tuple[int, int]

OWN_CODE = {"A": "a", "B": "b"}
_VIEW_CODE = {".": PASSABLE, "A": PASSABLE, "B": PASSABLE, "#": BLOCKED}


class StalePercept(ValueError):
    pass


@dataclass
class BeliefBase:
    team: str
    width: int
    height: int
    # row-major terrain chars, None while unknown
    terrain: list = None
    # cell -> (occupant code, step last seen)
    entities: dict[Cell, tuple[str, int]] = field(default_factory=dict)
    own: dict[int, Cell] = field(default_factory=dict)
    scores: tuple[int, int] = (0, 0)
    step: int = -1
    # derived from terrain, kept in step by merge_percept
    _codes: bytearray = field(default=None, compare=False, repr=False)
    _known: int = field(default=0, compare=False, repr=False)
    _pens: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.terrain is None:
            self.terrain = [None] * (self.width * self.height)
        if self._codes is None:
            self._codes = bytearray(
                UNKNOWN if t is None else _VIEW_CODE[t] for t in self.terrain
            )
            self._known = sum(1 for t in self.terrain if t is not None)
            w = self.width
            self._pens = {"A": set(), "B": set()}
            for i, t in enumerate(self.terrain):
                if t in ("A", "B"):
                    self._pens[t].add((i % w, i // w))

    @property
    def opponent(self) -> str:
        return "B" if self.team == "A" else "A"

    @property
    def known_count(self) -> int:
        return self._known

    @property
    def known_fraction(self) -> float:
        return self._known / (self.width * self.height)

    def known_cells(self) -> set[Cell]:
        w = self.width
        return {(i % w, i // w) for i, t in enumerate(self.terrain) if t is not None}

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def terrain_at(self, c: Cell) -> str | None:
        return self.terrain[c[1] * self.width + c[0]]

    def corral(self, team: str) -> list[Cell]:
        """Known corral cells of ``team``, row-major."""
        return sorted(self._pens[team], key=lambda c: (c[1], c[0]))

    def fresh(self, kind: str | None = None) -> list[Cell]:
        """Cells whose remembered entity was seen at the current step."""
        return sorted(
            (c for c, (k, s) in self.entities.items() if s == self.step and (kind is None or k == kind)),
            key=lambda c: (c[1], c[0]),
        )

    def remembered(self, kind: str) -> list[Cell]:
        return sorted((c for c, (k, _) in self.entities.items() if k == kind), key=lambda c: (c[1], c[0]))

    def view(self) -> MapView:
        return MapView(self.width, self.height, self._codes)

    def copy(self) -> BeliefBase:
        return BeliefBase(
            self.team,
            self.width,
            self.height,
            list(self.terrain),
            dict(self.entities),
            dict(self.own),
            self.scores,
            self.step,
            bytearray(self._codes),
            self._known,
            {t: set(v) for t, v in self._pens.items()},
        )


def merge_percept(belief: BeliefBase, percept: Percept) -> BeliefBase:
    """Fold one team percept into a new belief.

    Sightings upsert by cell; a remembered entity inside a cell that is
    visible now but empty is dropped, since it has moved away.
    """
    if percept.step < belief.step:
        raise StalePercept(f"percept for step {percept.step} after step {belief.step}")
    out = belief.copy()
    w, h = out.width, out.height
    own_code = OWN_CODE[out.team]
    terrain = out.terrain
    codes = out._codes
    entities = out.entities
    step = percept.step
    for agent in percept.agents:
        out.own[agent.id] = tuple(agent.pos)
        for x, y, t, occ in agent.cells:
            if not (0 <= x < w and 0 <= y < h):
                continue
            i = y * w + x
            if terrain[i] is None:
                terrain[i] = t
                codes[i] = _VIEW_CODE[t]
                out._known += 1
                if t in ("A", "B"):
                    out._pens[t].add((x, y))
            if occ and occ != own_code:
                entities[(x, y)] = (occ, step)
            elif entities:
                entities.pop((x, y), None)
    out.step = step
    out.scores = tuple(percept.scores)
    return out
