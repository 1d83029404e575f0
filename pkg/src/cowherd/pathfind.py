"""Grid search on unit-cost 8-connected maps.

All searches run on a padded flat copy of the view (one blocked cell of
border on every side) so neighbour expansion needs no bounds checks.
"""

from __future__ import annotations

import heapq
import math
from itertools import count
from typing import Iterable, Sequence

Cell = tuple[int, int]

PASSABLE = 0
BLOCKED = 1
UNKNOWN = 2

_SYMBOLS = {".": PASSABLE, "A": PASSABLE, "B": PASSABLE, "#": BLOCKED, "?": UNKNOWN}
_WALK_KNOWN = bytes([1, 0, 0]) + bytes(253)
_WALK_OPTIMISTIC = bytes([1, 0, 1]) + bytes(253)


class MapView:
    """Immutable passability grid: each cell is PASSABLE, BLOCKED or UNKNOWN."""

    def __init__(self, width: int, height: int, cells: bytes | bytearray | None = None):
        self.width = width
        self.height = height
        if cells is None:
            cells = bytes(width * height)
        if len(cells) != width * height:
            raise ValueError("cell buffer does not match view size")
        self.cells = bytes(cells)
        stride = width + 2
        pad = bytearray([BLOCKED]) * (stride * (height + 2))
        for y in range(height):
            start = (y + 1) * stride + 1
            pad[start : start + width] = self.cells[y * width : (y + 1) * width]
        self._pad = bytes(pad)
        self._stride = stride
        self._walk: dict[bool, bytes] = {}

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> MapView:
        """``.``/``A``/``B`` passable, ``#`` blocked, ``?`` unknown."""
        height = len(rows)
        width = len(rows[0]) if rows else 0
        return cls(width, height, bytes(_SYMBOLS[ch] for row in rows for ch in row))

    def at(self, c: Cell) -> int:
        x, y = c
        if not (0 <= x < self.width and 0 <= y < self.height):
            return BLOCKED
        return self.cells[y * self.width + x]

    def with_blocked(self, cells: Iterable[Cell]) -> MapView:
        buf = bytearray(self.cells)
        w, h = self.width, self.height
        for x, y in cells:
            if 0 <= x < w and 0 <= y < h:
                buf[y * w + x] = BLOCKED
        return MapView(w, h, buf)

    def walkable(self, unknown_passable: bool) -> bytes:
        hit = self._walk.get(unknown_passable)
        if hit is None:
            hit = self._pad.translate(_WALK_OPTIMISTIC if unknown_passable else _WALK_KNOWN)
            self._walk[unknown_passable] = hit
        return hit

    def offsets(self) -> tuple[int, ...]:
        s = self._stride
        return (-s, -s + 1, 1, s + 1, s, s - 1, -1, -s - 1)

    def index(self, c: Cell) -> int:
        return (c[1] + 1) * self._stride + c[0] + 1

    def cell(self, i: int) -> Cell:
        y, x = divmod(i, self._stride)
        return (x - 1, y - 1)

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height


def astar(
    view: MapView,
    start: Cell,
    goal: Cell,
    unknown_is: int = BLOCKED,
) -> list[Cell] | None:
    """Shortest 8-connected path from ``start`` to ``goal``.

    Returns the cells after ``start`` up to and including ``goal`` (``[]`` when
    they coincide), or None when no path exists.
    """
    if start == goal:
        return []
    if not view.in_bounds(goal) or not view.in_bounds(start):
        return None
    walk = view.walkable(unknown_is == PASSABLE)
    stride = view._stride
    s = view.index(start)
    g = view.index(goal)
    if not walk[g]:
        return None
    gy, gx = divmod(g, stride)
    offs = view.offsets()

    tick = count()
    h0 = max(abs(s % stride - gx), abs(s // stride - gy))
    heap = [(h0, h0, next(tick), s)]
    best = {s: 0}
    parent = {s: -1}
    closed = set()
    push, pop = heapq.heappush, heapq.heappop
    while heap:
        _, _, _, i = pop(heap)
        if i in closed:
            continue
        if i == g:
            break
        closed.add(i)
        nd = best[i] + 1
        for o in offs:
            j = i + o
            if not walk[j] or j in closed:
                continue
            if nd < best.get(j, 1 << 30):
                best[j] = nd
                parent[j] = i
                jy, jx = divmod(j, stride)
                h = max(abs(jx - gx), abs(jy - gy))
                push(heap, (nd + h, h, next(tick), j))
    else:
        return None
    path = []
    i = g
    while i != s:
        path.append(view.cell(i))
        i = parent[i]
    path.reverse()
    return path


def bfs_padded(
    view: MapView,
    sources: Iterable[Cell],
    unknown_passable: bool = False,
    targets: Iterable[Cell] | None = None,
) -> list[int]:
    """Breadth-first distances over the padded index space (-1 = unreached).

    With ``targets`` the search stops once every reachable target is settled;
    distances of settled cells are exact either way.
    """
    walk = view.walkable(unknown_passable)
    dist = [-1] * len(walk)
    frontier = []
    for c in sources:
        if view.in_bounds(c):
            i = view.index(c)
            if dist[i] < 0:
                dist[i] = 0
                frontier.append(i)
    pending = None
    if targets is not None:
        pending = {view.index(c) for c in targets if view.in_bounds(c)}
        pending.difference_update(frontier)
    offs = view.offsets()
    d = 0
    while frontier and (pending is None or pending):
        d += 1
        nxt = []
        for i in frontier:
            for o in offs:
                j = i + o
                if walk[j] and dist[j] < 0:
                    dist[j] = d
                    nxt.append(j)
        if pending is not None:
            pending.difference_update(nxt)
        frontier = nxt
    return dist


def distance_field(
    view: MapView,
    sources: Iterable[Cell],
    unknown_is: int = BLOCKED,
) -> list[list[float]]:
    """``field[y][x]``: fewest unit moves from any source, ``math.inf`` if unreachable."""
    sources = list(sources)
    if not sources:
        raise ValueError("distance_field needs at least one source")
    dist = bfs_padded(view, sources, unknown_is == PASSABLE)
    stride = view._stride
    out = []
    for y in range(view.height):
        base = (y + 1) * stride + 1
        out.append([math.inf if d < 0 else float(d) for d in dist[base : base + view.width]])
    return out


def is_frontier(view: MapView, c: Cell) -> bool:
    if view.at(c) != PASSABLE:
        return False
    pad = view._pad
    i = view.index(c)
    return any(pad[i + o] == UNKNOWN for o in view.offsets())


def nearest_frontier(view: MapView, start: Cell) -> Cell | None:
    """Closest known-passable cell touching an unknown cell, ties by (y, x)."""
    if not view.in_bounds(start):
        return None
    walk = view.walkable(False)
    pad = view._pad
    offs = view.offsets()
    s = view.index(start)
    seen = {s}
    frontier = [s]
    while frontier:
        hits = [
            i
            for i in frontier
            if pad[i] == PASSABLE and any(pad[i + o] == UNKNOWN for o in offs)
        ]
        if hits:
            return view.cell(min(hits))
        nxt = []
        for i in frontier:
            for o in offs:
                j = i + o
                if walk[j] and j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return None
