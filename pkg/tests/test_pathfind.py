import math
import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from cowherd.pathfind import (
    BLOCKED,
    PASSABLE,
    UNKNOWN,
    MapView,
    astar,
    distance_field,
    is_frontier,
    nearest_frontier,
)

STEPS8 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]


def bfs_oracle(rows, start, unknown_ok=False):
    """Plain coordinate BFS over a list of row strings."""
    h, w = len(rows), len(rows[0])
    ok = {".", "?"} if unknown_ok else {"."}
    dist = {start: 0}
    q = deque([start])
    while q:
        x, y = q.popleft()
        for dx, dy in STEPS8:
            n = (x + dx, y + dy)
            if 0 <= n[0] < w and 0 <= n[1] < h and n not in dist and rows[n[1]][n[0]] in ok:
                dist[n] = dist[(x, y)] + 1
                q.append(n)
    return dist


def random_rows(rnd, w, h, density):
    return ["".join("#" if rnd.random() < density else "." for _ in range(w)) for _ in range(h)]


def assert_valid_path(rows, start, path, unknown_ok=False):
    ok = {".", "?"} if unknown_ok else {"."}
    prev = start
    for c in path:
        assert max(abs(c[0] - prev[0]), abs(c[1] - prev[1])) == 1
        assert rows[c[1]][c[0]] in ok
        prev = c
    assert len(set(path)) == len(path)
    assert start not in path


class TestAstar:
    def test_start_is_goal(self):
        assert astar(MapView.from_rows(["..."] * 3), (1, 1), (1, 1)) == []

    def test_open_three_by_three(self):
        path = astar(MapView.from_rows(["..."] * 3), (0, 0), (2, 2))
        assert len(path) == bfs_oracle(["..."] * 3, (0, 0))[(2, 2)] == 2
        assert path[-1] == (2, 2)

    def test_enclosed_goal(self):
        rows = [".....", ".###.", ".#.#.", ".###.", "....."]
        assert astar(MapView.from_rows(rows), (0, 0), (2, 2)) is None

    def test_blocked_goal(self):
        rows = ["...", ".#.", "..."]
        assert astar(MapView.from_rows(rows), (0, 0), (1, 1)) is None

    def test_unknown_policy(self):
        rows = ["..?..", "##?##", "....."]
        view = MapView.from_rows(rows)
        assert astar(view, (0, 0), (0, 2), unknown_is=BLOCKED) is None
        path = astar(view, (0, 0), (0, 2), unknown_is=PASSABLE)
        assert path is not None
        assert_valid_path(rows, (0, 0), path, unknown_ok=True)

    def test_matches_bfs_on_random_grids(self):
        rnd = random.Random(11)
        for _ in range(30):
            rows = random_rows(rnd, 15, 12, 0.3)
            view = MapView.from_rows(rows)
            free = [(x, y) for y in range(12) for x in range(15) if rows[y][x] == "."]
            if len(free) < 2:
                continue
            start = rnd.choice(free)
            ref = bfs_oracle(rows, start)
            for goal in free:
                path = astar(view, start, goal)
                if goal in ref:
                    assert path is not None and len(path) == ref[goal]
                    assert_valid_path(rows, start, path)
                else:
                    assert path is None


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    w=st.integers(2, 20),
    h=st.integers(2, 20),
    density=st.floats(0, 0.45),
)
def test_astar_cost_and_validity(seed, w, h, density):
    rnd = random.Random(seed)
    rows = random_rows(rnd, w, h, density)
    free = [(x, y) for y in range(h) for x in range(w) if rows[y][x] == "."]
    if len(free) < 2:
        return
    start, goal = rnd.sample(free, 2)
    path = astar(MapView.from_rows(rows), start, goal)
    ref = bfs_oracle(rows, start)
    assert (path is not None) == (goal in ref)
    if path is not None:
        assert len(path) == ref[goal]
        assert path[-1] == goal
        assert_valid_path(rows, start, path)


class TestDistanceField:
    def test_empty_grid_is_chebyshev(self):
        view = MapView(9, 7)
        field = distance_field(view, [(2, 3)])
        for y in range(7):
            for x in range(9):
                assert field[y][x] == max(abs(x - 2), abs(y - 3))

    def test_all_sources(self):
        view = MapView(5, 5)
        field = distance_field(view, [(x, y) for x in range(5) for y in range(5)])
        assert all(d == 0 for row in field for d in row)

    def test_walled_off(self):
        rows = ["...#.", "...#.", "...#.", "####.", "....."]
        field = distance_field(MapView.from_rows(rows), [(0, 0)])
        assert field[0][4] == math.inf
        assert field[4][0] == math.inf
        assert field[2][2] == 2

    def test_needs_sources(self):
        with pytest.raises(ValueError):
            distance_field(MapView(3, 3), [])

    def test_matches_oracle_with_several_sources(self):
        rnd = random.Random(5)
        rows = random_rows(rnd, 20, 20, 0.25)
        free = [(x, y) for y in range(20) for x in range(20) if rows[y][x] == "."]
        sources = rnd.sample(free, 3)
        field = distance_field(MapView.from_rows(rows), sources)
        per = [bfs_oracle(rows, s) for s in sources]
        for x, y in free:
            best = min((d[(x, y)] for d in per if (x, y) in d), default=math.inf)
            assert field[y][x] == best


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_distance_field_lipschitz(seed):
    rnd = random.Random(seed)
    rows = random_rows(rnd, 16, 16, 0.3)
    free = [(x, y) for y in range(16) for x in range(16) if rows[y][x] == "."]
    if not free:
        return
    field = distance_field(MapView.from_rows(rows), [rnd.choice(free)])
    for x, y in free:
        for dx, dy in STEPS8:
            n = (x + dx, y + dy)
            if n in free and field[y][x] < math.inf:
                assert abs(field[y][x] - field[n[1]][n[0]]) <= 1


class TestFrontier:
    def test_fully_known(self):
        assert nearest_frontier(MapView(6, 6), (2, 2)) is None

    def test_disc_boundary(self):
        # known disc of radius 2 around (7, 7), all else unknown
        rows = [
            "".join("." if max(abs(x - 7), abs(y - 7)) <= 2 else "?" for x in range(15))
            for y in range(15)
        ]
        view = MapView.from_rows(rows)
        got = nearest_frontier(view, (7, 7))
        ref = bfs_oracle(rows, (7, 7))
        frontier = [c for c in ref if is_frontier(view, c)]
        best = min(ref[c] for c in frontier)
        assert got == min((c for c in frontier if ref[c] == best), key=lambda c: (c[1], c[0]))
        assert got == (5, 5)

    def test_tie_prefers_smaller_y(self):
        # equidistant frontier cells (3, 5) and (5, 3) from (4, 4) on an open known area
        rows = [["."] * 9 for _ in range(9)]
        rows[6][3] = "?"
        rows[2][5] = "?"
        # wall off every other cell touching the two unknown cells
        for x, y in [(2, 5), (4, 5), (2, 7), (3, 7), (4, 7), (2, 6), (4, 6),
                     (4, 3), (6, 3), (4, 2), (6, 2), (4, 1), (5, 1), (6, 1)]:
            rows[y][x] = "#"
        view = MapView.from_rows(["".join(r) for r in rows])
        hits = [c for c in [(x, y) for x in range(9) for y in range(9)] if is_frontier(view, c)]
        assert sorted(hits) == [(3, 5), (5, 3)]
        assert nearest_frontier(view, (4, 4)) == (5, 3)

    def test_unknown_cells_are_not_travelled(self):
        rows = ["..?..", "..?..", "..?.."]
        got = nearest_frontier(MapView.from_rows(rows), (0, 0))
        assert got == (1, 0)


def test_view_rejects_wrong_buffer():
    with pytest.raises(ValueError):
        MapView(3, 3, bytes(4))


def test_out_of_bounds_is_blocked():
    view = MapView(3, 3)
    assert view.at((-1, 0)) == BLOCKED
    assert view.at((1, 1)) == PASSABLE
    assert MapView.from_rows(["?.."] * 3).at((0, 2)) == UNKNOWN
