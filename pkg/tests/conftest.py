import sys

import pytest

from cowherd.config import SimConfig
from cowherd.world import GridMap, demo_map_path, load_map


def open_map(width=30, height=30, cows=(), agents_a=(), agents_b=(), obstacles=(), pens=None):
    """Open map with one-cell corrals in two corners unless ``pens`` is given."""
    grid = [["."] * width for _ in range(height)]
    pens = pens or {"A": [(0, 0)], "B": [(width - 1, height - 1)]}
    for team, cells in pens.items():
        for x, y in cells:
            grid[y][x] = team
    for x, y in obstacles:
        grid[y][x] = "#"
    return GridMap(
        width,
        height,
        ["".join(r) for r in grid],
        cows,
        {"A": list(agents_a), "B": list(agents_b)},
    )


@pytest.fixture
def demo_map():
    return load_map(demo_map_path())


@pytest.fixture
def small_config():
    return SimConfig(agents_per_team=1, steps=20)


@pytest.fixture(scope="session")
def demo_map_once():
    return load_map(demo_map_path())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
