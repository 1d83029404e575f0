"""Regenerate the bundled 60x60 demo map.

Two corner corrals, point-symmetric obstacle groves, three herds of ten
cows and six agents per team. The layout is point-symmetric so neither side
starts with an advantage.
"""

import argparse
import json
import random
from pathlib import Path

W = H = 60
PEN = 7


def mirror(c):
    return (W - 1 - c[0], H - 1 - c[1])


def build(seed: int) -> dict:
    rng = random.Random(seed)
    grid = [["."] * W for _ in range(H)]
    for y in range(PEN):
        for x in range(PEN):
            grid[y][x] = "A"
            grid[H - 1 - y][W - 1 - x] = "B"

    agents_a = [(8, 1), (8, 3), (8, 5), (1, 8), (3, 8), (5, 8)]
    herd_corner = [(42 + dx, 12 + dy) for dy in (0, 2, 4) for dx in (0, 2, 4)] + [(48, 14)]
    herd_centre = [(26, 28), (28, 28), (30, 28), (26, 30), (31, 29)]
    cows = herd_corner + [mirror(c) for c in herd_corner] + herd_centre + [mirror(c) for c in herd_centre]

    keep_clear = set(cows) | set(agents_a) | {mirror(c) for c in agents_a}

    def clear(x, y):
        if x < PEN + 4 and y < PEN + 4:
            return False
        if x >= W - PEN - 4 and y >= H - PEN - 4:
            return False
        return all(max(abs(x - cx), abs(y - cy)) > 3 for cx, cy in keep_clear)

    groves = 0
    while groves < 9:
        cx, cy = rng.randrange(4, W - 4), rng.randrange(4, H - 4)
        cells = {(cx, cy)}
        for _ in range(rng.randint(4, 10)):
            x, y = rng.choice(sorted(cells))
            cells.add((x + rng.choice((-1, 0, 1)), y + rng.choice((-1, 0, 1))))
        cells |= {mirror(c) for c in cells}
        if not all(0 <= x < W and 0 <= y < H and clear(x, y) for x, y in cells):
            continue
        for x, y in cells:
            grid[y][x] = "#"
        groves += 1

    return {
        "width": W,
        "height": H,
        "rows": ["".join(r) for r in grid],
        "cows": [list(c) for c in cows],
        "agents": {"A": [list(c) for c in agents_a], "B": [list(mirror(c)) for c in agents_a]},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2010)
    ap.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parents[1] / "src" / "cowherd" / "maps" / "demo.json",
    )
    args = ap.parse_args()
    data = build(args.seed)
    args.out.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
