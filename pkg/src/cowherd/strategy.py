"""The jason-dtu decision stack.

One leader plans for the whole team every step from the shared belief:
a scout explores early, herders are grouped over the most valuable cow
clusters and sent to formation slots behind them, and with a full team one
disruptor parks next to the opponent's corral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from cowherd.belief import BeliefBase
from cowherd.config import SimConfig
from cowherd.pathfind import (
    BLOCKED,
    PASSABLE,
    MapView,
    astar,
    bfs_padded,
    is_frontier,
    nearest_frontier,
)
from cowherd.world import CANDIDATE_DELTAS, Action

Cell = tuple[int, int]


class Role(str, Enum):
    LEADER = "leader"
    SCOUT = "scout"
    HERDER = "herder"
    DISRUPTOR = "disruptor"


HERDING_ROLES = (Role.LEADER, Role.HERDER)


@dataclass(frozen=True)
class Cluster:
    ids: frozenset[int]
    cells: tuple[Cell, ...]
    centroid: tuple[float, float]

    @property
    def size(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Assignment:
    role: Role
    target: Cell
    group: int = -1


RolePlan = dict[int, Assignment]


def round_cell(p: tuple[float, float]) -> Cell:
    return (math.floor(p[0] + 0.5), math.floor(p[1] + 0.5))


def _cheb(p: Cell, q: Cell) -> int:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


# ---------------------------------------------------------------- clusters


def detect_clusters(cows: Sequence[Cell] | Mapping[int, Cell], link_radius: int) -> list[Cluster]:
    """Connected components of cows linked by Chebyshev distance <= ``link_radius``.

    A plain sequence is indexed by position. Largest clusters first, ties by
    smallest member id.
    """
    if link_radius < 1:
        raise ValueError("link_radius must be >= 1")
    items = sorted(cows.items()) if isinstance(cows, Mapping) else list(enumerate(cows))
    parent = list(range(len(items)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(len(items)):
        pa = items[a][1]
        for b in range(a + 1, len(items)):
            if _cheb(pa, items[b][1]) <= link_radius:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for i in range(len(items)):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        cells = tuple(items[i][1] for i in members)
        n = len(cells)
        out.append(
            Cluster(
                frozenset(items[i][0] for i in members),
                cells,
                (sum(c[0] for c in cells) / n, sum(c[1] for c in cells) / n),
            )
        )
    out.sort(key=lambda c: (-c.size, min(c.ids)))
    return out


def cluster_utility(cluster: Cluster, own_corral: Iterable[Cell]) -> float:
    centre = round_cell(cluster.centroid)
    d = min((_cheb(centre, c) for c in own_corral), default=math.inf)
    return cluster.size / (1 + d)


def rank_clusters(clusters: Sequence[Cluster], own_corral: Iterable[Cell]) -> list[int]:
    """Cluster indices by descending utility, then larger size, then index."""
    own_corral = list(own_corral)
    u = [cluster_utility(c, own_corral) for c in clusters]
    return sorted(range(len(clusters)), key=lambda i: (-u[i], -clusters[i].size, i))


def select_target_cluster(clusters: Sequence[Cluster], own_corral: Iterable[Cell]) -> Cluster | None:
    order = rank_clusters(clusters, own_corral)
    return clusters[order[0]] if order else None


# --------------------------------------------------------------- formation


def formation_raw(
    centroid: tuple[float, float],
    corral_target: Cell,
    k: int,
    standoff: float,
    spread: float,
) -> list[Cell]:
    """Rounded slot cells on an arc ``standoff`` behind the herd.

    The arc is centred on the direction pointing from the corral through the
    centroid. When ``k`` slots at ``spread`` degrees would wrap past the
    flanks, the spacing is compressed to keep every slot behind the herd.
    """
    if k < 1:
        raise ValueError("formation needs at least one slot")
    cx, cy = centroid
    dx, dy = cx - corral_target[0], cy - corral_target[1]
    norm = math.hypot(dx, dy)
    if norm == 0:
        raise ValueError("centroid coincides with the corral target")
    dx, dy = dx / norm, dy / norm
    if k > 1:
        spread = min(spread, 180.0 / (k - 1))
    out = []
    for i in range(k):
        theta = math.radians((i - (k - 1) / 2) * spread)
        cos, sin = math.cos(theta), math.sin(theta)
        rx = dx * cos - dy * sin
        ry = dx * sin + dy * cos
        q = round_cell((cx + standoff * rx, cy + standoff * ry))
        # rounding can tip a flank slot corral-ward
        if (q[0] - cx) * (corral_target[0] - cx) + (q[1] - cy) * (corral_target[1] - cy) > 0:
            continue
        out.append(q)
    return out


def snap(view: MapView, raw: Cell, taken: set[Cell], reach: int = 3) -> Cell | None:
    frontier = [raw]
    seen = {raw}
    for _ in range(reach + 1):
        ok = [c for c in frontier if c not in taken and view.at(c) == PASSABLE]
        if ok:
            return min(ok, key=lambda c: (c[1], c[0]))
        nxt = []
        for x, y in frontier:
            for dx, dy in CANDIDATE_DELTAS[1:]:
                q = (x + dx, y + dy)
                if q not in seen and view.at(q) == PASSABLE:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return None


def formation_positions(
    centroid: tuple[float, float],
    corral_target: Cell,
    k: int,
    standoff: float,
    spread: float,
    view: MapView,
    occupied: Iterable[Cell] = (),
) -> list[Cell]:
    taken = set(occupied)
    out = []
    for raw in formation_raw(centroid, corral_target, k, standoff, spread):
        q = snap(view, raw, taken)
        if q is not None:
            taken.add(q)
            out.append(q)
    return out


# -------------------------------------------------------------- assignment


def slot_distances(
    agents: Sequence[tuple[int, Cell]],
    slots: Sequence[Cell],
    view: MapView,
) -> dict[tuple[int, int], int]:
    """``(slot index, agent id) -> path length`` for every reachable pair."""
    out = {}
    cells = [c for _, c in agents]
    for s, slot in enumerate(slots):
        dist = bfs_padded(view, [slot], targets=cells)
        for aid, c in agents:
            if view.in_bounds(c):
                d = dist[view.index(c)]
                if d >= 0:
                    out[(s, aid)] = d
    return out


def greedy_match(dist: Mapping[tuple[int, int], int]) -> dict[int, int]:
    pairs = sorted((d, aid, s) for (s, aid), d in dist.items())
    used_agents: set[int] = set()
    out: dict[int, int] = {}
    for _, aid, s in pairs:
        if s in out or aid in used_agents:
            continue
        out[s] = aid
        used_agents.add(aid)
    return out


def assign_with_distances(
    agents: Sequence[tuple[int, Cell]],
    slots: Sequence[Cell],
    view: MapView,
) -> tuple[dict[int, int], dict[tuple[int, int], int]]:
    """Greedy matching plus every pair distance discovered on the way.

    One breadth-first wave per slot, all advanced a level at a time, so pairs
    surface in nondecreasing distance and the greedy choice can be committed
    level by level. Waves stop once every slot or every agent is matched;
    pairs farther than the last level are absent from the distance table.
    """
    walk = view.walkable(False)
    offs = view.offsets()
    where: dict[int, list[int]] = {}
    for aid, c in agents:
        if view.in_bounds(c):
            where.setdefault(view.index(c), []).append(aid)
    n_agents = sum(len(v) for v in where.values())
    seen = []
    waves = []
    for slot in slots:
        if view.in_bounds(slot):
            i = view.index(slot)
            seen.append({i})
            waves.append([i])
        else:
            seen.append(set())
            waves.append([])
    dist: dict[tuple[int, int], int] = {}
    match: dict[int, int] = {}
    used: set[int] = set()
    d = 0
    while True:
        level = []
        for s, wave in enumerate(waves):
            for i in wave:
                for aid in where.get(i, ()):
                    dist[(s, aid)] = d
                    level.append((aid, s))
        for aid, s in sorted(level):
            if s not in match and aid not in used:
                match[s] = aid
                used.add(aid)
        if len(match) == len(slots) or len(used) == n_agents:
            break
        d += 1
        alive = False
        for s, wave in enumerate(waves):
            if s in match or not wave:
                waves[s] = []
                continue
            mark = seen[s]
            nxt = []
            for i in wave:
                for o in offs:
                    j = i + o
                    if walk[j] and j not in mark:
                        mark.add(j)
                        nxt.append(j)
            waves[s] = nxt
            alive = alive or bool(nxt)
        if not alive:
            break
    return match, dist


def assign_agents(
    agents: Sequence[tuple[int, Cell]],
    slots: Sequence[Cell],
    view: MapView,
) -> dict[int, int]:
    """Greedy global matching, slot index -> agent id.

    Repeatedly takes the closest remaining (agent, slot) pair by path length,
    ties by agent id then slot index. Unreachable pairs are never matched.
    """
    return assign_with_distances(agents, slots, view)[0]


def _path_len(view: MapView, a: Cell, b: Cell) -> float:
    path = astar(view, a, b)
    return math.inf if path is None else len(path)


# ------------------------------------------------------------ team planner


def _step_action(view: MapView, start: Cell, target: Cell, unknown_is: int) -> Action:
    if start == target:
        return Action.SKIP
    path = astar(view, start, target, unknown_is)
    if not path:
        return Action.SKIP
    nx, ny = path[0]
    return Action.from_delta(nx - start[0], ny - start[1])


def _disruptor_target(belief: BeliefBase, own_corral: list[Cell], view: MapView) -> Cell | None:
    pen = belief.corral(belief.opponent)
    if pen:
        cx = sum(c[0] for c in pen) / len(pen)
        cy = sum(c[1] for c in pen) / len(pen)
        pen_set = set(pen)
        gate = set()
        for x, y in pen:
            for dx, dy in CANDIDATE_DELTAS[1:]:
                q = (x + dx, y + dy)
                if q not in pen_set and belief.in_bounds(q) and belief.terrain_at(q) == ".":
                    gate.add(q)
        if gate:
            return min(gate, key=lambda q: (math.hypot(q[0] - cx, q[1] - cy), q[1], q[0]))
    if not own_corral:
        return None
    # opponent corral not seen yet: head for the mirror image of our own
    cx = sum(c[0] for c in own_corral) / len(own_corral)
    cy = sum(c[1] for c in own_corral) / len(own_corral)
    mx = min(max(round_cell((belief.width - 1 - cx, 0))[0], 0), belief.width - 1)
    my = min(max(round_cell((0, belief.height - 1 - cy))[1], 0), belief.height - 1)
    return (mx, my)


def _group_sizes(n: int, size: int) -> list[int]:
    return [min(size, n - i) for i in range(0, n, size)]


def plan_team(
    belief: BeliefBase,
    prev: Mapping[int, Assignment] | None,
    step: int,
    config: SimConfig,
) -> tuple[RolePlan, dict[int, Action]]:
    prev = prev or {}
    ids = sorted(belief.own)
    if not ids:
        return {}, {}
    pos = belief.own
    view = belief.view()
    own_corral = belief.corral(belief.team)

    scouting = belief.known_fraction < config.scout_known_fraction and step < config.scout_step_cutoff
    roles: dict[int, Role] = {ids[0]: Role.LEADER}
    scout = ids[1] if len(ids) >= 2 else None
    disruptor = ids[-1] if config.disruptor and len(ids) >= 6 else None
    if disruptor is not None:
        roles[disruptor] = Role.DISRUPTOR
    if scout is not None and (scouting or not config.scout_to_herder):
        roles[scout] = Role.SCOUT
    for i in ids:
        roles.setdefault(i, Role.HERDER)

    plan: RolePlan = {}

    # herding groups over the best clusters
    herders = [i for i in ids if roles[i] in HERDING_ROLES]
    pens = set(belief.corral("A")) | set(belief.corral("B"))
    loose = [c for c in belief.remembered("c") if c not in pens]
    clusters = detect_clusters(loose, config.cluster_link_radius)
    occupied = set(belief.fresh()) | {pos[i] for i in ids if roles[i] not in HERDING_ROLES}
    slots: list[Cell] = []
    slot_group: list[int] = []
    if herders and clusters and own_corral:
        order = rank_clusters(clusters, own_corral)
        # groups sharing a cluster share one formation arc, split in arc order
        groups_on: dict[int, list[int]] = {}
        for g, k in enumerate(_group_sizes(len(herders), config.group_size)):
            groups_on.setdefault(order[g % len(order)], []).extend([g] * k)
        for ci, labels in groups_on.items():
            cl = clusters[ci]
            centre = round_cell(cl.centroid)
            goal = min(own_corral, key=lambda c: (_cheb(centre, c), c[1], c[0]))
            if cl.centroid == (float(goal[0]), float(goal[1])):
                continue
            cells = formation_positions(
                cl.centroid,
                goal,
                len(labels),
                config.formation_standoff,
                config.formation_spread,
                view,
                occupied | set(slots),
            )
            slots.extend(cells)
            slot_group.extend(labels[: len(cells)])

    match, dist = assign_with_distances([(i, pos[i]) for i in herders], slots, view)
    holder = {aid: s for s, aid in match.items()}

    def pair_distance(s: int, i: int) -> float:
        if (s, i) not in dist:
            dist[(s, i)] = _path_len(view, pos[i], slots[s])
        return dist[(s, i)]

    slot_index = {c: s for s, c in enumerate(slots)}
    for i in herders:
        old = prev.get(i)
        if old is None or old.role != roles[i] or old.target not in slot_index:
            continue
        s_old = slot_index[old.target]
        s_new = holder.get(i)
        if s_new == s_old:
            continue
        d_old = pair_distance(s_old, i)
        d_new = pair_distance(s_new, i) if s_new is not None else math.inf
        if d_old - d_new > config.hysteresis:
            continue
        other = match.get(s_old)
        match[s_old] = i
        holder[i] = s_old
        if s_new is not None:
            if other is not None:
                match[s_new] = other
                holder[other] = s_new
            else:
                del match[s_new]
        elif other is not None:
            del holder[other]

    for i in herders:
        s = holder.get(i)
        if s is not None:
            plan[i] = Assignment(roles[i], slots[s], slot_group[s])
            continue
        # spare herders hold while the scout works, then explore on their own
        f = None
        if not scouting:
            old = prev.get(i)
            f = nearest_frontier(view, pos[i])
            if old is not None and old.role == roles[i] and old.group == -1 and is_frontier(view, old.target):
                f = old.target
        plan[i] = Assignment(roles[i], f if f is not None else pos[i], -1)

    for i in ids:
        if roles[i] is Role.SCOUT:
            old = prev.get(i)
            target = nearest_frontier(view, pos[i])
            if (
                old is not None
                and old.role is Role.SCOUT
                and old.target != pos[i]
                and is_frontier(view, old.target)
                and target is not None
            ):
                keep = bfs_padded(view, [pos[i]], targets=[old.target, target])
                if keep[view.index(old.target)] - keep[view.index(target)] <= config.hysteresis:
                    target = old.target
            plan[i] = Assignment(Role.SCOUT, target if target is not None else pos[i])
        elif roles[i] is Role.DISRUPTOR:
            target = _disruptor_target(belief, own_corral, view)
            plan[i] = Assignment(Role.DISRUPTOR, target if target is not None else pos[i])

    # movement: live entities and teammates are obstacles
    blocked = view.with_blocked(list(belief.fresh()) + [pos[i] for i in ids])
    actions = {}
    for i in ids:
        a = plan[i]
        optimistic = a.role in (Role.SCOUT, Role.DISRUPTOR)
        actions[i] = _step_action(blocked, pos[i], a.target, PASSABLE if optimistic else BLOCKED)
    return plan, actions
