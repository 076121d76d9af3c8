"""Timing and platoon roles for fixed routes.

Times are modelled as a simple temporal network: every arrival and departure
of every truck is a variable, and each requirement is a difference
constraint ``t_v - t_u >= w``. The closure ``D[u, v]`` (the tightest implied
lower bound on ``t_v - t_u``) is kept as a dense matrix; a constraint set is
consistent iff no cycle has positive weight, and the earliest schedule is the
row of the zero-time node.

Platoon decisions add equalities between departure variables. The greedy
scheduler merges traversals arc by arc; the exact scheduler branches over
every partition of each shared arc's traversals into platoons.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cost import follower_saving
from .errors import Infeasible, SizeLimitExceeded
from .instance import ProblemInstance
from .solution import ALONE_ROLE, LEADER_ROLE, Role, RoutePlan, Schedule, TruckSchedule

log = logging.getLogger(__name__)

EPS = 1e-9
EXACT_MAX_TRUCKS = 4
EXACT_MAX_SHARED_ARCS = 12
DEFAULT_NODE_BUDGET = 1_000_000


class TemporalNetwork:
    """Longest-path closure of difference constraints ``t_v - t_u >= w``."""

    def __init__(self, size: int):
        self.D = np.full((size, size), -np.inf)
        np.fill_diagonal(self.D, 0.0)

    def copy(self) -> "TemporalNetwork":
        tn = TemporalNetwork.__new__(TemporalNetwork)
        tn.D = self.D.copy()
        return tn

    def close(self) -> bool:
        """Full closure after raw edge insertion; False on a positive cycle."""
        D = self.D
        for k in range(D.shape[0]):
            np.maximum(D, D[:, k, None] + D[None, k, :], out=D)
        return bool(np.all(np.diag(D) <= EPS))

    def consistent_with(self, u: int, v: int, w: float) -> bool:
        return not self.D[v, u] + w > EPS

    def add(self, u: int, v: int, w: float) -> bool:
        """Insert one constraint incrementally. Leaves the network unchanged
        and returns False if it would create a positive cycle."""
        if not self.consistent_with(u, v, w):
            return False
        if self.D[u, v] >= w:
            return True
        np.maximum(self.D, self.D[:, u, None] + w + self.D[None, v, :], out=self.D)
        return True

    def equate(self, u: int, v: int) -> bool:
        if not (self.consistent_with(u, v, 0.0) and self.consistent_with(v, u, 0.0)):
            return False
        return self.add(u, v, 0.0) and self.add(v, u, 0.0)

    def earliest(self) -> np.ndarray:
        return self.D[0].copy()


@dataclass(frozen=True)
class Traversal:
    truck: int
    position: int
    arc: tuple[int, int]
    load: float
    saving: float


class _Layout:
    """Variable indices: 0 is time zero; arrival/departure per truck position."""

    def __init__(self, routes: Sequence[RoutePlan]):
        self.arr: dict[int, list[int]] = {}
        self.dep: dict[int, list[int]] = {}
        idx = 1
        for r in routes:
            n = len(r.path)
            self.arr[r.truck] = list(range(idx, idx + n))
            self.dep[r.truck] = list(range(idx + n, idx + 2 * n))
            idx += 2 * n
        self.size = idx


def _base_edges(routes, instance, lay):
    times = instance.times
    edges = []  # (u, v, w, description)
    for r in routes:
        A, Dp = lay.arr[r.truck], lay.dep[r.truck]
        edges.append((0, A[0], 0.0, None))
        edges.append((A[0], 0, 0.0, None))
        for p in range(len(r.path)):
            edges.append((A[p], Dp[p], 0.0, None))
        for p, (i, j) in enumerate(r.arcs):
            t = float(times[i, j])
            # arrival no earlier than departure plus travel; any extra gap is
            # time spent holding before the next node
            edges.append((Dp[p], A[p + 1], t, None))
    windows = []
    for r in routes:
        for c, s in zip(r.customers, r.stops):
            d = instance.by_node[c]
            windows.append((0, lay.arr[r.truck][s], d.t_ea,
                            f"truck {r.truck} cannot reach customer {c} by its earliest time"))
            windows.append((lay.dep[r.truck][s], 0, -d.t_ld,
                            f"truck {r.truck} cannot leave customer {c} by its latest departure {d.t_ld:g}"))
    return edges + windows


def base_network(routes: Sequence[RoutePlan], instance: ProblemInstance):
    """Temporal network of the unplatooned routes.

    Raises:
        Infeasible: if some time window cannot be met even without platoons.
    """
    lay = _Layout(routes)
    tn = TemporalNetwork(lay.size)
    edges = _base_edges(routes, instance, lay)
    for u, v, w, _ in edges:
        tn.D[u, v] = max(tn.D[u, v], w)
    if tn.close():
        return tn, lay
    # replay incrementally to name the first constraint that breaks
    tn = TemporalNetwork(lay.size)
    for u, v, w, why in edges:
        if not tn.add(u, v, w):
            raise Infeasible(why or "route timing is inconsistent", cause=why)
    raise Infeasible("route timing is inconsistent")  # pragma: no cover


def traversals(routes: Sequence[RoutePlan], instance: ProblemInstance) -> dict:
    """Arc traversals of arcs used by at least two distinct trucks."""
    p = instance.params
    times = instance.times
    by_arc: dict[tuple[int, int], list[Traversal]] = {}
    for r in routes:
        for pos, arc in enumerate(r.arcs):
            t = float(times[arc])
            by_arc.setdefault(arc, []).append(
                Traversal(r.truck, pos, arc, r.loads[pos], follower_saving(t, r.loads[pos], p))
            )
    return {a: tr for a, tr in by_arc.items() if len({x.truck for x in tr}) > 1}


def _leader(block: Sequence[Traversal]) -> Traversal:
    return min(block, key=lambda x: (x.load, x.truck, x.position))


def block_value(block: Sequence[Traversal]) -> float:
    """Savings of one platoon: every member but the leader saves."""
    if len(block) < 2:
        return 0.0
    return sum(x.saving for x in block) - _leader(block).saving


def _assemble(routes, instance, tn, lay, blocks, method, exact) -> Schedule:
    earliest = tn.earliest()
    roles: dict[tuple[int, int], Role] = {}
    savings = 0.0
    for block in blocks:
        if len(block) < 2:
            continue
        lead = _leader(block)
        savings += block_value(block)
        roles[(lead.truck, lead.position)] = LEADER_ROLE
        for x in block:
            if x is not lead:
                roles[(x.truck, x.position)] = Role(follow=lead.truck)
    trucks = {}
    for r in routes:
        arr = [float(earliest[v]) for v in lay.arr[r.truck]]
        dep = [float(earliest[v]) for v in lay.dep[r.truck]]
        wait = [max(d - a, 0.0) for a, d in zip(arr, dep)]
        rl = tuple(roles.get((r.truck, p), ALONE_ROLE) for p in range(len(r.path) - 1))
        trucks[r.truck] = TruckSchedule(tuple(arr), tuple(wait), rl)
    return Schedule(trucks, method=method, savings=savings, exact=exact)


def _apply_block(tn, lay, block) -> bool:
    first = block[0]
    u = lay.dep[first.truck][first.position]
    return all(tn.equate(u, lay.dep[x.truck][x.position]) for x in block[1:])


def _greedy_blocks(shared, tn, lay, L):
    base = tn.earliest()

    def dep_time(x):
        return base[lay.dep[x.truck][x.position]]

    order = sorted(shared, key=lambda a: (min(dep_time(x) for x in shared[a]), a))
    blocks = []
    for arc in order:
        now = tn.earliest()
        pending = sorted(shared[arc], key=lambda x: (now[lay.dep[x.truck][x.position]], x.truck, x.position))
        while pending:
            block = [pending[0]]
            rest = []
            for x in pending[1:]:
                gain = block_value(block + [x]) - block_value(block)
                if len(block) >= L or x.truck in {b.truck for b in block} or gain <= EPS:
                    rest.append(x)
                    continue
                trial = tn.copy()
                if _apply_block(trial, lay, [block[0], x]):
                    tn = trial
                    block.append(x)
                else:
                    rest.append(x)
            blocks.append(block)
            pending = rest
    return blocks, tn


def schedule_greedy(routes: Sequence[RoutePlan], instance: ProblemInstance) -> Schedule:
    """Earliest-start schedule with platoons merged greedily arc by arc.

    Shared arcs are visited in order of their earliest possible departure.
    On each arc, traversals are merged into the current platoon while the
    platoon has room, the truck is not already in it, fuel is saved and all
    time windows still hold.

    Raises:
        Infeasible: if the routes cannot meet their windows even alone.
    """
    routes = [r for r in routes if len(r.path) > 1]
    tn, lay = base_network(routes, instance)
    shared = traversals(routes, instance)
    blocks, tn = _greedy_blocks(shared, tn, lay, instance.params.L)
    return _assemble(routes, instance, tn, lay, blocks, "greedy", False)


def _partitions(items: list, L: int):
    """Set partitions into blocks of size <= L with no truck repeated."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(min(L, len(items)) - 1, -1, -1):
        for mates in itertools.combinations(rest, k):
            trucks = {first.truck, *(m.truck for m in mates)}
            if len(trucks) != k + 1:
                continue
            remaining = [x for x in rest if x not in mates]
            for tail in _partitions(remaining, L):
                yield [[first, *mates], *tail]


class _Budget(Exception):
    pass


def schedule_exact(
    routes: Sequence[RoutePlan],
    instance: ProblemInstance,
    node_budget: int = DEFAULT_NODE_BUDGET,
    max_trucks: int = EXACT_MAX_TRUCKS,
    max_shared_arcs: int = EXACT_MAX_SHARED_ARCS,
) -> Schedule:
    """Schedule maximising total platoon savings, by branch and bound.

    Each shared arc is a decision level whose options are the partitions of
    its traversals into platoons, tried in order of decreasing savings. A
    branch is cut when its savings plus the best option of every remaining
    arc cannot beat the incumbent, or when its platoon equalities make some
    time window unreachable. The greedy schedule seeds the incumbent; if
    ``node_budget`` branch nodes are spent, that incumbent is returned with
    ``exact=False``.

    Raises:
        Infeasible: if the routes cannot meet their windows even alone.
        SizeLimitExceeded: above the truck or shared-arc caps.
    """
    routes = [r for r in routes if len(r.path) > 1]
    if len(routes) > max_trucks:
        raise SizeLimitExceeded(f"{len(routes)} trucks exceeds the exact cap of {max_trucks}")
    base, lay = base_network(routes, instance)
    shared = traversals(routes, instance)
    if len(shared) > max_shared_arcs:
        raise SizeLimitExceeded(f"{len(shared)} shared arcs exceeds the exact cap of {max_shared_arcs}")
    L = instance.params.L

    greedy_blocks, _ = _greedy_blocks(shared, base.copy(), lay, L)
    best_value = sum(block_value(b) for b in greedy_blocks)
    best_blocks = greedy_blocks

    arcs = sorted(shared)
    options = []
    for a in arcs:
        parts = [(sum(block_value(b) for b in part), part) for part in _partitions(list(shared[a]), L)]
        parts.sort(key=lambda vp: -vp[0])
        options.append(parts)
    tail_bound = np.zeros(len(arcs) + 1)
    for i in range(len(arcs) - 1, -1, -1):
        tail_bound[i] = tail_bound[i + 1] + options[i][0][0]

    nodes = 0
    chosen: list = []

    def dfs(level, tn, value):
        nonlocal nodes, best_value, best_blocks
        nodes += 1
        if nodes > node_budget:
            raise _Budget
        if level == len(arcs):
            if value > best_value + EPS:
                best_value = value
                best_blocks = [b for part in chosen for b in part]
            return
        for v, part in options[level]:
            if value + v + tail_bound[level + 1] <= best_value + EPS:
                break
            trial = tn.copy()
            if all(_apply_block(trial, lay, b) for b in part if len(b) > 1):
                chosen.append(part)
                dfs(level + 1, trial, value + v)
                chosen.pop()

    exact = True
    try:
        dfs(0, base, 0.0)
    except _Budget:
        exact = False
        log.warning("exact scheduler hit its node budget (%d); keeping best schedule found", node_budget)
    final = base.copy()
    for b in best_blocks:
        if len(b) > 1 and not _apply_block(final, lay, b):  # pragma: no cover
            raise AssertionError("incumbent platoon set became inconsistent")
    method = "exact" if exact else "exact-budget"
    return _assemble(routes, instance, final, lay, best_blocks, method, exact)


def schedule_routes(routes, instance, method: str = "auto", node_budget: int = DEFAULT_NODE_BUDGET) -> Schedule:
    """Dispatch to the exact or greedy scheduler; ``auto`` uses exact when it fits."""
    if method == "greedy":
        return schedule_greedy(routes, instance)
    if method == "exact":
        return schedule_exact(routes, instance, node_budget)
    if method != "auto":
        raise ValueError(f"unknown scheduler {method!r}")
    try:
        return schedule_exact(routes, instance, node_budget)
    except SizeLimitExceeded:
        return schedule_greedy(routes, instance)


def extract_platoon_sets(schedule: Schedule, routes: Sequence[RoutePlan]) -> dict[tuple[int, tuple[int, int]], int]:
    """Platoon size per ``(truck, arc)``; 1 for trucks riding alone.

    A truck that traverses the same arc twice reports its larger platoon.
    """
    size = {}
    for r in routes:
        for a in r.arcs:
            size[(r.truck, a)] = 1
    for arc, members in schedule.platoons(routes):
        for truck, _ in members:
            size[(truck, arc)] = max(size.get((truck, arc), 1), len(members))
    return size
