"""Exhaustive optimum for tiny instances, as a reference for the heuristic and
the exact model.

Every split of the customers among trucks, every visiting order and every
admissible road path per truck is tried, and each combination is scheduled
exactly. Two route semantics are available:

``simple``
    Each truck drives a simple cycle from the depot that enters no customer
    it does not serve, matching the exact model's one-visit rows.
``walk``
    Each leg between consecutive stops is any walk, so trucks may revisit
    nodes and pass through other trucks' customers, matching the heuristic's
    path expansion. Legs are limited to a provable length bound: a detour
    longer than ``rho * shortest`` can always be replaced by the shortest
    path without raising the total cost, where
    ``rho = alpha / ((1 - beta) * alpha - beta * r_max)`` and ``r_max`` is
    the full-load energy rate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .cost import load_rate
from .errors import Infeasible, InstanceInvalid
from .evaluate import evaluate_solution
from .instance import ProblemInstance
from .network import DEPOT
from .scheduling import base_network, schedule_exact, traversals
from .solution import RoutePlan, Solution

SIMPLE = "simple"
WALK = "walk"


@dataclass
class OracleResult:
    cost: float
    solution: Solution | None
    combos_scheduled: int


def _set_partitions(items: list, max_blocks: int) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest, max_blocks):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        if len(part) < max_blocks:
            yield [[first]] + part


def _simple_cycles(instance, own: set[int], banned: set[int]) -> Iterator[list[int]]:
    """Simple depot cycles visiting every node of ``own`` and none of ``banned``."""
    succ = instance.network.successors()

    def dfs(path, seen):
        u = path[-1]
        for v in succ[u]:
            if v == DEPOT:
                if own <= seen:
                    yield path + [DEPOT]
            elif v not in seen and v not in banned:
                seen.add(v)
                yield from dfs(path + [v], seen)
                seen.discard(v)

    yield from dfs([DEPOT], set())


def _walks(instance, a: int, b: int, limit: float) -> list[list[int]]:
    succ = instance.network.successors()
    times = instance.times
    out = []

    def dfs(path, spent):
        u = path[-1]
        if u == b and len(path) > 1:
            out.append(list(path))
        for v in succ[u]:
            nt = spent + times[u, v]
            if nt <= limit + 1e-9:
                path.append(v)
                dfs(path, nt)
                path.pop()

    if a == b:
        return [[a]]
    dfs([a], 0.0)
    return out


def detour_factor(instance: ProblemInstance) -> float:
    p = instance.params
    denom = (1.0 - p.beta) * p.alpha - p.beta * load_rate(p.Q, p)
    if denom <= 0:
        raise InstanceInvalid("beta too large for a finite detour bound")
    return p.alpha / denom if p.alpha > 0 else 1.0


def candidate_routes(instance: ProblemInstance, truck: int, group: list[int], semantics: str) -> list[RoutePlan]:
    """All admissible routes of one truck serving ``group``, cheapest solo energy first."""
    demands = {c: instance.demand(c) for c in group}
    others = set(instance.network.customer_nodes) - set(group)
    plans = []
    if semantics == SIMPLE:
        for cyc in _simple_cycles(instance, set(group), others):
            order = [v for v in cyc if v in demands]
            stops = [cyc.index(c) for c in order]
            plans.append(RoutePlan.build(truck, order, cyc, stops, demands))
    elif semantics == WALK:
        rho = detour_factor(instance)
        dist = instance.dist
        cache: dict[tuple[int, int], list[list[int]]] = {}
        for perm in itertools.permutations(sorted(group)):
            seq = [DEPOT, *perm, DEPOT]
            legs = []
            for a, b in zip(seq[:-1], seq[1:]):
                if (a, b) not in cache:
                    cache[a, b] = _walks(instance, a, b, rho * dist[a, b])
                legs.append(cache[a, b])
            for choice in itertools.product(*legs):
                path = [DEPOT]
                stops = []
                for leg in choice:
                    path += leg[1:]
                    stops.append(len(path) - 1)
                plans.append(RoutePlan.build(truck, list(perm), path, stops[:-1], demands))
    else:
        raise ValueError(f"unknown semantics {semantics!r}")
    feasible = []
    for plan in plans:
        try:
            base_network([plan], instance)
        except Infeasible:
            continue
        feasible.append((_solo_energy(plan, instance), plan))
    feasible.sort(key=lambda ep: (ep[0], ep[1].path))
    return [p for _, p in feasible]


def _solo_energy(plan: RoutePlan, instance) -> float:
    p = instance.params
    times = instance.times
    return sum(times[a] * load_rate(y, p) for a, y in zip(plan.arcs, plan.loads))


def brute_force_optimum(instance: ProblemInstance, trucks: int | None = None, semantics: str = SIMPLE) -> OracleResult:
    """Cheapest total cost over every assignment, order, route and schedule.

    Intended for at most three customers on graphs of a handful of nodes.
    """
    p = instance.params
    fleet = len(instance.customers) if trucks is None else trucks
    customers = sorted(instance.network.customer_nodes)
    best_cost = float("inf") if customers else 0.0
    best_sol = None if customers else Solution((), _empty_schedule())
    scheduled = 0
    beta_floor = 1.0 - p.beta
    for part in _set_partitions(customers, fleet):
        if any(sum(instance.demand(c) for c in g) > p.Q + 1e-9 for g in part):
            continue
        cands = [candidate_routes(instance, k, g, semantics) for k, g in enumerate(part)]
        if any(not c for c in cands):
            continue
        dispatch = p.c1 * len(part)
        mins = [beta_floor * _solo_energy(c[0], instance) for c in cands]

        def dfs(level, chosen, solo_sum):
            nonlocal best_cost, best_sol, scheduled
            if level == len(cands):
                shared = traversals(chosen, instance)
                bound = sum(max(x.saving for x in tr) * (len(tr) - 1) for tr in shared.values())
                if dispatch + p.c2 * (solo_sum - bound) >= best_cost - 1e-9:
                    return
                try:
                    sched = schedule_exact(chosen, instance, max_trucks=len(chosen), max_shared_arcs=10**6)
                except Infeasible:
                    return
                scheduled += 1
                sol = Solution(tuple(chosen), sched)
                cost = evaluate_solution(instance, sol)
                if cost.total < best_cost - 1e-9:
                    best_cost = cost.total
                    best_sol = Solution(sol.routes, sched, cost, {"semantics": semantics})
                return
            rest = sum(mins[level + 1:])
            for plan in cands[level]:
                e = _solo_energy(plan, instance)
                if dispatch + p.c2 * (beta_floor * (solo_sum + e) + rest) >= best_cost - 1e-9:
                    break
                dfs(level + 1, chosen + [plan], solo_sum + e)

        dfs(0, [], 0.0)
    return OracleResult(best_cost, best_sol, scheduled)


def _empty_schedule():
    from .solution import Schedule

    return Schedule({}, method="empty", exact=True)
