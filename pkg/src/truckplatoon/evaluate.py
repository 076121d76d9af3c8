"""First-principles cost evaluation and feasibility checking of solutions.

Both functions look only at the solution itself (routes, times, roles) and
the instance; they never consult how the solution was produced.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .cost import FOLLOWER, LEADER, ArcCost, CostBreakdown, arc_energy
from .errors import MalformedSolution
from .instance import ProblemInstance
from .network import DEPOT
from .solution import RoutePlan, Solution

TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    family: str
    where: tuple
    detail: str

    def __str__(self):
        return f"[{self.family}] {self.where}: {self.detail}"


def true_loads(route: RoutePlan, instance: ProblemInstance) -> tuple[float, ...]:
    demands = {c: instance.demand(c) for c in route.customers}
    return RoutePlan.build(route.truck, route.customers, route.path, route.stops, demands).loads


def evaluate_solution(instance: ProblemInstance, solution: Solution) -> CostBreakdown:
    """Dispatch, energy and total cost recomputed from scratch.

    Loads are re-derived from the instance demands and the served stops, so a
    solution cannot understate its own weight.

    Raises:
        MalformedSolution: a role is both leader and follower, or a route
            uses an arc that is not in the network.
    """
    p = instance.params
    times = instance.times
    dispatch = 0.0
    trucks = 0
    ledger = []
    for route in solution.routes:
        if len(route.path) <= 1:
            continue
        trucks += 1
        dispatch += p.c1
        ts = solution.schedule.trucks.get(route.truck)
        if ts is None or len(ts.roles) != len(route.path) - 1:
            raise MalformedSolution(f"truck {route.truck}: schedule does not cover its path")
        loads = true_loads(route, instance)
        for pos, (i, j) in enumerate(route.arcs):
            t = times[i, j]
            if not np.isfinite(t):
                raise MalformedSolution(f"truck {route.truck} uses missing arc ({i},{j})")
            role = ts.roles[pos].kind
            ledger.append(ArcCost((i, j), route.truck, pos, role, loads[pos],
                                  arc_energy(t, loads[pos], role, p)))
    energy = float(sum(a.cost for a in ledger))
    return CostBreakdown(dispatch, energy, dispatch + p.c2 * energy, trucks, tuple(ledger))


def check_feasibility(instance: ProblemInstance, solution: Solution, tol: float = TOL) -> list[Violation]:
    """Every violated constraint family, with indices. Empty means feasible."""
    out: list[Violation] = []
    p = instance.params
    times = instance.times
    served = defaultdict(list)
    departures: dict[tuple[int, int], float] = {}

    for route in solution.routes:
        k = route.truck
        path = route.path
        if len(path) <= 1:
            if route.customers:
                out.append(Violation("flow", (k,), "customers assigned to a truck with no path"))
            continue
        if path[0] != DEPOT or path[-1] != DEPOT:
            out.append(Violation("flow", (k,), "path must start and end at the depot"))
        for pos, (i, j) in enumerate(route.arcs):
            if not np.isfinite(times[i, j]):
                out.append(Violation("flow", (k, i, j), "arc not in network"))
        if len(route.stops) != len(route.customers) or list(route.stops) != sorted(route.stops):
            out.append(Violation("visit", (k,), "stops must list one increasing position per customer"))
        for c, s in zip(route.customers, route.stops):
            served[c].append(k)
            if not 0 < s < len(path) - 1 + (1 if path[-1] != DEPOT else 0) or path[s] != c:
                out.append(Violation("visit", (k, c), f"customer not at path position {s}"))
            if c not in instance.by_node:
                out.append(Violation("single_serve", (c,), "not a customer node"))

        expected = true_loads(route, instance) if all(c in instance.by_node for c in route.customers) else None
        if expected is not None:
            if expected and expected[0] > p.Q + tol:
                out.append(Violation("capacity", (k,), f"initial load {expected[0]:g} exceeds Q={p.Q:g}"))
            if len(route.loads) != len(expected) or any(
                abs(a - b) > tol for a, b in zip(route.loads, expected)
            ):
                out.append(Violation("load", (k,), "load profile inconsistent with served demands"))

        ts = solution.schedule.trucks.get(k)
        if ts is None or len(ts.arrival) != len(path) or len(ts.wait) != len(path) \
                or len(ts.roles) != len(path) - 1:
            out.append(Violation("time", (k,), "schedule does not match path length"))
            continue
        if ts.arrival[0] < -tol:
            out.append(Violation("time", (k, path[0]), "negative start time"))
        for pos in range(len(path)):
            if ts.wait[pos] < -tol:
                out.append(Violation("time", (k, path[pos]), f"negative wait at position {pos}"))
        for pos, (i, j) in enumerate(route.arcs):
            t = times[i, j]
            if np.isfinite(t) and ts.arrival[pos + 1] < ts.departure(pos) + t - tol:
                out.append(Violation("time", (k, i, j), "arrival earlier than departure plus travel time"))
            departures[(k, pos)] = ts.departure(pos)
            role = ts.roles[pos]
            if role.lead and role.follow is not None:
                out.append(Violation("role", (k, i, j), "truck both leads and follows"))
        for c, s in zip(route.customers, route.stops):
            d = instance.by_node.get(c)
            if d is None or not 0 <= s < len(path):
                continue
            if ts.arrival[s] < d.t_ea - tol:
                out.append(Violation("window_ea", (k, c), f"arrival {ts.arrival[s]:.4f} < {d.t_ea:g}"))
            if ts.departure(s) > d.t_ld + tol:
                out.append(Violation("window_ld", (k, c), f"departure {ts.departure(s):.4f} > {d.t_ld:g}"))

    for c in instance.by_node:
        if len(served.get(c, [])) != 1:
            out.append(Violation("single_serve", (c,), f"served {len(served.get(c, []))} times"))

    out.extend(_platoon_violations(solution, departures, p.L, tol))
    return out


def _platoon_violations(solution, departures, L, tol):
    out = []
    leaders = defaultdict(list)  # (arc, truck) -> [(pos, departure)]
    followers = []
    for route in solution.routes:
        ts = solution.schedule.trucks.get(route.truck)
        if ts is None or len(ts.roles) != len(route.path) - 1:
            continue
        for pos, arc in enumerate(route.arcs):
            role = ts.roles[pos]
            if role.lead:
                leaders[(arc, route.truck)].append((pos, departures[(route.truck, pos)]))
            if role.follow is not None and not role.lead:
                followers.append((arc, route.truck, pos, role.follow))
    size = defaultdict(int)
    for arc, k, pos, lead in followers:
        if lead == k:
            out.append(Violation("role", (k, *arc), "truck follows itself"))
            continue
        cands = leaders.get((arc, lead), [])
        if not cands:
            out.append(Violation("sync", (k, lead, *arc), "follows a truck that does not lead this arc"))
            continue
        dep = departures[(k, pos)]
        match = [c for c in cands if abs(c[1] - dep) <= tol]
        if not match:
            out.append(Violation("sync", (k, lead, *arc), "departure differs from its leader's"))
            continue
        size[(arc, lead, match[0][0])] += 1
    for (arc, lead, _), n in size.items():
        if n + 1 > L:
            out.append(Violation("platoon_size", (lead, *arc), f"platoon of {n + 1} exceeds L={L}"))
    return out


def structural_flags(instance: ProblemInstance, solution: Solution) -> list[str]:
    """Route features the exact model cannot represent.

    The exact model lets a truck enter each node at most once and never
    through another truck's customer. Walks produced by leg expansion may do
    both; they stay valid under the evaluator but are reported here.
    """
    flags = []
    owner = {c: r.truck for r in solution.routes for c in r.customers}
    for r in solution.routes:
        rev = r.revisits()
        if rev:
            flags.append(f"truck {r.truck} revisits nodes {rev}")
        foreign = sorted({v for v in r.path if v in owner and owner[v] != r.truck})
        if foreign:
            flags.append(f"truck {r.truck} passes through other trucks' customers {foreign}")
    return flags


def schedule_roles_summary(solution: Solution) -> dict[str, int]:
    counts = {LEADER: 0, FOLLOWER: 0}
    for ts in solution.schedule.trucks.values():
        for role in ts.roles:
            kind = role.kind
            if kind in counts:
                counts[kind] += 1
    return counts
