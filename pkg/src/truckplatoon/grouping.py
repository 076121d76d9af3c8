"""Customer grouping by time-window compatibility and knapsack truck loading."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DemandExceedsCapacity
from .instance import CustomerDemand, Parameters
from .network import DEPOT


@dataclass(frozen=True)
class CustomerGroup:
    members: tuple[CustomerDemand, ...]

    @property
    def nodes(self) -> list[int]:
        return [c.node for c in self.members]


@dataclass
class TruckAssignment:
    """Customer lists per truck, in the order they were selected."""

    trucks: list[list[int]]
    loads: list[float]

    def extend(self, other: "TruckAssignment") -> None:
        self.trucks.extend(other.trucks)
        self.loads.extend(other.loads)


def tw_feasible(a: CustomerDemand, b: CustomerDemand, dist) -> bool:
    """Whether one truck could serve both customers in some order.

    True when at least one service order leaves enough time between the
    first customer's earliest arrival and the second's latest departure to
    cover the travel time in that direction.
    """
    a_then_b = b.t_ld - a.t_ea >= dist[a.node, b.node]
    b_then_a = a.t_ld - b.t_ea >= dist[b.node, a.node]
    return bool(a_then_b or b_then_a)


def group_customers(customers: Sequence[CustomerDemand], dist) -> list[CustomerGroup]:
    """Greedy first-fit grouping in input order.

    A group is opened with the first unassigned customer; every later
    unassigned customer compatible with all current members joins it.
    """
    left = list(customers)
    groups = []
    while left:
        members = [left[0]]
        rest = []
        for c in left[1:]:
            if all(tw_feasible(c, m, dist) for m in members):
                members.append(c)
            else:
                rest.append(c)
        groups.append(CustomerGroup(tuple(members)))
        left = rest
    return groups


def discretize_capacity(demands: Sequence[float], Q: float) -> int:
    """Smallest power-of-ten scale up to 100 making demands and Q integral.

    Demands finer than 0.01 t are rounded to the nearest 0.01 t.
    """
    values = [*demands, Q]
    for scale in (1, 10, 100):
        if all(abs(v * scale - round(v * scale)) < 1e-9 for v in values):
            return scale
    return 100


def _gain(order: Sequence[CustomerDemand], i: int, dist, t_max: float) -> float:
    prev = DEPOT if i == 0 else order[i - 1].node
    return t_max + 1.0 - float(dist[prev, order[i].node])


def dp_table(order: Sequence[CustomerDemand], dist, t_max: float, Q: float, scale: int):
    """Fill the knapsack value table.

    Returns ``(F, take)`` where ``F[i, c]`` is the best value using the first
    ``i`` customers within scaled capacity ``c`` and ``take[i, c]`` records
    whether customer ``i`` was included in that optimum.
    """
    n = len(order)
    cap = int(round(Q * scale))
    F = np.zeros((n + 1, cap + 1))
    take = np.zeros((n + 1, cap + 1), dtype=bool)
    for i in range(1, n + 1):
        w = int(round(order[i - 1].q * scale))
        F[i] = F[i - 1]
        if w <= cap:
            cand = F[i - 1, : cap + 1 - w] + _gain(order, i - 1, dist, t_max)
            better = cand > F[i, w:]
            F[i, w:] = np.where(better, cand, F[i, w:])
            take[i, w:] = better
    return F, take


def knapsack_assign(
    group: Sequence[CustomerDemand] | CustomerGroup,
    dist,
    t_max: float,
    params: Parameters,
) -> TruckAssignment:
    """Fill trucks one after another from a group of customers.

    Each round solves the knapsack over the remaining customers (re-indexed
    contiguously in their current order), loads the selected subset onto a
    new truck and removes it from the pool.

    Raises:
        DemandExceedsCapacity: if a single demand exceeds the truck capacity.
    """
    members = list(group.members if isinstance(group, CustomerGroup) else group)
    for c in members:
        if c.q > params.Q + 1e-9:
            raise DemandExceedsCapacity(f"customer {c.node}: q={c.q} exceeds Q={params.Q}")
    scale = discretize_capacity([c.q for c in members], params.Q)
    cap = int(round(params.Q * scale))
    out = TruckAssignment([], [])
    while members:
        F, take = dp_table(members, dist, t_max, params.Q, scale)
        chosen = []
        c = cap
        for i in range(len(members), 0, -1):
            if take[i, c]:
                chosen.append(i - 1)
                c -= int(round(members[i - 1].q * scale))
        chosen.reverse()
        picked = [members[i] for i in chosen]
        out.trucks.append([m.node for m in picked])
        out.loads.append(sum(m.q for m in picked))
        keep = set(chosen)
        members = [m for i, m in enumerate(members) if i not in keep]
    return out


def assign_trucks(customers: Sequence[CustomerDemand], dist, t_max: float, params: Parameters) -> TruckAssignment:
    """Group customers, then load each group's trucks; groups merge in index order."""
    out = TruckAssignment([], [])
    for g in group_customers(customers, dist):
        out.extend(knapsack_assign(g, dist, t_max, params))
    return out
