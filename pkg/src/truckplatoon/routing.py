"""Per-truck tour construction by weighted insertion, and expansion of tours
into road-network paths under per-truck link costs."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .instance import CustomerDemand, Parameters
from .network import DEPOT, shortest_path_under
from .solution import RoutePlan, compute_load_profile

__all__ = ["build_route", "seed_customer", "insertion_delta", "expand_route", "compute_load_profile"]


def insertion_delta(dist, j: int, r: int, h: int, p_h: float, q_r: float, params: Parameters) -> float:
    """Weighted detour of inserting ``r`` between consecutive ``j`` and ``h``.

    ``p_h`` is the load carried after departing ``h`` in the current tour.
    """
    eta, gamma = params.eta, params.gamma
    return (
        dist[j, r] * (eta * p_h + eta * q_r + gamma)
        + dist[r, h] * (eta * p_h + gamma)
        - dist[j, h] * (eta * p_h + gamma)
    )


def _loads_after(tour: Sequence[int], q: Mapping[int, float]) -> list[float]:
    """Load after departing each tour position (depot start holds everything)."""
    load = sum(q[c] for c in tour[1:-1])
    out = []
    for v in tour:
        if v != DEPOT:
            load -= q[v]
        out.append(max(load, 0.0) if abs(load) > 1e-12 else 0.0)
    out[-1] = 0.0
    return out


def seed_customer(customers: Sequence[CustomerDemand], dist, params: Parameters) -> int:
    """The customer whose solo round trip weighs most on the truck's energy.

    Minimises ``(eta*Q + gamma - eta*q_i) * t_{0,i}``: heavy, close customers
    come first. Ties go to the smallest node id.
    """
    eta, gamma, Q = params.eta, params.gamma, params.Q
    best = min(customers, key=lambda c: ((eta * Q + gamma - eta * c.q) * dist[DEPOT, c.node], c.node))
    return best.node


def build_route(customers: Sequence[CustomerDemand], dist, params: Parameters) -> tuple[int, ...]:
    """Order one truck's customers into a depot-to-depot tour.

    The seed is the customer with the smallest weighted depot distance. Each
    later step picks the unrouted customer nearest to the subtour (weighted by
    the load the truck would still carry) and inserts it at the cheapest slot
    among those that keep every window reachable when driving shortest paths
    without platoon waits; if no slot does, the cheapest slot overall. Ties
    go to the smallest node id.

    Returns:
        The tour ``(0, c1, ..., cn, 0)``.
    """
    if not customers:
        return (DEPOT, DEPOT)
    eta, gamma, Q = params.eta, params.gamma, params.Q
    q = {c.node: c.q for c in customers}
    windows = {c.node: (c.t_ea, c.t_ld) for c in customers}
    left = sorted(q)
    seed = seed_customer(customers, dist, params)
    tour = [DEPOT, seed, DEPOT]
    left.remove(seed)
    while left:
        routed = sum(q[c] for c in tour[1:-1])
        members = sorted(set(tour))

        def select_key(r):
            t_sub = min(dist[r, v] for v in members)
            return ((eta * Q + gamma - eta * q[r] - eta * routed) * t_sub, r)

        r = min(left, key=select_key)
        after = _loads_after(tour, q)
        deltas = [
            insertion_delta(dist, tour[s], r, tour[s + 1], after[s + 1], q[r], params)
            for s in range(len(tour) - 1)
        ]
        ok = [_reachable(tour[: s + 1] + [r] + tour[s + 1:], windows, dist) for s in range(len(deltas))]
        if any(ok):
            deltas = [d if good else np.inf for d, good in zip(deltas, ok)]
        slot = int(np.argmin(deltas))
        tour.insert(slot + 1, r)
        left.remove(r)
    return tuple(tour)


def _reachable(tour, windows, dist) -> bool:
    """Whether a tour meets every latest departure when driven along shortest paths."""
    t = 0.0
    for a, b in zip(tour[:-1], tour[1:]):
        if b == DEPOT:
            continue
        t_ea, t_ld = windows[b]
        t = max(t + dist[a, b], t_ea)
        if t > t_ld + 1e-9:
            return False
    return True


def split_unreachable(customers: Sequence[CustomerDemand], dist, params: Parameters) -> list[tuple[int, ...]]:
    """Tours for a truck's customers, split where one tour cannot meet every window.

    The pairwise window test ignores the drive out from the depot, so a group
    that passes it may still be unserviceable by one truck. The built tour is
    walked in order; customers whose window is no longer reachable move to a
    further truck, and the kept ones stay in their order (dropping a stop
    never delays later ones on shortest-path times).
    """
    tour = build_route(customers, dist, params)
    windows = {c.node: (c.t_ea, c.t_ld) for c in customers}
    if _reachable(tour, windows, dist):
        return [tour]
    kept, moved = [DEPOT], []
    for v in tour[1:-1]:
        if _reachable(kept + [v, DEPOT], windows, dist):
            kept.append(v)
        else:
            moved.append(v)
    by_node = {c.node: c for c in customers}
    return [(*kept, DEPOT)] + split_unreachable([by_node[v] for v in moved], dist, params)


def expand_route(
    truck: int,
    sequence: Sequence[int],
    link_costs: np.ndarray,
    demands: Mapping[int, float],
) -> RoutePlan:
    """Join consecutive tour nodes by cheapest paths under ``link_costs``.

    Raises:
        DisconnectedNetwork: if some leg has no path.
    """
    path = [sequence[0]]
    stops = []
    for a, b in zip(sequence[:-1], sequence[1:]):
        arcs, _ = shortest_path_under(link_costs, a, b)
        path.extend(j for _, j in arcs)
        if b != DEPOT:
            stops.append(len(path) - 1)
    customers = [v for v in sequence if v != DEPOT]
    return RoutePlan.build(truck, customers, path, stops, demands)
