"""Road network, all-pairs shortest paths and path reconstruction.

All travel times are in hours. The depot is always node 0.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DisconnectedNetwork, InstanceInvalid

DEPOT = 0
# absolute slack used when comparing path lengths built from float sums
TIE_EPS = 1e-9


@dataclass(frozen=True)
class RoadNetwork:
    """Directed road graph with travel-time arcs."""

    node_count: int
    customer_nodes: frozenset[int]
    arcs: tuple[tuple[int, int, float], ...]
    names: tuple[str, ...] | None = None
    depot: int = field(default=DEPOT, init=False)

    def __post_init__(self):
        object.__setattr__(self, "customer_nodes", frozenset(self.customer_nodes))
        object.__setattr__(self, "arcs", tuple((int(i), int(j), float(t)) for i, j, t in self.arcs))
        if self.node_count < 1:
            raise InstanceInvalid("node_count must be positive")
        if DEPOT in self.customer_nodes:
            raise InstanceInvalid("depot 0 cannot be a customer node")
        for c in self.customer_nodes:
            if not 0 <= c < self.node_count:
                raise InstanceInvalid(f"customer node {c} is not a valid node id")
        seen = set()
        for i, j, t in self.arcs:
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise InstanceInvalid(f"arc ({i},{j}) references an unknown node")
            if i == j:
                raise InstanceInvalid(f"self-loop arc ({i},{i})")
            if not t > 0 or not np.isfinite(t):
                raise InstanceInvalid(f"arc ({i},{j}) must have positive finite travel time, got {t}")
            if (i, j) in seen:
                raise InstanceInvalid(f"duplicate arc ({i},{j})")
            seen.add((i, j))
        if self.names is not None and len(self.names) != self.node_count:
            raise InstanceInvalid("names must list one label per node")

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def time_matrix(self) -> np.ndarray:
        """Arc travel times as a dense matrix; missing arcs are +inf."""
        m = np.full((self.node_count, self.node_count), np.inf)
        for i, j, t in self.arcs:
            m[i, j] = t
        return m

    def arc_set(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j, _ in self.arcs}

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.nodes]
        for i, j, _ in self.arcs:
            out[i].append(j)
        for lst in out:
            lst.sort()
        return out


@dataclass(frozen=True)
class DistMatrix:
    """Shortest-path travel times plus next-hop table for path recovery."""

    dist: np.ndarray
    next_hop: np.ndarray
    t_max: float

    def path(self, i: int, j: int) -> list[int]:
        """Node sequence of the stored shortest path from ``i`` to ``j``."""
        if i == j:
            return [i]
        if self.next_hop[i, j] < 0:
            raise DisconnectedNetwork(f"no path from {i} to {j}")
        nodes = [i]
        while nodes[-1] != j:
            nodes.append(int(self.next_hop[nodes[-1], j]))
        return nodes

    def __getitem__(self, key):
        return self.dist[key]


def all_pairs_shortest_paths(net: RoadNetwork) -> DistMatrix:
    """Floyd-Warshall over the whole network.

    Intermediate nodes are relaxed in increasing id order and only a strict
    improvement replaces a stored path, so among equal-length paths the one
    found through the smallest intermediate node id is kept.

    Raises:
        DisconnectedNetwork: if the depot and customers are not mutually
            reachable.
    """
    n = net.node_count
    dist = net.time_matrix()
    np.fill_diagonal(dist, 0.0)
    next_hop = np.full((n, n), -1, dtype=np.int64)
    finite = np.isfinite(dist)
    cols = np.broadcast_to(np.arange(n), (n, n))
    next_hop[finite] = cols[finite]
    for k in range(n):
        cand = dist[:, k, None] + dist[None, k, :]
        better = cand < dist - TIE_EPS
        if better.any():
            dist = np.where(better, cand, dist)
            next_hop = np.where(better, next_hop[:, k, None], next_hop)

    required = [DEPOT, *sorted(net.customer_nodes)]
    sub = dist[np.ix_(required, required)]
    if not np.isfinite(sub).all():
        a, b = np.argwhere(~np.isfinite(sub))[0]
        raise DisconnectedNetwork(f"node {required[a]} cannot reach node {required[b]}")
    t_max = float(dist[np.isfinite(dist)].max())
    return DistMatrix(dist=dist, next_hop=next_hop, t_max=t_max)


def _dijkstra(costs: np.ndarray, source: int, reverse: bool = False) -> np.ndarray:
    n = costs.shape[0]
    mat = costs.T if reverse else costs
    best = np.full(n, np.inf)
    best[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        row = mat[u]
        for v in np.flatnonzero(np.isfinite(row)):
            nd = d + row[v]
            if nd < best[v]:
                best[v] = nd
                heapq.heappush(heap, (nd, int(v)))
    return best


def shortest_path_under(
    costs: np.ndarray,
    source: int,
    target: int,
    forbidden: Iterable[int] = (),
) -> tuple[list[tuple[int, int]], float]:
    """Cheapest arc chain from ``source`` to ``target`` under ``costs``.

    ``costs[i, j]`` must be positive for every arc and +inf where there is no
    arc. Among equally cheap paths the lexicographically smallest node
    sequence is returned. Nodes in ``forbidden`` are never entered.
    """
    if source == target:
        return [], 0.0
    costs = np.asarray(costs, dtype=float)
    blocked = sorted(set(forbidden) - {source, target})
    if blocked:
        costs = costs.copy()
        costs[:, blocked] = np.inf
        costs[blocked, :] = np.inf
    to_target = _dijkstra(costs, target, reverse=True)
    total = to_target[source]
    if not np.isfinite(total):
        raise DisconnectedNetwork(f"no path from {source} to {target}")
    path = [source]
    spent = 0.0
    u = source
    while u != target:
        row = costs[u]
        slack = TIE_EPS * max(1.0, total)
        nxt = None
        for v in np.flatnonzero(np.isfinite(row)):
            if spent + row[v] + to_target[v] <= total + slack and int(v) not in path:
                nxt = int(v)
                break
        if nxt is None:  # pragma: no cover - guarded by positive costs
            raise DisconnectedNetwork(f"path reconstruction failed {source}->{target}")
        spent += row[nxt]
        path.append(nxt)
        u = nxt
    arcs = list(zip(path[:-1], path[1:]))
    return arcs, float(sum(costs[i, j] for i, j in arcs))


def path_nodes(arcs: Sequence[tuple[int, int]]) -> list[int]:
    if not arcs:
        return []
    return [arcs[0][0], *(j for _, j in arcs)]


def grid_network(rows: int, cols: int, edge_time: float, labels=None, customers=()) -> RoadNetwork:
    """Bidirectional rectangular grid; ``labels[r][c]`` gives node ids."""
    if labels is None:
        labels = [[r * cols + c for c in range(cols)] for r in range(rows)]
    arcs = []
    for r in range(rows):
        for c in range(cols):
            u = labels[r][c]
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr < rows and cc < cols:
                    v = labels[rr][cc]
                    arcs += [(u, v, edge_time), (v, u, edge_time)]
    return RoadNetwork(rows * cols, frozenset(customers), tuple(arcs))
