"""Route, schedule and solution containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .cost import ALONE, FOLLOWER, LEADER, CostBreakdown
from .errors import MalformedSolution


def compute_load_profile(customer_sequence: Sequence[int], demands: Mapping[int, float]) -> list[float]:
    """Load carried on each leg of a tour ``0 -> c1 -> ... -> cn -> 0``.

    The first entry is the full initial load, each later entry drops by the
    demand just served, and the last leg returns empty.
    """
    load = float(sum(demands[c] for c in customer_sequence))
    profile = [load]
    for c in customer_sequence:
        load -= demands[c]
        profile.append(0.0 if abs(load) < 1e-9 else load)
    return profile


@dataclass(frozen=True)
class RoutePlan:
    """One truck's tour expanded onto the road network.

    ``path`` is the node walk starting and ending at the depot, ``stops[i]``
    is the index in ``path`` where ``customers[i]`` is served and
    ``loads[p]`` is the cargo on arc ``path[p] -> path[p+1]``.
    """

    truck: int
    customers: tuple[int, ...]
    path: tuple[int, ...]
    stops: tuple[int, ...]
    loads: tuple[float, ...]

    @classmethod
    def build(cls, truck, customers, path, stops, demands) -> "RoutePlan":
        customers, path, stops = tuple(customers), tuple(path), tuple(stops)
        leg_loads = compute_load_profile(customers, demands)
        loads = []
        leg = 0
        for p in range(len(path) - 1):
            while leg < len(stops) and stops[leg] <= p:
                leg += 1
            loads.append(leg_loads[leg])
        return cls(truck, customers, path, stops, tuple(loads))

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return list(zip(self.path[:-1], self.path[1:]))

    @property
    def initial_load(self) -> float:
        return self.loads[0] if self.loads else 0.0

    def revisits(self) -> list[int]:
        """Nodes entered more than once (the final depot return excluded)."""
        seen: dict[int, int] = {}
        for v in self.path[1:-1]:
            seen[v] = seen.get(v, 0) + 1
        if self.path and self.path[0] in seen:
            seen[self.path[0]] += 1
        return sorted(v for v, n in seen.items() if n > 1)


@dataclass(frozen=True)
class Role:
    """Platoon role of one truck on one arc traversal."""

    lead: bool = False
    follow: int | None = None

    @property
    def kind(self) -> str:
        if self.lead and self.follow is not None:
            raise MalformedSolution("a truck cannot both lead and follow on the same arc")
        if self.lead:
            return LEADER
        if self.follow is not None:
            return FOLLOWER
        return ALONE

    def to_json(self):
        if self.lead and self.follow is not None:
            return {"lead": True, "follow": self.follow}
        if self.lead:
            return "leader"
        if self.follow is not None:
            return {"follower_of": self.follow}
        return "alone"

    @classmethod
    def from_json(cls, obj) -> "Role":
        if obj == "alone":
            return cls()
        if obj == "leader":
            return cls(lead=True)
        if isinstance(obj, dict):
            if "follower_of" in obj:
                return cls(follow=int(obj["follower_of"]))
            return cls(lead=bool(obj.get("lead", False)),
                       follow=None if obj.get("follow") is None else int(obj["follow"]))
        raise MalformedSolution(f"unrecognised role {obj!r}")


ALONE_ROLE = Role()
LEADER_ROLE = Role(lead=True)


@dataclass(frozen=True)
class TruckSchedule:
    """Arrival and wait per path position and role per arc of one truck."""

    arrival: tuple[float, ...]
    wait: tuple[float, ...]
    roles: tuple[Role, ...]

    def departure(self, p: int) -> float:
        return self.arrival[p] + self.wait[p]


@dataclass(frozen=True)
class Schedule:
    trucks: Mapping[int, TruckSchedule]
    method: str = ""
    savings: float = 0.0
    exact: bool = False

    def platoons(self, routes: Sequence[RoutePlan]) -> list[tuple[tuple[int, int], list[tuple[int, int]]]]:
        """Platoons as ``(arc, [(truck, position), ...])`` with the leader first."""
        leaders = {}
        for r in routes:
            ts = self.trucks[r.truck]
            for p, role in enumerate(ts.roles):
                if role.lead:
                    leaders[(r.arcs[p], r.truck, round(ts.departure(p), 6))] = [(r.truck, p)]
        for r in routes:
            ts = self.trucks[r.truck]
            for p, role in enumerate(ts.roles):
                if role.follow is not None and not role.lead:
                    key = (r.arcs[p], role.follow, round(ts.departure(p), 6))
                    if key in leaders:
                        leaders[key].append((r.truck, p))
        return [(key[0], members) for key, members in leaders.items()]


@dataclass
class Solution:
    routes: tuple[RoutePlan, ...]
    schedule: Schedule
    cost: CostBreakdown | None = None
    info: dict = field(default_factory=dict)

    @property
    def trucks_used(self) -> int:
        return sum(1 for r in self.routes if len(r.path) > 1)

    def route_arcs(self) -> frozenset:
        """The union of traversed arcs, tagged by truck."""
        return frozenset((r.truck, a) for r in self.routes for a in r.arcs)
