"""Problem data: cost/physics parameters, customer demands and instances."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DemandExceedsCapacity, InstanceInvalid
from .network import DEPOT, DistMatrix, RoadNetwork, all_pairs_shortest_paths

# km/h used to turn kilometre arc labels into hours
DEFAULT_SPEED_KMH = 88.5


@dataclass(frozen=True)
class Parameters:
    """Cost and vehicle parameters. Defaults are the base-case settings."""

    c1: float = 271.0
    c2: float = 1.0
    alpha: float = 30.7
    gamma: float = 10.0
    eta: float = 0.1
    beta: float = 0.1
    L: int = 4
    Q: float = 20.0
    big_M: float | None = None

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise InstanceInvalid(f"beta must lie in [0, 1), got {self.beta}")
        if int(self.L) != self.L or self.L < 1:
            raise InstanceInvalid(f"L must be an integer >= 1, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if not self.Q > 0:
            raise InstanceInvalid("Q must be positive")
        if not self.gamma > 0:
            raise InstanceInvalid("gamma must be positive")
        for name in ("eta", "c1", "c2", "alpha"):
            if getattr(self, name) < 0:
                raise InstanceInvalid(f"{name} must be nonnegative")

    def with_(self, **changes) -> "Parameters":
        return replace(self, **changes)

    @property
    def full_rate(self) -> float:
        """Energy per hour of a fully loaded truck."""
        return self.alpha / self.gamma * (self.eta * self.Q + self.gamma)


@dataclass(frozen=True)
class CustomerDemand:
    node: int
    q: float
    t_ea: float
    t_ld: float


@dataclass(frozen=True)
class ProblemInstance:
    """A road network, its customers and the parameter set."""

    network: RoadNetwork
    customers: tuple[CustomerDemand, ...]
    params: Parameters = field(default_factory=Parameters)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "customers", tuple(self.customers))
        nodes = [c.node for c in self.customers]
        if len(set(nodes)) != len(nodes):
            raise InstanceInvalid("each customer node may carry only one demand")
        if set(nodes) != set(self.network.customer_nodes):
            raise InstanceInvalid("customer list does not match network customer nodes")
        for c in self.customers:
            if not c.q > 0:
                raise InstanceInvalid(f"customer {c.node}: demand must be positive")
            if c.q > self.params.Q + 1e-9:
                raise DemandExceedsCapacity(f"customer {c.node}: q={c.q} exceeds Q={self.params.Q}")
            if not 0 <= c.t_ea <= c.t_ld:
                raise InstanceInvalid(f"customer {c.node}: need 0 <= t_ea <= t_ld")
        dist = self.dist  # raises DisconnectedNetwork
        for c in self.customers:
            if c.t_ld < dist[DEPOT, c.node] - 1e-9:
                raise InstanceInvalid(
                    f"customer {c.node}: t_ld={c.t_ld} is earlier than the depot travel time "
                    f"{dist[DEPOT, c.node]:.4g}"
                )
        if self.params.big_M is not None and self.params.big_M < self.min_big_M - 1e-9:
            raise InstanceInvalid(f"big_M must be at least {self.min_big_M}")

    @cached_property
    def dist(self) -> DistMatrix:
        return all_pairs_shortest_paths(self.network)

    @cached_property
    def times(self) -> np.ndarray:
        return self.network.time_matrix()

    @cached_property
    def by_node(self) -> dict[int, CustomerDemand]:
        return {c.node: c for c in self.customers}

    def demand(self, node: int) -> float:
        c = self.by_node.get(node)
        return 0.0 if c is None else c.q

    @property
    def min_big_M(self) -> float:
        t_ld = max((c.t_ld for c in self.customers), default=0.0)
        return t_ld + self.dist.t_max + 1.0

    @property
    def big_M(self) -> float:
        """Horizon constant for the big-M rows of the exact model.

        Besides the minimum safe horizon, the constant also covers a full
        simple path of the longest arcs after the latest window and the
        largest possible load gap.
        """
        if self.params.big_M is not None:
            return self.params.big_M
        horizon = max((max(c.t_ld, c.t_ea) for c in self.customers), default=0.0)
        longest_arc = max((t for _, _, t in self.network.arcs), default=0.0)
        path_bound = horizon + self.network.node_count * longest_arc + 1.0
        return max(self.min_big_M, path_bound, self.params.Q + 1.0)

    def with_params(self, **changes) -> "ProblemInstance":
        return replace(self, params=self.params.with_(**changes))

    def restricted_to(self, nodes) -> "ProblemInstance":
        """Same network and parameters, serving only the listed customers."""
        keep = [self.by_node[n] for n in nodes]
        net = replace(self.network, customer_nodes=frozenset(nodes))
        return ProblemInstance(net, tuple(keep), self.params, self.name)
