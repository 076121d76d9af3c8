"""Fuel and weight arithmetic shared by the evaluator, heuristics and schedulers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .instance import Parameters

ALONE = "alone"
LEADER = "leader"
FOLLOWER = "follower"


def load_rate(load: float, params: Parameters) -> float:
    """Energy per hour of travel at the given cargo load."""
    return params.alpha / params.gamma * (params.eta * load + params.gamma)


def arc_energy(t: float, load: float, role: str, params: Parameters) -> float:
    """Energy cost of one truck traversing one arc.

    Followers pay ``(1 - beta)`` of the solo cost; leaders pay the solo cost.
    """
    base = t * load_rate(load, params)
    if role == FOLLOWER:
        return (1.0 - params.beta) * base
    if role in (ALONE, LEADER):
        return base
    raise ValueError(f"unknown role {role!r}")


def follower_saving(t: float, load: float, params: Parameters) -> float:
    return params.beta * t * load_rate(load, params)


@dataclass(frozen=True)
class ArcCost:
    arc: tuple[int, int]
    truck: int
    position: int
    role: str
    load: float
    cost: float


@dataclass(frozen=True)
class CostBreakdown:
    """Dispatch and energy cost of a solution.

    ``total = dispatch + c2 * energy``; the ledger sums to ``energy``.
    """

    dispatch: float
    energy: float
    total: float
    trucks: int = 0
    ledger: tuple[ArcCost, ...] = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "dispatch": self.dispatch,
            "energy": self.energy,
            "trucks": self.trucks,
        }
