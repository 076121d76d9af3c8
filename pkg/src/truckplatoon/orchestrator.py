"""The iterative route-then-schedule loop.

Each iteration groups and loads customers, builds and expands one tour per
truck under that truck's current link costs, and schedules the routes. A
feasible schedule feeds platoon sizes back into the link costs so the next
routes gravitate toward arcs where platoons form; an infeasible one
reshuffles the customer order and resets the link costs.
"""

from __future__ import annotations

import hashlib
import logging
import random
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import Infeasible, NoFeasibleSolutionFound
from .evaluate import check_feasibility, evaluate_solution
from .grouping import assign_trucks
from .instance import ProblemInstance
from .routing import expand_route, split_unreachable
from .scheduling import DEFAULT_NODE_BUDGET, extract_platoon_sets, schedule_routes
from .solution import RoutePlan, Schedule, Solution

log = logging.getLogger(__name__)

IMPROVE_TOL = 1e-9


@dataclass
class SolverConfig:
    """Loop controls.

    ``iteration_limit`` gives reproducible runs independent of machine speed;
    ``probe`` enables the joint-detour look-ahead on link costs.
    """

    time_limit_s: float = 3600.0
    iteration_limit: int | None = None
    streak_limit: int = 10
    seed: int = 0
    platoon_size: int | None = None
    scheduler: str = "auto"
    node_budget: int = DEFAULT_NODE_BUDGET
    probe: bool = True
    warm_start: Solution | None = field(default=None, repr=False)

    def echo(self) -> dict:
        return {
            "time_limit_s": self.time_limit_s,
            "iteration_limit": self.iteration_limit,
            "streak_limit": self.streak_limit,
            "seed": self.seed,
            "platoon_size": self.platoon_size,
            "scheduler": self.scheduler,
            "node_budget": self.node_budget,
            "probe": self.probe,
        }


@dataclass
class IterationState:
    iteration: int
    costs: dict[int, np.ndarray]
    order: list
    rng: random.Random
    incumbent: Solution | None = None
    incumbent_cost: float = float("inf")
    streak: int = 0
    last_union: frozenset | None = None
    last_cause: str | None = None
    history: list[float] = field(default_factory=list)
    seen: set = field(default_factory=set)


def update_link_costs(routes: Sequence[RoutePlan], schedule: Schedule, instance: ProblemInstance) -> dict[int, np.ndarray]:
    """Presumed per-truck link costs for the next routing pass.

    On its own arcs a truck is charged its share of the platoon's zero-load
    cost, ``t * (1 + (m-1)(1-beta)) / m`` for a platoon of ``m``; on arcs only
    other trucks use, the follower cost ``(1-beta) t``; elsewhere ``t``.
    """
    beta = instance.params.beta
    times = instance.times
    sizes = extract_platoon_sets(schedule, routes)
    union = {a for r in routes for a in r.arcs}
    out = {}
    for r in routes:
        c = times.copy()
        own = set(r.arcs)
        for (i, j) in union - own:
            c[i, j] = (1.0 - beta) * times[i, j]
        for (i, j) in own:
            m = sizes[(r.truck, (i, j))]
            c[i, j] = times[i, j] * (1.0 + (m - 1) * (1.0 - beta)) / m
        out[r.truck] = c
    return out


def probe_joint_segments(sequences: dict[int, Sequence[int]], instance: ProblemInstance) -> dict[int, dict]:
    """Segments worth travelling together, per truck, as arc -> discounted cost.

    For every pair of legs of two different trucks, finds the segment
    ``m -> n`` that minimises the joint zero-load cost of both trucks
    detouring through it together (one of them following), and keeps it if
    that beats both trucks driving their legs directly. The segment's arcs
    are then priced at ``(2 - beta) / 2`` of their time for both trucks: the
    per-truck share of a two-truck platoon.
    """
    beta = instance.params.beta
    dm = instance.dist
    d = dm.dist
    times = instance.times
    legs = [(k, a, b) for k, seq in sequences.items() for a, b in zip(seq[:-1], seq[1:])]
    out: dict[int, dict] = {k: {} for k in sequences}
    share = (2.0 - beta) / 2.0
    for x in range(len(legs)):
        k1, a1, b1 = legs[x]
        for y in range(x + 1, len(legs)):
            k2, a2, b2 = legs[y]
            if k1 == k2:
                continue
            joint = d[a1, :, None] + d[a2, :, None] + d[None, :, b1] + d[None, :, b2] + (2.0 - beta) * d
            np.fill_diagonal(joint, np.inf)
            flat = int(np.argmin(joint))
            gain = d[a1, b1] + d[a2, b2] - joint.flat[flat]
            if not gain > IMPROVE_TOL * max(1.0, d[a1, b1] + d[a2, b2]):
                continue
            m, n = divmod(flat, d.shape[0])
            nodes = dm.path(m, n)
            for i, j in zip(nodes[:-1], nodes[1:]):
                for k in (k1, k2):
                    out[k][(i, j)] = share * times[i, j]
    return out


def _routes_for(state, instance, dm):
    params = instance.params
    assignment = assign_trucks(state.order, dm, dm.t_max, params)
    tours = [t for nodes in assignment.trucks
             for t in split_unreachable([instance.by_node[v] for v in nodes], dm, params)]
    sequences, routes = {}, []
    for k, seq in enumerate(tours):
        sequences[k] = seq
        costs = state.costs.get(k, instance.times)
        routes.append(expand_route(k, seq, costs, {v: instance.demand(v) for v in seq if v != 0}))
    return sequences, routes


def _next_costs(routes, sequences, schedule, instance, config):
    if instance.params.L <= 1 or instance.params.beta <= 0:
        # no platoon can form, so nothing is worth steering toward
        return {r.truck: instance.times for r in routes}
    costs = update_link_costs(routes, schedule, instance)
    if config.probe and instance.params.L > 1 and instance.params.beta > 0:
        for k, arcs in probe_joint_segments(sequences, instance).items():
            for (i, j), c in arcs.items():
                costs[k][i, j] = min(costs[k][i, j], c)
    return costs


def _same_costs(a: dict, b: dict) -> bool:
    if a.keys() != b.keys():
        return False
    return all(np.array_equal(a[k], b[k]) for k in a)


def _state_key(costs: dict, order) -> tuple:
    parts = tuple((k, hashlib.sha1(np.ascontiguousarray(costs[k]).tobytes()).hexdigest()) for k in sorted(costs))
    return parts, tuple(c.node for c in order)


def _consider(state, sol, cost):
    if cost < state.incumbent_cost - IMPROVE_TOL:
        state.incumbent = sol
        state.incumbent_cost = cost
        return True
    return False


def _warm(instance, config, state):
    sol = config.warm_start
    if sol is None:
        return
    candidates = [sol]
    try:
        sched = schedule_routes(list(sol.routes), instance, config.scheduler, config.node_budget)
        candidates.append(Solution(sol.routes, sched))
    except Infeasible:
        pass
    for cand in candidates:
        if not check_feasibility(instance, cand):
            cost = evaluate_solution(instance, cand)
            _consider(state, Solution(cand.routes, cand.schedule, cost, {}), cost.total)


def solve(instance: ProblemInstance, config: SolverConfig | None = None) -> Solution:
    """Run the loop and return the best feasible solution found.

    Stops at the wall-clock or iteration limit, after ``streak_limit``
    consecutive iterations without any change in the set of used arcs, as
    soon as the fed-back link costs reproduce themselves, or when the loop
    returns to an earlier state of link costs and customer order (every
    later iteration would then repeat earlier ones).

    Raises:
        NoFeasibleSolutionFound: if no iteration produced a feasible schedule.
    """
    config = config or SolverConfig()
    if config.platoon_size is not None:
        instance = instance.with_params(L=config.platoon_size)
    dm = instance.dist
    start = time.perf_counter()
    state = IterationState(0, {}, list(instance.customers), random.Random(config.seed))
    _warm(instance, config, state)
    stop = "time_limit"
    while True:
        if config.iteration_limit is not None and state.iteration >= config.iteration_limit:
            stop = "iteration_limit"
            break
        if state.iteration > 0 and time.perf_counter() - start >= config.time_limit_s:
            stop = "time_limit"
            break
        state.iteration += 1
        sequences, routes = _routes_for(state, instance, dm)
        union = frozenset(a for r in routes for a in r.arcs)
        state.streak = state.streak + 1 if union == state.last_union else 0
        state.last_union = union
        try:
            schedule = schedule_routes(routes, instance, config.scheduler, config.node_budget)
        except Infeasible as e:
            state.last_cause = e.cause or str(e)
            log.debug("iteration %d infeasible: %s", state.iteration, state.last_cause)
            state.rng.shuffle(state.order)
            state.costs = {}
            state.history.append(state.incumbent_cost)
            if state.streak + 1 >= config.streak_limit:
                stop = "streak"
                break
            continue
        sol = Solution(tuple(routes), schedule)
        cost = evaluate_solution(instance, sol)
        _consider(state, Solution(sol.routes, schedule, cost, {}), cost.total)
        state.history.append(state.incumbent_cost)
        new_costs = _next_costs(routes, sequences, schedule, instance, config)
        if state.costs and _same_costs(new_costs, state.costs) or (
            not state.costs and _same_costs(new_costs, {k: instance.times for k in new_costs})
        ):
            stop = "fixed_point"
            break
        key = _state_key(new_costs, state.order)
        if key in state.seen:
            # feasible iterations draw no random numbers, so the loop would replay
            stop = "cycle"
            break
        state.seen.add(key)
        state.costs = new_costs
        if state.streak + 1 >= config.streak_limit:
            stop = "streak"
            break
    if state.incumbent is None:
        raise NoFeasibleSolutionFound(
            f"no feasible schedule in {state.iteration} iterations; last cause: {state.last_cause}",
            last_cause=state.last_cause,
        )
    info = {
        "iterations": state.iteration,
        "stop_reason": stop,
        "wall_time_s": time.perf_counter() - start,
        "seed": config.seed,
        "platoon_size": instance.params.L,
        "history": state.history,
        "config": config.echo(),
    }
    best = state.incumbent
    return Solution(best.routes, best.schedule, best.cost, info)


@dataclass(frozen=True)
class Benefit:
    cost_with: float
    cost_without: float
    benefit: float
    percent: float
    with_platoons: Solution = field(repr=False)
    without_platoons: Solution = field(repr=False)

    @property
    def energy_percent(self) -> float:
        """Energy saved by platooning as a fraction of the single-truck energy."""
        e0 = self.without_platoons.cost.energy
        return (e0 - self.with_platoons.cost.energy) / e0 if e0 else 0.0


def platooning_benefit(instance: ProblemInstance, config: SolverConfig | None = None) -> Benefit:
    """Cost saved by allowing platoons, comparing against ``L = 1``.

    The platooned run is warm-started from the single-truck solution, whose
    routes stay feasible when platoons are allowed, so the benefit is never
    negative.
    """
    config = config or SolverConfig()
    L = config.platoon_size or instance.params.L
    alone = solve(instance, replace(config, platoon_size=1, warm_start=None))
    joint = solve(instance, replace(config, platoon_size=L, warm_start=alone))
    without, with_ = alone.cost.total, joint.cost.total
    benefit = without - with_
    return Benefit(with_, without, benefit, benefit / without if without else 0.0, joint, alone)


def benefit_curve(instance: ProblemInstance, sizes: Sequence[int], config: SolverConfig | None = None) -> dict[int, Benefit]:
    """Platooning benefit for several platoon sizes, solved in increasing order.

    Each size is warm-started from the previous one, so the benefit is
    non-decreasing in the platoon size.
    """
    config = config or SolverConfig()
    out = {}
    base = solve(instance, replace(config, platoon_size=1, warm_start=None))
    prev = base
    for L in sorted(sizes):
        sol = base if L == 1 else solve(instance, replace(config, platoon_size=L, warm_start=prev))
        without, with_ = base.cost.total, sol.cost.total
        out[L] = Benefit(with_, without, without - with_, (without - with_) / without if without else 0.0, sol, base)
        prev = sol
    return out
