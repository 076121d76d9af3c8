from dataclasses import replace

import pytest

from conftest import grid_routes, plan
from truckplatoon.errors import MalformedSolution
from truckplatoon.evaluate import check_feasibility, evaluate_solution, schedule_roles_summary, structural_flags
from truckplatoon.scheduling import schedule_exact, schedule_greedy
from truckplatoon.solution import ALONE_ROLE, LEADER_ROLE, Role, Schedule, Solution, TruckSchedule


def toy_routes(toy):
    return [plan(toy, 0, [2], [0, 1, 2, 1, 0]), plan(toy, 1, [4], [0, 1, 4, 1, 0])]


def families(violations):
    return {v.family for v in violations}


def test_toy_energy_alone_and_platooned(toy):
    direct = [plan(toy, 0, [2], [0, 2, 0]), plan(toy, 1, [4], [0, 4, 0])]
    alone = Solution(tuple(direct), schedule_exact(direct, toy.with_params(L=1)))
    routes = toy_routes(toy)
    joint = Solution(tuple(routes), schedule_exact(routes, toy))
    assert evaluate_solution(toy, alone).energy == pytest.approx(26.84, abs=1e-9)
    assert evaluate_solution(toy, joint).energy == pytest.approx(26.4, abs=1e-9)
    assert evaluate_solution(toy, joint).dispatch == pytest.approx(542.0)
    assert check_feasibility(toy, joint) == []
    assert schedule_roles_summary(joint) == {"leader": 2, "follower": 2}


def test_ledger_sums_to_energy(toy):
    routes = toy_routes(toy)
    cost = evaluate_solution(toy, Solution(tuple(routes), schedule_exact(routes, toy)))
    assert sum(a.cost for a in cost.ledger) == pytest.approx(cost.energy)
    assert cost.total == pytest.approx(cost.dispatch + toy.params.c2 * cost.energy)


def test_empty_solution_costs_nothing(toy):
    cost = evaluate_solution(toy, Solution((), Schedule({})))
    assert (cost.total, cost.dispatch, cost.energy, cost.trucks) == (0.0, 0.0, 0.0, 0)
    assert families(check_feasibility(toy, Solution((), Schedule({})))) == {"single_serve"}


def test_customer_served_twice(toy):
    routes = [plan(toy, 0, [2], [0, 2, 0]), plan(toy, 1, [2, 4], [0, 2, 0, 4, 0])]
    sol = Solution(tuple(routes), schedule_greedy(routes, toy))
    assert "single_serve" in families(check_feasibility(toy, sol))


def test_oversized_platoon_detected(toy):
    routes = toy_routes(toy)
    sched = schedule_exact(routes, toy)
    assert check_feasibility(toy.with_params(L=1), Solution(tuple(routes), sched)) != []
    assert "platoon_size" in families(check_feasibility(toy.with_params(L=1), Solution(tuple(routes), sched)))


def test_follower_out_of_sync_detected(toy):
    routes = toy_routes(toy)
    sched = schedule_exact(routes, toy)
    k = next(k for k, ts in sched.trucks.items() if any(r.follow is not None for r in ts.roles))
    ts = sched.trucks[k]
    shifted = replace(ts, arrival=tuple(a + 0.5 for a in ts.arrival))
    bad = Schedule({**sched.trucks, k: shifted})
    assert "sync" in families(check_feasibility(toy, Solution(tuple(routes), bad)))


def test_time_window_violation(toy):
    tight = toy
    routes = toy_routes(tight)
    sched = schedule_greedy(routes, tight)
    ts = sched.trucks[0]
    late = replace(ts, wait=tuple(w + (500.0 if i == 2 else 0.0) for i, w in enumerate(ts.wait)))
    sol = Solution(tuple(routes), Schedule({**sched.trucks, 0: late}))
    assert "window_ld" in families(check_feasibility(tight, sol))


def test_understated_loads_flagged_and_ignored_by_cost(toy):
    routes = toy_routes(toy)
    sched = schedule_greedy(routes, toy)
    honest = evaluate_solution(toy, Solution(tuple(routes), sched)).energy
    light = replace(routes[0], loads=tuple(0.0 for _ in routes[0].loads))
    sol = Solution((light, routes[1]), sched)
    assert "load" in families(check_feasibility(toy, sol))
    assert evaluate_solution(toy, sol).energy == pytest.approx(honest)


def test_grid_reference_routes_are_feasible(grid):
    routes = grid_routes(grid)
    sol = Solution(tuple(routes), schedule_exact(routes, grid))
    assert check_feasibility(grid, sol) == []
    # the reference route of truck 0 drives through truck 1's customer 13
    assert structural_flags(grid, sol) == ["truck 0 passes through other trucks' customers [13]"]


def test_missing_schedule_is_malformed(toy):
    routes = toy_routes(toy)
    with pytest.raises(MalformedSolution):
        evaluate_solution(toy, Solution(tuple(routes), Schedule({})))


def test_arc_outside_network_is_malformed(toy):
    route = plan(toy, 0, [2], [0, 2, 3, 0])  # 2 -> 3 is not a road
    ts = TruckSchedule((0.0, 6.1, 7.0, 9.0), (0.0,) * 4, (ALONE_ROLE,) * 3)
    sol = Solution((route,), Schedule({0: ts}))
    with pytest.raises(MalformedSolution):
        evaluate_solution(toy, sol)
    assert "flow" in families(check_feasibility(toy, sol))


def test_role_cannot_both_lead_and_follow():
    with pytest.raises(MalformedSolution):
        Role(lead=True, follow=1).kind
    assert LEADER_ROLE.kind == "leader"
