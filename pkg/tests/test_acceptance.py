"""End-to-end acceptance checks. Each test prints one PASS/FAIL line."""

import statistics
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from conftest import grid_routes, random_small_instance
from truckplatoon.bruteforce import SIMPLE, WALK, brute_force_optimum
from truckplatoon.errors import NoFeasibleSolutionFound
from truckplatoon.evaluate import check_feasibility, evaluate_solution
from truckplatoon.grouping import dp_table, knapsack_assign, tw_feasible
from truckplatoon.instance import CustomerDemand, Parameters
from truckplatoon.io import bundled_instance, generate_instance_document, instance_from_dict
from truckplatoon.milp import (
    build_full_model,
    export_mps,
    highs_available,
    solve_model_with_highs,
    solve_mps_with_highs,
)
from truckplatoon.orchestrator import SolverConfig, benefit_curve, platooning_benefit, solve, update_link_costs
from truckplatoon.scheduling import schedule_exact
from truckplatoon.solution import Solution

TOY_TOL = 1e-6
GRID_TOL = 1e-3


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return emit


def yangtze(n, seed, **params):
    return instance_from_dict(generate_instance_document("yangtze", n, seed, 20.0, params=params or None))


def test_criterion_1_toy(report):
    toy = bundled_instance("toy")
    start = time.perf_counter()
    b = platooning_benefit(toy, SolverConfig())
    elapsed = time.perf_counter() - start
    e4, e1 = b.with_platoons.cost.energy, b.without_platoons.cost.energy
    pct = 100 * b.energy_percent
    ok = (abs(e4 - 26.4) <= TOY_TOL and abs(e1 - 26.84) <= TOY_TOL
          and round(pct, 2) == 1.64 and elapsed < 1.0)
    report(1, ok, f"toy energy L=4 {e4:.6f} (26.4), L=1 {e1:.6f} (26.84), saving {pct:.4f}% (1.64%), "
                  f"{elapsed:.3f}s (<1s), tol {TOY_TOL:g}")
    assert ok


def test_criterion_2_grid(report):
    grid = bundled_instance("grid")
    start = time.perf_counter()
    b = platooning_benefit(grid, SolverConfig(time_limit_s=25))
    elapsed = time.perf_counter() - start
    w, wo = b.with_platoons.cost, b.without_platoons.cost
    routes = grid_routes(grid)
    exact = evaluate_solution(grid, Solution(tuple(routes), schedule_exact(routes, grid)))
    checks = {
        "heuristic total with platoons 1362.3": abs(w.total - 1362.3) <= GRID_TOL,
        "heuristic total L=1 1375.8": abs(wo.total - 1375.8) <= GRID_TOL,
        "dispatch 542 both": abs(w.dispatch - 542) <= GRID_TOL and abs(wo.dispatch - 542) <= GRID_TOL,
        "energy 820.3 / 833.8": abs(w.energy - 820.3) <= GRID_TOL and abs(wo.energy - 833.8) <= GRID_TOL,
        "exact scheduler on reference routes 820.3": abs(exact.energy - 820.3) <= GRID_TOL,
        "runtime < 60 s": elapsed < 60,
    }
    external = "external solver not installed"
    ext_ok = False
    if highs_available():
        with tempfile.TemporaryDirectory() as tmp:
            model = build_full_model(grid, 2)
            path = Path(tmp) / "grid.mps"
            export_mps(model, path)
            res = solve_mps_with_highs(path, 120.0, model)
        if res.objective is not None:
            ext_ok = abs(res.objective - 1362.3) <= GRID_TOL
            external = (f"MPS optimum {res.objective:.4f} ({res.status}); heuristic gap "
                        f"{100 * (w.total - res.objective) / res.objective:.2f}%")
        else:
            external = f"MPS not solved: {res.status}"
    checks["exported model reaches 1362.3"] = ext_ok
    # Two trucks covering the eight customers need at least ten 3 h edges;
    # every truck-hour costs at least the loaded-follower minimum.
    min_rate = (1 - grid.params.beta) * grid.params.alpha
    floor = 30 * min_rate
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    report(2, ok, f"grid totals {w.total:.4f}/{wo.total:.4f}, dispatch {w.dispatch:g}/{wo.dispatch:g}, "
                  f"energy {w.energy:.4f}/{wo.energy:.4f}, exact on reference routes {exact.energy:.4f}, "
                  f"{elapsed:.1f}s; {external}; tol {GRID_TOL:g}; "
                  f"energy lower bound for any feasible plan {floor:.2f} > 820.3; failed: {failed}")
    assert ok, f"unmet: {failed}"


def test_criterion_3_grid_platoon_pattern(report):
    grid = bundled_instance("grid")
    routes = grid_routes(grid)
    sched = schedule_exact(routes, grid)
    platoons = sched.platoons(routes)
    arcs = {arc for arc, members in platoons if len(members) > 1}
    loads = {r.truck: dict(zip(range(len(r.arcs)), r.loads)) for r in routes}
    heavier_follows = True
    loaded_shared = 0
    for arc, members in platoons:
        if len(members) < 2:
            continue
        weights = {k: loads[k][p] for k, p in members}
        if max(weights.values()) <= 0:
            continue
        loaded_shared += 1
        leader = members[0][0]
        if weights[leader] > min(weights.values()):
            heavier_follows = False
    want = {(0, 6), (13, 9), (9, 0)}
    ok = want <= arcs and heavier_follows and loaded_shared > 0
    report(3, ok, f"shared arcs {sorted(arcs)} include {sorted(want)}; "
                  f"lighter truck leads on {loaded_shared} loaded shared arc(s): {heavier_follows}")
    assert ok


def test_criterion_4_oracle_equivalence(report):
    n_instances = 60
    mismatches, below, gaps, infeasible_heuristic, compared = [], [], [], 0, 0
    external = highs_available()
    for s in range(n_instances):
        inst = random_small_instance(1000 + s, max_nodes=6, max_customers=3)
        simple = brute_force_optimum(inst, 2, SIMPLE)
        if external:
            res = solve_model_with_highs(build_full_model(inst, 2), 60.0)
            if np.isfinite(simple.cost):
                same = res.objective is not None and abs(res.objective - simple.cost) <= 1e-6 * max(1.0, simple.cost)
            else:
                same = res.objective is None
            compared += 1
            if not same:
                mismatches.append((s, simple.cost, res.objective))
        walk = brute_force_optimum(inst, semantics=WALK)
        try:
            heur = solve(inst, SolverConfig(iteration_limit=30)).cost.total
        except NoFeasibleSolutionFound:
            infeasible_heuristic += 1
            continue
        if heur < walk.cost - 1e-6:
            below.append((s, heur, walk.cost))
        gaps.append((heur - walk.cost) / walk.cost)
    median = statistics.median(gaps) if gaps else float("nan")
    ok = not mismatches and not below and (compared >= 50 or not external) and n_instances >= 50
    ext = f"oracle = MILP on {compared - len(mismatches)}/{compared}" if external else "external solver absent, MILP comparison skipped"
    report(4, ok, f"{n_instances} instances; {ext}; heuristic >= oracle on {len(gaps) - len(below)}/{len(gaps)} "
                  f"(no solution on {infeasible_heuristic}); median gap {100 * median:.3f}%, "
                  f"max gap {100 * max(gaps):.3f}%")
    assert ok, (mismatches, below)


def test_criterion_5_properties(report):
    results = {}
    # every solver output is feasible; incumbents never get worse
    feasible = monotone = True
    for seed in range(6):
        inst = yangtze(10, seed)
        sol = solve(inst, SolverConfig(iteration_limit=30))
        feasible &= check_feasibility(inst, sol) == []
        h = [x for x in sol.info["history"] if np.isfinite(x)]
        monotone &= all(b <= a + 1e-9 for a, b in zip(h, h[1:]))
    for seed in range(20):
        inst = random_small_instance(seed)
        try:
            feasible &= check_feasibility(inst, solve(inst, SolverConfig(iteration_limit=15))) == []
        except NoFeasibleSolutionFound:
            pass
    results["solver outputs feasible"] = feasible
    results["incumbent monotone"] = monotone

    grid = bundled_instance("grid")
    routes = grid_routes(grid)
    costs = update_link_costs(routes, schedule_exact(routes, grid), grid)
    finite = np.isfinite(grid.times)
    results["updated link costs <= travel times"] = all(np.all(c[finite] <= grid.times[finite] + 1e-12)
                                                        for c in costs.values())

    rng = np.random.default_rng(5)
    knap = True
    for trial in range(40):
        n = int(rng.integers(1, 13))
        q = rng.integers(1, 11, size=n)
        d = rng.uniform(0.5, 6.0, size=(n + 1, n + 1))
        np.fill_diagonal(d, 0.0)
        cs = [CustomerDemand(i + 1, int(q[i]), 0, 100) for i in range(n)]
        t_max = float(d.max())
        F, _ = dp_table(cs, d, t_max, 20, 1)
        best = 0.0
        for mask in range(1 << n):
            chosen = [i for i in range(n) if mask >> i & 1]
            if sum(q[i] for i in chosen) <= 20:
                val = sum(t_max + 1 - d[0 if i == 0 else cs[i - 1].node, cs[i].node] for i in chosen)
                best = max(best, val)
        knap &= abs(F[n, 20] - best) <= 1e-9
        knap &= all(load <= 20 for load in knapsack_assign(cs, d, t_max, Parameters()).loads)
    results["knapsack = exhaustive (<= 12 items)"] = knap

    sym = True
    for _ in range(300):
        a = CustomerDemand(1, 1, *sorted(rng.uniform(0, 30, 2)))
        b = CustomerDemand(2, 1, *sorted(rng.uniform(0, 30, 2)))
        d = rng.uniform(0, 20, size=(3, 3))
        sym &= tw_feasible(a, b, d) == tw_feasible(b, a, d)
    results["window compatibility symmetric"] = sym

    results["no saving without platoon discount"] = all(
        abs(platooning_benefit(yangtze(8, s, beta=0.0), SolverConfig(iteration_limit=25)).benefit) <= 1e-6
        for s in range(3))

    nondecreasing = True
    for s in range(4):
        curve = benefit_curve(yangtze(10, s), [1, 2, 3, 4, 5], SolverConfig(iteration_limit=25))
        vals = [curve[L].benefit for L in sorted(curve)]
        nondecreasing &= all(y >= x - 1e-9 for x, y in zip(vals, vals[1:]))
    results["benefit non-decreasing in L"] = nondecreasing

    failed = [k for k, v in results.items() if not v]
    ok = not failed
    report(5, ok, "; ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in results.items()))
    assert ok, failed


def test_criterion_6_scale(report):
    times = []
    for seed in range(3):
        inst = yangtze(20, seed)
        start = time.perf_counter()
        b = platooning_benefit(inst, SolverConfig(time_limit_s=200))
        times.append(time.perf_counter() - start)
        assert check_feasibility(inst, b.with_platoons) == []
    within = max(times) < 200
    if not within:
        warnings.warn(f"20-customer solve took {max(times):.1f}s (soft target 200s)")
    report(6, True, f"20-customer Yangtze instances solved in {', '.join(f'{t:.2f}s' for t in times)} "
                    f"({'within' if within else 'over, warning only:'} soft target 200s)")
