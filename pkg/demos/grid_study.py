"""
Platoons on a 4x4 grid
======================

Eight customers on a grid of 3-hour roads, served by two trucks. We look at
the platoons the exact scheduler forms on a fixed pair of reference routes,
then compare the heuristic loop against the exact model solved by HiGHS
(when ``highspy`` is installed).
"""

# %%
import numpy as np

from truckplatoon import bundled_instance, evaluate_solution, schedule_exact, Solution, solve
from truckplatoon.io import bundled_document, reference_routes
from truckplatoon.solution import RoutePlan

grid = bundled_instance("grid")
doc = bundled_document("grid")
print(np.array(doc["labels"]))

# %%
# Reference routes: both trucks leave through node 6 and come home through 13
# and 9.
routes = []
for k, path in reference_routes("grid").items():
    mine = doc["reference_customers"][str(k)]
    customers = [v for v in path if v in mine]
    stops = [path.index(c) for c in customers]
    routes.append(RoutePlan.build(k, customers, path, stops, {c: grid.demand(c) for c in customers}))

sched = schedule_exact(routes, grid)
for arc, members in sched.platoons(routes):
    if len(members) > 1:
        loads = [routes[k].loads[p] for k, p in members]
        print(f"arc {arc}: leader {members[0][0]} (load {loads[0]:g}), followers {members[1:]} (loads {loads[1:]})")
print("energy on the reference routes:", round(evaluate_solution(grid, Solution(tuple(routes), sched)).energy, 3))

# %%
# The lighter truck leads: a follower saves a fixed fraction of its own
# cost, so the heavier truck gains more from following.

# %%
# The heuristic loop on the same instance.
sol = solve(grid)
print("heuristic total", round(sol.cost.total, 3), "after", sol.info["iterations"], "iterations")

# %%
# The exact model gives the true optimum for comparison.
from truckplatoon.milp import build_full_model, highs_available, solve_model_with_highs

if highs_available():
    res = solve_model_with_highs(build_full_model(grid, 2), time_limit=120)
    print("exact optimum", res.status, res.objective)
else:
    print("install highspy to solve the exact model")
