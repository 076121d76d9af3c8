"""
Two trucks, one shared road
===========================

Two customers sit on either side of a junction. Each truck could drive
straight to its customer, but both can also go through the junction and
travel the first leg as a platoon. This script walks through one iteration
of the solver by hand, then runs the whole loop.
"""

# %%
# The bundled instance has five nodes: the depot 0, a junction 1, the two
# customers 2 and 4, and a spare node 3. Both customers want 20 tons.
from truckplatoon import bundled_instance

toy = bundled_instance("toy")
print(toy.customers)
print("direct depot -> 2:", toy.dist[0, 2], "h; via the junction:", toy.dist[0, 1] + toy.dist[1, 2], "h")

# %%
# Grouping and loading: both windows are wide, so one group; the 20-ton
# capacity forces one truck per customer.
from truckplatoon import assign_trucks

assignment = assign_trucks(toy.customers, toy.dist, toy.dist.t_max, toy.params)
print("trucks:", assignment.trucks, "loads:", assignment.loads)

# %%
# Routing with plain travel times sends each truck straight to its customer,
# so nothing is shared and no platoon can form.
from truckplatoon import build_route, expand_route, schedule_exact, evaluate_solution, Solution

routes = []
for k, nodes in enumerate(assignment.trucks):
    tour = build_route([toy.by_node[v] for v in nodes], toy.dist, toy.params)
    routes.append(expand_route(k, tour, toy.times, {v: toy.demand(v) for v in nodes}))
alone = Solution(tuple(routes), schedule_exact(routes, toy))
print([r.path for r in routes], "energy", evaluate_solution(toy, alone).energy)

# %%
# The feedback step prices arcs that other trucks use at the follower rate
# and lets each truck consider joint detours. Re-routing under those costs
# pulls both trucks through the junction.
from truckplatoon import update_link_costs
from truckplatoon.orchestrator import probe_joint_segments

costs = update_link_costs(routes, alone.schedule, toy)
for k, arcs in probe_joint_segments({r.truck: (0, *r.customers, 0) for r in routes}, toy).items():
    for (i, j), c in arcs.items():
        costs[k][i, j] = min(costs[k][i, j], c)
rerouted = [expand_route(r.truck, (0, *r.customers, 0), costs[r.truck], {v: toy.demand(v) for v in r.customers})
            for r in routes]
joint = Solution(tuple(rerouted), schedule_exact(rerouted, toy))
print([r.path for r in rerouted], "energy", evaluate_solution(toy, joint).energy)
for arc, members in joint.schedule.platoons(rerouted):
    if len(members) > 1:
        print("platoon on", arc, "leader first:", members)

# %%
# The full loop does the same automatically and compares against L = 1.
from truckplatoon import platooning_benefit

b = platooning_benefit(toy)
print(f"with platoons {b.with_platoons.cost.energy:.2f}, alone {b.without_platoons.cost.energy:.2f}, "
      f"energy saved {100 * b.energy_percent:.2f}%")
