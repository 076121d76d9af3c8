import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from truckplatoon.instance import CustomerDemand, Parameters
from truckplatoon.network import RoadNetwork, all_pairs_shortest_paths
from truckplatoon.routing import build_route, seed_customer, compute_load_profile, expand_route, insertion_delta

P = Parameters()


def toy_net():
    arcs = []
    for i, j, t in [(0, 1, 4), (1, 2, 2.2), (1, 4, 2.2), (0, 2, 6.1), (0, 4, 6.1), (0, 3, 4), (3, 4, 2.2)]:
        arcs += [(i, j, t), (j, i, t)]
    return RoadNetwork(5, frozenset({2, 4}), tuple(arcs))


def test_single_customer():
    d = np.array([[0, 3.0], [3.0, 0]])
    assert build_route([CustomerDemand(1, 4, 0, 9)], d, P) == (0, 1, 0)


def test_heavier_and_closer_seeded_first():
    d = np.array([[0, 3, 3], [3, 0, 3], [3, 3, 0]], dtype=float)
    custs = [CustomerDemand(1, 2, 0, 36), CustomerDemand(2, 8, 0, 36)]
    assert seed_customer(custs, d, P) == 2
    d2 = d.copy()
    d2[0, 2] = d2[2, 0] = 3.1
    # still heavy enough to win over the slightly closer light customer
    assert seed_customer(custs, d2, P) == 2
    d2[0, 2] = d2[2, 0] = 3.2
    assert seed_customer(custs, d2, P) == 1


def _replay(customers, dist, params):
    """Independent replay of the insertion rule, enumerating every slot."""
    eta, gamma, Q = params.eta, params.gamma, params.Q
    q = {c.node: c.q for c in customers}
    left = set(q)
    seed = min(sorted(left), key=lambda i: (eta * Q + gamma - eta * q[i]) * dist[0, i])
    tour = [0, seed, 0]
    left.discard(seed)
    while left:
        routed = sum(q[c] for c in tour[1:-1])
        best = None
        for r in sorted(left):
            t_sub = min(dist[r, v] for v in tour)
            val = (eta * Q + gamma - eta * q[r] - eta * routed) * t_sub
            if best is None or val < best[0]:
                best = (val, r)
        r = best[1]
        options = []
        for s in range(len(tour) - 1):
            j, h = tour[s], tour[s + 1]
            p_h = sum(q[c] for c in tour[s + 2:-1])
            options.append((insertion_delta(dist, j, r, h, p_h, q[r], params), s))
        s = min(options)[1]
        tour.insert(s + 1, r)
        left.discard(r)
    return tuple(tour)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_matches_hand_replay(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 10, size=(n + 1, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    q = rng.integers(1, 5, size=n)
    custs = [CustomerDemand(i + 1, float(q[i]), 0, 100) for i in range(n)]
    tour = build_route(custs, dist, P)
    assert tour == _replay(custs, dist, P)
    assert tour[0] == tour[-1] == 0
    assert sorted(tour[1:-1]) == list(range(1, n + 1))


def test_load_profile_examples():
    assert compute_load_profile([1, 2], {1: 7, 2: 3}) == [10, 3, 0]
    assert compute_load_profile([5], {5: 20}) == [20, 0]


def test_expand_adjacent_customers_single_arc():
    net = toy_net()
    plan = expand_route(0, (0, 1, 0), net.time_matrix(), {1: 1.0})
    assert plan.path == (0, 1, 0)


def test_expand_uniform_costs_matches_shortest_paths():
    net = toy_net()
    dm = all_pairs_shortest_paths(net)
    plan = expand_route(0, (0, 2, 4, 0), net.time_matrix(), {2: 5.0, 4: 5.0})
    expected = dm.path(0, 2) + dm.path(2, 4)[1:] + dm.path(4, 0)[1:]
    assert list(plan.path) == expected
    assert [plan.path[s] for s in plan.stops] == [2, 4]
    assert plan.loads[0] == 10


def test_expand_prefers_discounted_depot_arc():
    net = toy_net()
    costs = net.time_matrix()
    costs[0, 1] *= 0.9
    costs[1, 0] *= 0.9
    plan = expand_route(0, (0, 2, 0), costs, {2: 20.0})
    assert plan.path == (0, 1, 2, 1, 0)


def test_loads_follow_stops():
    net = toy_net()
    plan = expand_route(3, (0, 2, 4, 0), net.time_matrix(), {2: 7.0, 4: 3.0})
    # load drops right after each stop position
    for p, load in enumerate(plan.loads):
        served = sum(1 for s in plan.stops if s <= p)
        assert load == pytest.approx([10, 3, 0][served])


def test_insertion_keeps_tight_window_reachable():
    from conftest import random_small_instance

    inst = random_small_instance(5, max_nodes=5, max_customers=2)
    tour = build_route(list(inst.customers), inst.dist, inst.params)
    assert tour == (0, 4, 2, 0)  # customer 4 must be left by 6.2 h


def test_group_unserviceable_from_depot_is_split():
    from conftest import random_small_instance
    from truckplatoon.routing import split_unreachable

    inst = random_small_instance(1005)
    tours = split_unreachable(list(inst.customers), inst.dist, inst.params)
    assert len(tours) == 2
    assert sorted(v for t in tours for v in t if v) == [2, 3]
    assert all(t[0] == t[-1] == 0 for t in tours)


def test_serviceable_group_is_not_split(toy):
    from truckplatoon.routing import split_unreachable

    assert len(split_unreachable(list(toy.customers), toy.dist, toy.params)) == 1
