import numpy as np
import pytest

from truckplatoon.instance import CustomerDemand, Parameters, ProblemInstance
from truckplatoon.io import bundled_document, bundled_instance, reference_routes
from truckplatoon.network import RoadNetwork
from truckplatoon.solution import RoutePlan


def plan(instance, truck, customers, path):
    stops = []
    start = 0
    for c in customers:
        start = path.index(c, start + 1 if stops else 1)
        stops.append(start)
    return RoutePlan.build(truck, customers, path, stops, {c: instance.demand(c) for c in customers})


def grid_routes(instance):
    doc = bundled_document("grid")
    out = []
    for k, path in reference_routes("grid").items():
        mine = doc["reference_customers"][str(k)]
        out.append(plan(instance, k, [v for v in path if v in mine], path))
    return out


def random_small_instance(seed, max_nodes=6, max_customers=3, **params):
    """Random strongly connected graph with a few customers."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_nodes + 1))
    pts = rng.uniform(0, 10, size=(n, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2) + 0.5
    edges = set()
    perm = list(rng.permutation(n))
    for a, b in zip(perm, perm[1:] + perm[:1]):
        edges.add((int(a), int(b)))
        edges.add((int(b), int(a)))
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < 0.35:
                edges.add((i, j))
                edges.add((j, i))
    arcs = tuple((i, j, round(float(d[i, j]), 2)) for i, j in sorted(edges))
    k = int(rng.integers(1, min(max_customers, n - 1) + 1))
    nodes = sorted(int(v) for v in rng.choice(np.arange(1, n), size=k, replace=False))
    net = RoadNetwork(n, frozenset(nodes), arcs)
    p = Parameters(**{"alpha": 1.0, **params})
    probe = ProblemInstance(net, tuple(CustomerDemand(v, 1, 0, 1e3) for v in nodes), p)
    custs = []
    for v in nodes:
        t_ea = float(rng.choice([0.0, round(float(rng.uniform(0, 10)), 1)]))
        span = float(rng.choice([60.0, round(float(rng.uniform(2, 20)), 1)]))
        t_ld = max(t_ea + span, float(probe.dist[0, v]) + 0.1)
        custs.append(CustomerDemand(v, float(rng.integers(1, 11)), t_ea, round(t_ld, 2)))
    return ProblemInstance(net, tuple(custs), p, f"rand{seed}")


@pytest.fixture
def toy():
    return bundled_instance("toy")


@pytest.fixture
def grid():
    return bundled_instance("grid")
