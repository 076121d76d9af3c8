"""JSON instance and solution files, bundled data sets and instance generation."""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InstanceInvalid, MalformedSolution
from .instance import DEFAULT_SPEED_KMH, CustomerDemand, Parameters, ProblemInstance
from .network import DEPOT, RoadNetwork, all_pairs_shortest_paths, grid_network
from .solution import Role, RoutePlan, Schedule, Solution, TruckSchedule
from .cost import CostBreakdown

PARAM_KEYS = ("c1", "c2", "alpha", "gamma", "eta", "beta", "L", "Q", "big_M")
BUNDLED = ("toy", "grid", "yangtze")


class ParseError(InstanceInvalid):
    """A file that is not valid JSON; carries the line and column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}:{e.lineno}:{e.colno}: {e.msg}", e.lineno, e.colno) from None


def _field(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise InstanceInvalid(f"{where}: missing field '{key}'")
    val = obj[key]
    if kind is not None and not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise InstanceInvalid(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {val!r}")
    return val


def instance_from_dict(doc: dict, name: str = "") -> ProblemInstance:
    """Build an instance from its JSON document.

    Arc lengths may be given in ``hours`` or ``km``; kilometres are converted
    with ``speed_kmh`` (default 88.5). When both are present hours win.

    Raises:
        InstanceInvalid: with the offending field path.
    """
    if not isinstance(doc, dict):
        raise InstanceInvalid("instance document must be a JSON object")
    nodes = _field(doc, "nodes", "instance")
    if isinstance(nodes, list):
        names = tuple(str(n) for n in nodes)
        count = len(nodes)
    elif isinstance(nodes, int) and not isinstance(nodes, bool):
        names, count = None, nodes
    else:
        raise InstanceInvalid("instance.nodes: expected a node count or a list of names")
    if doc.get("depot", DEPOT) != DEPOT:
        raise InstanceInvalid("instance.depot: the depot must be node 0")
    speed = doc.get("speed_kmh", DEFAULT_SPEED_KMH)
    if not isinstance(speed, (int, float)) or speed <= 0:
        raise InstanceInvalid("instance.speed_kmh: must be a positive number")
    arcs = []
    for n, a in enumerate(_field(doc, "arcs", "instance", list)):
        where = f"instance.arcs[{n}]"
        i = _field(a, "from", where, int)
        j = _field(a, "to", where, int)
        if "hours" in a:
            t = _field(a, "hours", where, (int, float))
        elif "km" in a:
            t = _field(a, "km", where, (int, float)) / speed
        else:
            raise InstanceInvalid(f"{where}: needs 'hours' or 'km'")
        arcs.append((i, j, float(t)))
        if a.get("bidirectional"):
            arcs.append((j, i, float(t)))
    customers = []
    for n, c in enumerate(_field(doc, "customers", "instance", list)):
        where = f"instance.customers[{n}]"
        customers.append(CustomerDemand(
            int(_field(c, "node", where, int)),
            float(_field(c, "q", where, (int, float))),
            float(_field(c, "t_ea", where, (int, float))),
            float(_field(c, "t_ld", where, (int, float))),
        ))
    raw = doc.get("params", {})
    if not isinstance(raw, dict):
        raise InstanceInvalid("instance.params: expected an object")
    unknown = set(raw) - set(PARAM_KEYS)
    if unknown:
        raise InstanceInvalid(f"instance.params: unknown keys {sorted(unknown)}")
    params = Parameters(**raw)
    net = RoadNetwork(count, frozenset(c.node for c in customers), tuple(arcs), names)
    return ProblemInstance(net, tuple(customers), params, doc.get("name", name))


def instance_to_dict(inst: ProblemInstance) -> dict:
    p = inst.params
    params = {k: getattr(p, k) for k in PARAM_KEYS if getattr(p, k) is not None}
    net = inst.network
    return {
        "name": inst.name,
        "nodes": list(net.names) if net.names else net.node_count,
        "depot": DEPOT,
        "arcs": [{"from": i, "to": j, "hours": t} for i, j, t in net.arcs],
        "customers": [{"node": c.node, "q": c.q, "t_ea": c.t_ea, "t_ld": c.t_ld} for c in inst.customers],
        "params": params,
    }


def load_instance(path) -> ProblemInstance:
    path = Path(path)
    return instance_from_dict(_load_json(path.read_text(encoding="utf-8"), str(path)), path.stem)


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n", encoding="utf-8")


def bundled_document(name: str) -> dict:
    if name not in BUNDLED:
        raise KeyError(f"no bundled instance {name!r}; choose from {BUNDLED}")
    text = resources.files("truckplatoon.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def bundled_instance(name: str, **param_changes) -> ProblemInstance:
    """One of the shipped instances: ``toy``, ``grid`` or ``yangtze``."""
    inst = instance_from_dict(bundled_document(name), name)
    return inst.with_params(**param_changes) if param_changes else inst


def reference_routes(name: str = "grid") -> dict[int, list[int]]:
    """Hand-transcribed node paths stored alongside a bundled instance."""
    doc = bundled_document(name)
    return {int(k): list(v) for k, v in doc.get("reference_routes", {}).items()}


def solution_to_dict(sol: Solution) -> dict:
    trucks = []
    for r in sol.routes:
        ts = sol.schedule.trucks[r.truck]
        trucks.append({
            "truck": r.truck,
            "customers": list(r.customers),
            "path": list(r.path),
            "stops": list(r.stops),
            "loads": list(r.loads),
            "arrival": list(ts.arrival),
            "wait": list(ts.wait),
            "roles": [role.to_json() for role in ts.roles],
        })
    return {
        "trucks": trucks,
        "schedule": {"method": sol.schedule.method, "savings": sol.schedule.savings, "exact": sol.schedule.exact},
        "cost": sol.cost.as_dict() if sol.cost else None,
        "info": sol.info,
    }


def solution_from_dict(doc: dict) -> Solution:
    """Parse a solution document.

    Raises:
        MalformedSolution: on missing or mistyped fields.
    """
    try:
        routes, trucks = [], {}
        for t in doc["trucks"]:
            k = int(t["truck"])
            routes.append(RoutePlan(k, tuple(int(c) for c in t["customers"]), tuple(int(v) for v in t["path"]),
                                    tuple(int(s) for s in t["stops"]), tuple(float(x) for x in t["loads"])))
            trucks[k] = TruckSchedule(tuple(float(x) for x in t["arrival"]), tuple(float(x) for x in t["wait"]),
                                      tuple(Role.from_json(r) for r in t["roles"]))
        meta = doc.get("schedule", {})
        sched = Schedule(trucks, meta.get("method", ""), float(meta.get("savings", 0.0)), bool(meta.get("exact", False)))
        cost = doc.get("cost")
        breakdown = None
        if cost:
            breakdown = CostBreakdown(float(cost["dispatch"]), float(cost["energy"]), float(cost["total"]),
                                      int(cost.get("trucks", 0)))
        return Solution(tuple(routes), sched, breakdown, dict(doc.get("info", {})))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedSolution(f"bad solution document: {e!r}") from None


def save_solution(sol: Solution, path) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(sol), indent=1) + "\n", encoding="utf-8")


def load_solution(path) -> Solution:
    path = Path(path)
    return solution_from_dict(_load_json(path.read_text(encoding="utf-8"), str(path)))


def random_network_document(nodes: int, rng: np.random.Generator) -> dict:
    """Random planar-ish road graph: a spanning chain plus nearest-neighbour links."""
    pts = rng.uniform(0, 400, size=(nodes, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    edges = set()
    order = list(rng.permutation(nodes))
    for a, b in zip(order[:-1], order[1:]):
        edges.add((min(a, b), max(a, b)))
    for i in range(nodes):
        for j in np.argsort(d[i])[1:4]:
            edges.add((min(i, int(j)), max(i, int(j))))
    arcs = [{"from": int(i), "to": int(j), "km": round(float(d[i, j]) * 1.2 + 1.0, 1), "bidirectional": True}
            for i, j in sorted(edges)]
    return {"nodes": nodes, "arcs": arcs, "speed_kmh": DEFAULT_SPEED_KMH}


def generate_instance_document(
    network: str = "yangtze",
    customers: int = 5,
    seed: int = 0,
    tw_tolerance: float = 20.0,
    nodes: int = 12,
    params: dict | None = None,
) -> dict:
    """Random customers on a bundled or random network.

    Demands are integers from 1 to 10 tons; each window spans at least
    ``tw_tolerance`` hours and closes no earlier than the depot travel time.
    The same arguments always produce the same document.
    """
    rng = np.random.default_rng(seed)
    if network in ("yangtze", "grid", "toy"):
        base = bundled_document(network)
        doc = {k: base[k] for k in ("nodes", "arcs") if k in base}
        if "speed_kmh" in base:
            doc["speed_kmh"] = base["speed_kmh"]
    elif network == "random":
        doc = random_network_document(nodes, rng)
    else:
        raise InstanceInvalid(f"unknown network {network!r}")
    probe = instance_from_dict({**doc, "customers": []})
    count = probe.network.node_count
    if not 0 < customers < count:
        raise InstanceInvalid(f"customers must be between 1 and {count - 1}")
    dist = all_pairs_shortest_paths(probe.network)
    chosen = sorted(int(v) for v in rng.choice(np.arange(1, count), size=customers, replace=False))
    custs = []
    for v in chosen:
        q = int(rng.integers(1, 11))
        t_ea = round(float(rng.uniform(0, 10)), 1)
        # round up to a tenth so the span never falls below the tolerance
        t_ld = max(math.ceil(round((t_ea + tw_tolerance) * 10, 6)) / 10,
                   math.ceil(round(float(dist[DEPOT, v]) * 10, 6)) / 10)
        custs.append({"node": v, "q": q, "t_ea": t_ea, "t_ld": t_ld})
    doc["customers"] = custs
    doc["name"] = f"{network}-{customers}c-seed{seed}"
    if params:
        doc["params"] = dict(params)
    return doc


def grid_instance_document(labels, customers, edge_time=3.0, params=None) -> dict:
    net = grid_network(len(labels), len(labels[0]), edge_time, labels)
    return {"nodes": net.node_count, "arcs": [{"from": i, "to": j, "hours": t} for i, j, t in net.arcs],
            "customers": customers, "params": params or {}}
