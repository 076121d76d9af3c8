"""Command-line front end: ``solve``, ``generate``, ``validate``, ``export``, ``bench``.

Exit codes: 0 success, 2 unreadable or invalid input, 3 no feasible solution,
4 validation failure (violations or a cost mismatch).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import InstanceInvalid, MalformedSolution, NoFeasibleSolutionFound
from .evaluate import check_feasibility, evaluate_solution, structural_flags
from .instance import ProblemInstance
from .io import (
    BUNDLED,
    ParseError,
    bundled_instance,
    generate_instance_document,
    instance_from_dict,
    load_instance,
    load_solution,
    save_solution,
)
from .milp import build_full_model, export_mps
from .orchestrator import SolverConfig, benefit_curve, platooning_benefit, solve

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_INVALID = 0, 2, 3, 4
COST_TOL = 1e-6


def _instance(arg: str) -> ProblemInstance:
    path = Path(arg)
    name = arg.removesuffix(".json")
    if not path.exists() and name in BUNDLED:
        return bundled_instance(name)
    return load_instance(path)


def _config(args) -> SolverConfig:
    return SolverConfig(
        time_limit_s=args.time_limit,
        iteration_limit=args.iterations,
        streak_limit=args.streak,
        seed=args.seed,
        platoon_size=args.platoon_size,
        scheduler=args.scheduler,
        probe=not args.no_probe,
    )


def _summary(label, sol) -> list[str]:
    c = sol.cost
    return [
        f"{label}",
        f"  total     {c.total:.4f}",
        f"  dispatch  {c.dispatch:.4f}",
        f"  energy    {c.energy:.4f}",
        f"  trucks    {c.trucks}",
        f"  iterations {sol.info.get('iterations')}  stop={sol.info.get('stop_reason')}  "
        f"wall={sol.info.get('wall_time_s', 0.0):.2f}s",
    ]


def cmd_solve(args) -> int:
    inst = _instance(args.instance)
    cfg = _config(args)
    try:
        if args.compare_no_platoon:
            b = platooning_benefit(inst, cfg)
            sol = b.with_platoons
            lines = _summary(f"with platoons (L={sol.info['platoon_size']})", sol)
            lines += _summary("without platoons (L=1)", b.without_platoons)
            lines.append(f"platooning benefit {b.benefit:.4f} ({100 * b.percent:.2f}% of total, "
                         f"{100 * b.energy_percent:.2f}% of energy)")
        else:
            sol = solve(inst, cfg)
            lines = _summary(f"solution (L={sol.info['platoon_size']})", sol)
    except NoFeasibleSolutionFound as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    for flag in structural_flags(inst, sol):
        lines.append(f"  note: {flag}")
    print("\n".join(lines))
    if args.out:
        save_solution(sol, args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    doc = generate_instance_document(args.network, args.customers, args.seed, args.tw_tolerance, args.nodes)
    text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _instance(args.instance)
    sol = load_solution(args.solution)
    violations = check_feasibility(inst, sol)
    print(f"{len(violations)} violations")
    for v in violations:
        print(f"  {v}")
    status = EXIT_OK if not violations else EXIT_INVALID
    try:
        cost = evaluate_solution(inst, sol)
    except MalformedSolution as e:
        print(f"cannot evaluate: {e}")
        return EXIT_INVALID
    print(f"recomputed total {cost.total:.6f} dispatch {cost.dispatch:.6f} energy {cost.energy:.6f}")
    if sol.cost is not None:
        for key in ("total", "dispatch", "energy"):
            claimed, actual = getattr(sol.cost, key), getattr(cost, key)
            if abs(claimed - actual) > COST_TOL:
                print(f"cost mismatch: {key} claimed {claimed:.6f}, recomputed {actual:.6f}")
                status = EXIT_INVALID
        if status == EXIT_OK:
            print("costs match")
    for flag in structural_flags(inst, sol):
        print(f"note: {flag}")
    return status


def cmd_export(args) -> int:
    inst = _instance(args.instance)
    model = build_full_model(inst, args.trucks)
    export_mps(model, args.out)
    print(f"wrote {args.out}: {len(model.variables)} columns, {len(model.constraints)} rows, "
          f"{model.count('x')} x variables")
    return EXIT_OK


# ----------------------------------------------------------------- bench

SWEEPABLE = ("alpha", "c1", "L", "Q", "beta", "tw_tolerance")
CSV_FIELDS = ("param", "value", "customers", "runs", "feasible", "avg_cost_with", "avg_cost_without",
              "avg_benefit", "avg_percent", "avg_trucks", "status")


def _scenario(sweep_doc, seed, n, tolerance=None) -> ProblemInstance:
    tol = sweep_doc.get("tw_tolerance", 20.0) if tolerance is None else tolerance
    pool = max(sweep_doc.get("sizes", [n]) + [n])
    doc = generate_instance_document(sweep_doc.get("network", "yangtze"), pool, seed, tol, sweep_doc.get("nodes", 12))
    doc["customers"] = doc["customers"][:n] if n < pool else doc["customers"]
    doc["params"] = dict(sweep_doc.get("params", {}))
    return instance_from_dict(doc)


def _bench_cell(task):
    """One scenario; returns a list of (param, value, n, seed, result-or-None)."""
    sweep_doc, param, values, n, seed = task
    cfg = SolverConfig(time_limit_s=sweep_doc.get("time_limit", 60.0), iteration_limit=sweep_doc.get("iterations", 30),
                       seed=seed, scheduler=sweep_doc.get("scheduler", "auto"))
    out = []
    try:
        if param == "L":
            inst = _scenario(sweep_doc, seed, n)
            curve = benefit_curve(inst, values, cfg)
            for v in values:
                b = curve[v]
                out.append((param, v, n, seed, (b.cost_with, b.cost_without, b.benefit, b.percent,
                                                 b.with_platoons.cost.trucks)))
            return out
        for v in values:
            try:
                if param == "tw_tolerance":
                    inst = _scenario(sweep_doc, seed, n, tolerance=v)
                else:
                    inst = _scenario(sweep_doc, seed, n).with_params(**{param: v})
                b = platooning_benefit(inst, cfg)
                out.append((param, v, n, seed, (b.cost_with, b.cost_without, b.benefit, b.percent,
                                                 b.with_platoons.cost.trucks)))
            except (NoFeasibleSolutionFound, InstanceInvalid):
                out.append((param, v, n, seed, None))
    except (NoFeasibleSolutionFound, InstanceInvalid):
        out.extend((param, v, n, seed, None) for v in values)
    return out


def run_bench(sweep_doc: dict) -> str:
    """Run every sweep cell over the scenario seeds and return the CSV text."""
    sweeps = sweep_doc.get("sweeps", {})
    unknown = set(sweeps) - set(SWEEPABLE)
    if unknown:
        raise InstanceInvalid(f"bench: cannot sweep {sorted(unknown)}")
    seeds = sweep_doc.get("seeds", list(range(5)))
    sizes = sweep_doc.get("sizes", [10])
    tasks = [(sweep_doc, param, list(values), n, seed)
             for param, values in sweeps.items() if values for n in sizes for seed in seeds]
    workers = int(sweep_doc.get("workers", 1))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_bench_cell, tasks))
    else:
        results = [_bench_cell(t) for t in tasks]
    cells: dict[tuple, list] = {}
    for rows in results:
        for param, v, n, seed, res in rows:
            cells.setdefault((param, v, n), []).append(res)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for param, values in sweeps.items():
        for v in values:
            for n in sizes:
                runs = cells.get((param, v, n), [])
                ok = [r for r in runs if r is not None]
                avg = [sum(r[i] for r in ok) / len(ok) if ok else float("nan") for i in range(5)]
                status = "OK" if ok and len(ok) == len(runs) else "INFEASIBLE"
                w.writerow([param, v, n, len(runs), len(ok), *(f"{a:.6f}" for a in avg), status])
    return buf.getvalue()


def cmd_bench(args) -> int:
    sweep_doc = json.loads(Path(args.sweep_doc).read_text(encoding="utf-8")) if args.sweep_doc else {}
    if args.workers is not None:
        sweep_doc["workers"] = args.workers
    text = run_bench(sweep_doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="truckplatoon", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve an instance file (or a bundled name: toy, grid, yangtze)")
    s.add_argument("instance")
    s.add_argument("--out", "-o")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-limit", type=float, default=3600.0)
    s.add_argument("--iterations", type=int, default=None)
    s.add_argument("--streak", type=int, default=10)
    s.add_argument("--platoon-size", type=int, default=None)
    s.add_argument("--scheduler", choices=("exact", "greedy", "auto"), default="auto")
    s.add_argument("--compare-no-platoon", action="store_true")
    s.add_argument("--no-probe", action="store_true", help="disable the joint-detour link-cost look-ahead")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--network", choices=("yangtze", "grid", "random"), default="yangtze")
    g.add_argument("--nodes", type=int, default=12, help="node count for --network random")
    g.add_argument("--customers", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tw-tolerance", type=float, default=20.0)
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check a solution file against an instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("export", help="write the exact model as fixed-format MPS")
    e.add_argument("instance")
    e.add_argument("out")
    e.add_argument("--trucks", type=int, default=None)
    e.set_defaults(func=cmd_export)

    b = sub.add_parser("bench", help="parameter sweep; writes CSV")
    b.add_argument("sweep_doc", nargs="?", help="JSON sweep document")
    b.add_argument("--out", "-o")
    b.add_argument("--workers", type=int, default=None)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (InstanceInvalid, MalformedSolution) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
