import csv
import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from truckplatoon.cli import main, run_bench
from truckplatoon.errors import InstanceInvalid
from truckplatoon.io import (
    ParseError,
    bundled_instance,
    generate_instance_document,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
)
from truckplatoon.orchestrator import SolverConfig, solve


def test_bundled_instances_load():
    assert len(bundled_instance("toy").customers) == 2
    assert len(bundled_instance("grid").customers) == 8
    assert bundled_instance("yangtze").network.node_count == 38


def test_instance_round_trip(toy, tmp_path):
    save_instance(toy, tmp_path / "t.json")
    back = load_instance(tmp_path / "t.json")
    assert instance_to_dict(back) == instance_to_dict(toy)


def test_solution_round_trip(toy, tmp_path):
    sol = solve(toy, SolverConfig(iteration_limit=5))
    save_solution(sol, tmp_path / "s.json")
    back = load_solution(tmp_path / "s.json")
    assert [r.path for r in back.routes] == [r.path for r in sol.routes]
    assert back.schedule.trucks == sol.schedule.trucks
    assert back.cost.total == pytest.approx(sol.cost.total)


def test_kilometre_arcs_are_converted():
    doc = {"nodes": 2, "speed_kmh": 50, "arcs": [{"from": 0, "to": 1, "km": 100, "bidirectional": True}],
           "customers": [{"node": 1, "q": 1, "t_ea": 0, "t_ld": 10}]}
    assert instance_from_dict(doc).times[1, 0] == pytest.approx(2.0)


@pytest.mark.parametrize("doc, field", [
    ({"arcs": []}, "nodes"),
    ({"nodes": 2, "arcs": [{"from": 0, "to": 1, "hours": 1}], "customers": [{"node": 1, "q": "x"}]}, "q"),
    ({"nodes": 2, "arcs": [], "customers": [], "params": {"delta": 1}}, "delta"),
])
def test_invalid_fields_are_named(doc, field):
    with pytest.raises(InstanceInvalid) as exc:
        instance_from_dict(doc)
    assert field in str(exc.value)


def test_parse_error_has_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"nodes": 3,\n  "arcs": [,]}')
    with pytest.raises(ParseError) as exc:
        load_instance(p)
    assert exc.value.line == 2 and exc.value.column > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 15), st.floats(0, 40))
def test_generated_windows(seed, n, tol):
    inst = instance_from_dict(generate_instance_document("yangtze", n, seed, tol))
    for c in inst.customers:
        assert c.t_ld - c.t_ea >= tol - 1e-9
        assert c.t_ld >= inst.dist[0, c.node] - 1e-9
        assert 1 <= c.q <= 10


def test_generate_is_byte_identical(tmp_path, capsys):
    args = ["generate", "--customers", "6", "--seed", "11", "--tw-tolerance", "20"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args + ["--out", str(tmp_path / "g.json")]) == 0
    assert (tmp_path / "g.json").read_text() == first
    assert main(["generate", "--network", "random", "--nodes", "9", "--customers", "4", "--seed", "2"]) == 0


def test_solve_and_validate(tmp_path, capsys):
    out = tmp_path / "toy.sol.json"
    assert main(["solve", "toy", "--iterations", "10", "--compare-no-platoon", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "1.64% of energy" in text
    assert main(["validate", "toy", str(out)]) == 0
    assert "costs match" in capsys.readouterr().out


def test_validate_flags_tampered_cost(tmp_path, capsys):
    out = tmp_path / "s.json"
    main(["solve", "toy", "--iterations", "5", "--out", str(out)])
    doc = json.loads(out.read_text())
    doc["cost"]["total"] -= 1.0
    out.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["validate", "toy", str(out)]) == 4
    assert "cost mismatch" in capsys.readouterr().out


def test_validate_flags_broken_schedule(tmp_path, capsys):
    out = tmp_path / "s.json"
    main(["solve", "toy", "--iterations", "5", "--out", str(out)])
    doc = json.loads(out.read_text())
    doc["trucks"][0]["arrival"][1] -= 3.0
    out.write_text(json.dumps(doc))
    assert main(["validate", "toy", str(out)]) == 4


def test_malformed_instance_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{\n  \"nodes\": 3,\n  oops\n}")
    assert main(["solve", str(p)]) == 2
    assert "bad.json:3:3" in capsys.readouterr().err


def test_infeasible_exit_code(toy, tmp_path, monkeypatch):
    import truckplatoon.orchestrator as orch
    from truckplatoon.errors import Infeasible

    def refuse(*a, **k):
        raise Infeasible("no", cause="test")

    monkeypatch.setattr(orch, "schedule_routes", refuse)
    assert main(["solve", "toy", "--iterations", "2"]) == 3


def test_export_with_fleet_size(tmp_path, capsys):
    out = tmp_path / "toy.mps"
    assert main(["export", "toy", str(out), "--trucks", "2"]) == 0
    assert "28 x variables" in capsys.readouterr().out
    assert out.read_text().splitlines()[-1] == "ENDATA"


def test_bench_csv(tmp_path):
    sweep_doc = {"network": "yangtze", "sizes": [3, 5], "seeds": [0, 1], "iterations": 5,
            "sweeps": {"L": [1, 2, 4], "beta": [0.0, 0.1]}}
    text = run_bench(sweep_doc)
    assert "\r" not in text
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 3 * 2 + 2 * 2
    for r in rows:
        assert r["status"] in {"OK", "INFEASIBLE"}
        assert "," not in r["avg_cost_with"]
    beta0 = [r for r in rows if r["param"] == "beta" and float(r["value"]) == 0.0]
    assert all(abs(float(r["avg_benefit"])) < 1e-6 for r in beta0)
    for n in ("3", "5"):
        curve = [float(r["avg_benefit"]) for r in rows if r["param"] == "L" and r["customers"] == n]
        assert curve == sorted(curve)


def test_bench_in_parallel_matches_serial():
    sweep_doc = {"sizes": [3], "seeds": [0, 1, 2], "iterations": 3, "sweeps": {"beta": [0.1]}}
    assert run_bench({**sweep_doc, "workers": 2}) == run_bench(sweep_doc)


def test_empty_sweep_writes_header_only(tmp_path):
    sweep_doc = tmp_path / "s.json"
    sweep_doc.write_text(json.dumps({"sweeps": {}}))
    out = tmp_path / "o.csv"
    assert main(["bench", str(sweep_doc), "--out", str(out)]) == 0
    assert out.read_bytes().count(b"\n") == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "truckplatoon", "solve", "toy", "--iterations", "5"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert "energy" in res.stdout


def test_tampered_wait_reports_window_miss(tmp_path, capsys):
    out = tmp_path / "s.json"
    main(["solve", "toy.json", "--iterations", "5", "--out", str(out)])
    doc = json.loads(out.read_text())
    truck = doc["trucks"][0]
    stop = truck["stops"][0]
    truck["wait"][stop] += 500.0
    out.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["validate", "toy", str(out)]) == 4
    text = capsys.readouterr().out
    assert "[window_ld]" in text and str(truck["customers"][0]) in text


@pytest.mark.parametrize("seed", range(3))
def test_generate_solve_validate_pipeline(tmp_path, seed):
    inst, sol = tmp_path / "i.json", tmp_path / "s.json"
    assert main(["generate", "--customers", "8", "--seed", str(seed), "--out", str(inst)]) == 0
    assert main(["solve", str(inst), "--iterations", "20", "--out", str(sol)]) == 0
    assert main(["validate", str(inst), str(sol)]) == 0
