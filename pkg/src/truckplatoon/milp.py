"""Exact mixed-integer model of routing, loading, timing and platooning, with
fixed-format MPS export so any external MILP solver can solve it.

Index sets: arcs ``A`` (a = |A|), trucks ``K``, nodes ``N`` (n), customers
``C`` (c), arcs entering a customer ``A_C`` and arcs not entering the depot
``A_R``. Variable counts:

====== ===============  ==========
symbol meaning          count
====== ===============  ==========
x      arc used         a*K
l      platoon leader   a*K
f      k2 follows k1    a*K*(K-1)
g      customer served  c*K
y      load at node     n*K
s      arrival time     n*K
w      wait time        n*K
vl     leader weight    a*K
vf     follower weight  a*K
====== ===============  ==========

Row families and counts: ``flow`` and ``once`` n*K each, ``assign`` c,
``visit`` c*K, ``initload`` K, ``cap`` K, ``load`` |A_C|*K, ``loadlb``
|A_R|*K, ``role`` a*K, ``size`` a*K, ``syncA`` and ``syncB`` a*K*(K-1) each,
``time`` |A_R|*K, ``early`` and ``late`` c*K each, and ``lead1``..``lead3``,
``fol1``..``fol3`` a*K each. Sign, integrality and nonnegativity
requirements are variable bounds.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .instance import ProblemInstance
from .network import DEPOT

BINARY = "binary"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float = 0.0
    ub: float = math.inf


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[int, float], ...]
    sense: str = "min"

    @cached_property
    def index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def count(self, prefix: str) -> int:
        """Variables (or rows, with a trailing ``:``) whose name starts with ``prefix_``."""
        if prefix.endswith(":"):
            p = prefix[:-1] + "_"
            return sum(1 for c in self.constraints if c.name.startswith(p))
        p = prefix + "_"
        return sum(1 for v in self.variables if v.name.startswith(p))

    def evaluate(self, values) -> tuple[float, list[str]]:
        """Objective value and names of rows violated by more than 1e-6."""
        obj = sum(c * values[i] for i, c in self.objective)
        bad = []
        for row in self.constraints:
            lhs = sum(c * values[i] for i, c in row.terms)
            if (row.sense == "<=" and lhs > row.rhs + 1e-6 or row.sense == ">=" and lhs < row.rhs - 1e-6
                    or row.sense == "=" and abs(lhs - row.rhs) > 1e-6):
                bad.append(row.name)
        return obj, bad


class _Builder:
    def __init__(self):
        self.vars: list[Variable] = []
        self.idx: dict[str, int] = {}
        self.rows: list[Constraint] = []

    def var(self, name, kind=CONTINUOUS, lb=0.0, ub=math.inf):
        self.idx[name] = len(self.vars)
        self.vars.append(Variable(name, kind, lb, ub if kind != BINARY else 1.0))

    def row(self, name, terms, sense, rhs):
        merged: dict[int, float] = {}
        for vname, coef in terms:
            i = self.idx[vname]
            merged[i] = merged.get(i, 0.0) + coef
        self.rows.append(Constraint(name, tuple((i, c) for i, c in merged.items() if c != 0.0), sense, float(rhs)))


def build_full_model(instance: ProblemInstance, trucks: int | None = None) -> MilpModel:
    """The linearised exact model for ``trucks`` trucks (default one per customer).

    Besides the printed load rows (an upper bound on the load after each
    customer), the model carries the matching lower bounds on every arc not
    entering the depot (``loadlb``): without them a minimising solver could
    report loads below the real cargo and understate fuel.
    """
    p = instance.params
    net = instance.network
    K = range(len(instance.customers) if trucks is None else trucks)
    N = list(net.nodes)
    C = sorted(net.customer_nodes)
    A = [(i, j) for i, j, _ in net.arcs]
    t = {(i, j): tt for i, j, tt in net.arcs}
    q = {c.node: c.q for c in instance.customers}
    M = instance.big_M
    cap_rate = p.eta * p.Q + p.gamma
    b = _Builder()

    for i, j in A:
        for k in K:
            b.var(f"x_{i}_{j}_{k}", BINARY)
    for i, j in A:
        for k in K:
            b.var(f"l_{i}_{j}_{k}", BINARY)
    for i, j in A:
        for k1 in K:
            for k2 in K:
                if k1 != k2:
                    b.var(f"f_{i}_{j}_{k1}_{k2}", BINARY)
    for c in C:
        for k in K:
            b.var(f"g_{c}_{k}", BINARY)
    for sym in ("y", "s", "w"):
        for i in N:
            for k in K:
                b.var(f"{sym}_{i}_{k}")
    for sym in ("vl", "vf"):
        for i, j in A:
            for k in K:
                b.var(f"{sym}_{i}_{j}_{k}")

    into = {j: [a for a in A if a[1] == j] for j in N}
    out = {j: [a for a in A if a[0] == j] for j in N}
    for k in K:
        for j in N:
            b.row(f"flow_{j}_{k}", [(f"x_{i}_{j}_{k}", 1.0) for i, _ in into[j]]
                  + [(f"x_{j}_{h}_{k}", -1.0) for _, h in out[j]], "=", 0.0)
            b.row(f"once_{j}_{k}", [(f"x_{i}_{j}_{k}", 1.0) for i, _ in into[j]], "<=", 1.0)
    for c in C:
        b.row(f"assign_{c}", [(f"g_{c}_{k}", 1.0) for k in K], "=", 1.0)
    for c in C:
        for k in K:
            b.row(f"visit_{c}_{k}", [(f"x_{i}_{c}_{k}", 1.0) for i, _ in into[c]] + [(f"g_{c}_{k}", -1.0)], ">=", 0.0)
    for k in K:
        b.row(f"initload_{k}", [(f"y_{DEPOT}_{k}", 1.0)] + [(f"g_{c}_{k}", -q[c]) for c in C], "=", 0.0)
    for k in K:
        b.row(f"cap_{k}", [(f"y_{DEPOT}_{k}", 1.0)], "<=", p.Q)
    for k in K:
        for i, j in A:
            if j in q:
                b.row(f"load_{i}_{j}_{k}", [(f"y_{i}_{k}", 1.0), (f"g_{j}_{k}", -q[j]), (f"x_{i}_{j}_{k}", -M),
                                            (f"y_{j}_{k}", -1.0)], ">=", -M)
    for k in K:
        for i, j in A:
            if j != DEPOT:
                drop = [(f"g_{j}_{k}", q[j])] if j in q else []
                b.row(f"loadlb_{i}_{j}_{k}", [(f"y_{j}_{k}", 1.0), (f"y_{i}_{k}", -1.0), (f"x_{i}_{j}_{k}", -M)] + drop,
                      ">=", -M)
    for i, j in A:
        for k in K:
            b.row(f"role_{i}_{j}_{k}", [(f"x_{i}_{j}_{k}", 1.0), (f"l_{i}_{j}_{k}", -1.0)]
                  + [(f"f_{i}_{j}_{k1}_{k}", -1.0) for k1 in K if k1 != k], "=", 0.0)
    for i, j in A:
        for k1 in K:
            b.row(f"size_{i}_{j}_{k1}", [(f"f_{i}_{j}_{k1}_{k2}", 1.0) for k2 in K if k2 != k1]
                  + [(f"l_{i}_{j}_{k1}", -(p.L - 1.0))], "<=", 0.0)
    for i, j in A:
        for k1 in K:
            for k2 in K:
                if k1 == k2:
                    continue
                dep = [(f"s_{i}_{k1}", 1.0), (f"w_{i}_{k1}", 1.0), (f"s_{i}_{k2}", -1.0), (f"w_{i}_{k2}", -1.0)]
                b.row(f"syncA_{i}_{j}_{k1}_{k2}", dep + [(f"f_{i}_{j}_{k1}_{k2}", -M)], ">=", -M)
                b.row(f"syncB_{i}_{j}_{k1}_{k2}", dep + [(f"f_{i}_{j}_{k1}_{k2}", M)], "<=", M)
    for i, j in A:
        if j == DEPOT:
            continue
        for k in K:
            b.row(f"time_{i}_{j}_{k}", [(f"s_{i}_{k}", 1.0), (f"w_{i}_{k}", 1.0), (f"x_{i}_{j}_{k}", M),
                                        (f"s_{j}_{k}", -1.0)], "<=", M - t[i, j])
    for cd in instance.customers:
        for k in K:
            b.row(f"early_{cd.node}_{k}", [(f"s_{cd.node}_{k}", 1.0), (f"g_{cd.node}_{k}", -cd.t_ea)], ">=", 0.0)
    for cd in instance.customers:
        for k in K:
            b.row(f"late_{cd.node}_{k}", [(f"s_{cd.node}_{k}", 1.0), (f"w_{cd.node}_{k}", 1.0),
                                          (f"g_{cd.node}_{k}", -cd.t_ld)], "<=", 0.0)
    for i, j in A:
        for k in K:
            f_in = [(f"f_{i}_{j}_{k1}_{k}", 1.0) for k1 in K if k1 != k]
            b.row(f"lead1_{i}_{j}_{k}", [(f"vl_{i}_{j}_{k}", 1.0), (f"l_{i}_{j}_{k}", -cap_rate)], "<=", 0.0)
            b.row(f"lead2_{i}_{j}_{k}", [(f"vl_{i}_{j}_{k}", 1.0), (f"y_{i}_{k}", -p.eta)], "<=", p.gamma)
            b.row(f"lead3_{i}_{j}_{k}", [(f"vl_{i}_{j}_{k}", 1.0), (f"y_{i}_{k}", -p.eta), (f"l_{i}_{j}_{k}", -cap_rate)],
                  ">=", p.gamma - cap_rate)
            b.row(f"fol1_{i}_{j}_{k}", [(f"vf_{i}_{j}_{k}", 1.0)] + [(n, -cap_rate * c) for n, c in f_in], "<=", 0.0)
            b.row(f"fol2_{i}_{j}_{k}", [(f"vf_{i}_{j}_{k}", 1.0), (f"y_{i}_{k}", -p.eta)], "<=", p.gamma)
            b.row(f"fol3_{i}_{j}_{k}", [(f"vf_{i}_{j}_{k}", 1.0), (f"y_{i}_{k}", -p.eta)]
                  + [(n, -cap_rate * c) for n, c in f_in], ">=", p.gamma - cap_rate)

    obj: dict[int, float] = {}
    for i, j in A:
        for k in K:
            if i == DEPOT:
                obj[b.idx[f"x_{i}_{j}_{k}"]] = p.c1
            rate = p.c2 * p.alpha / p.gamma * t[i, j]
            obj[b.idx[f"vl_{i}_{j}_{k}"]] = rate
            obj[b.idx[f"vf_{i}_{j}_{k}"]] = rate * (1.0 - p.beta)
    objective = tuple((i, c) for i, c in sorted(obj.items()) if c != 0.0)
    return MilpModel(instance.name or "truckplatoon", tuple(b.vars), tuple(b.rows), objective)


# ---------------------------------------------------------------- MPS I/O

_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _num(x: float) -> str:
    if x == math.inf:
        return "1e+30"
    if x == -math.inf:
        return "-1e+30"
    return repr(float(x))


def _line(*fields) -> str:
    """Fixed-format field layout (columns 2, 5, 15, 25, 40, 50)."""
    code, n1, n2, v2, n3, v3 = (list(fields) + [""] * 6)[:6]
    s = f" {code:<2} {n1:<8}  {n2:<8}  {v2:>12}"
    if n3:
        s += f"   {n3:<8}  {v3:>12}"
    return s.rstrip()


def _short(prefix: str, i: int) -> str:
    return f"{prefix}{i:07d}"


def export_mps(model: MilpModel, path) -> None:
    """Write ``model`` as a fixed-format MPS file.

    Row and column names are 8-character codes (``R0000012``, ``X0000345``);
    comment lines map each code to its descriptive name. Coefficients are
    written with full round-trip precision, so a value may overrun its
    12-character field; readers that split on whitespace are unaffected.

    Raises:
        OSError: if the file cannot be written.
    """
    cols = [_short("X", i) for i in range(len(model.variables))]
    rows = [_short("R", i) for i in range(len(model.constraints))]
    col_terms: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for i, c in model.objective:
        col_terms[i].append(("COST", c))
    for r, row in enumerate(model.constraints):
        for i, c in row.terms:
            col_terms[i].append((rows[r], c))
    out = [f"* {model.name}", "* name map: code descriptive-name"]
    out += [f"* {code} {v.name}" for code, v in zip(cols, model.variables)]
    out += [f"* {code} {c.name}" for code, c in zip(rows, model.constraints)]
    out.append(f"NAME          {model.name[:8]}")
    out.append("ROWS")
    out.append(_line("N", "COST"))
    out += [_line(_SENSE_CODE[c.sense], code) for code, c in zip(rows, model.constraints)]
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for i, v in enumerate(model.variables):
        is_int = v.kind == BINARY
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            out.append(f"    MARKER{marker:04d}  'MARKER'                 {tag}")
            marker += 1
            in_int = is_int
        terms = col_terms[i] or [("COST", 0.0)]
        out += [_line("", cols[i], r, _num(c)) for r, c in terms]
    if in_int:
        out.append(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'")
    out.append("RHS")
    out += [_line("", "RHS", code, _num(c.rhs)) for code, c in zip(rows, model.constraints) if c.rhs != 0.0]
    out.append("BOUNDS")
    for code, v in zip(cols, model.variables):
        if v.kind == BINARY:
            out.append(_line("BV", "BND", code))
            continue
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(_line("FR", "BND", code))
            continue
        if v.lb == -math.inf:
            out.append(_line("MI", "BND", code))
        elif v.lb != 0.0:
            out.append(_line("LO", "BND", code, _num(v.lb)))
        if v.ub != math.inf:
            out.append(_line("UP", "BND", code, _num(v.ub)))
    out.append("ENDATA")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def read_mps(path) -> MilpModel:
    """Parse an MPS file written by :func:`export_mps` back into a model.

    Descriptive names are restored from the comment map when present.
    """
    names: dict[str, str] = {}
    title = ""
    section = None
    row_order: list[str] = []
    senses: dict[str, str] = {}
    obj_row = None
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    terms: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    lb: dict[str, float] = {}
    ub: dict[str, float] = {}
    binary: set[str] = set()
    in_int = False
    lines = Path(path).read_text(encoding="ascii").splitlines()
    for n, line in enumerate(lines):
        if line.startswith("*"):
            parts = line[1:].split()
            if n == 0 and parts:
                title = parts[0]
            if len(parts) == 2 and parts[0] not in ("name",) and parts[0][:1] in "XR" and parts[0][1:].isdigit():
                names[parts[0]] = parts[1]
            continue
        if not line.strip():
            continue
        if not line[0].isspace():
            section = line.split()[0]
            continue
        f = line.split()
        if section == "ROWS":
            if f[0] == "N" and obj_row is None:
                obj_row = f[1]
            else:
                senses[f[1]] = _CODE_SENSE[f[0]]
                row_order.append(f[1])
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            col = f[0]
            if col not in terms:
                col_order.append(col)
                terms[col] = []
                col_int[col] = in_int
            for r, v in zip(f[1::2], f[2::2]):
                terms[col].append((r, float(v)))
        elif section == "RHS":
            for r, v in zip(f[1::2], f[2::2]):
                rhs[r] = float(v)
        elif section == "BOUNDS":
            kind, col = f[0], f[2]
            val = float(f[3]) if len(f) > 3 else None
            if kind == "BV":
                binary.add(col)
            elif kind == "LO":
                lb[col] = val
            elif kind == "UP":
                ub[col] = val
            elif kind == "MI":
                lb[col] = -math.inf
            elif kind == "FR":
                lb[col], ub[col] = -math.inf, math.inf
            elif kind == "FX":
                lb[col] = ub[col] = val
    col_idx = {c: i for i, c in enumerate(col_order)}
    variables = []
    for c in col_order:
        if c in binary or col_int[c]:
            variables.append(Variable(names.get(c, c), BINARY, 0.0, 1.0))
        else:
            u = ub.get(c, math.inf)
            variables.append(Variable(names.get(c, c), CONTINUOUS, lb.get(c, 0.0), math.inf if u >= 1e30 else u))
    row_terms: dict[str, list[tuple[int, float]]] = {r: [] for r in row_order}
    objective = []
    for c in col_order:
        for r, v in terms[c]:
            if r == obj_row:
                if v != 0.0:
                    objective.append((col_idx[c], v))
            else:
                row_terms[r].append((col_idx[c], v))
    constraints = tuple(Constraint(names.get(r, r), tuple(row_terms[r]), senses[r], rhs.get(r, 0.0)) for r in row_order)
    return MilpModel(title, tuple(variables), constraints, tuple(objective))


# ------------------------------------------------------ external solver

@dataclass
class ExternalResult:
    status: str
    objective: float | None
    values: dict[str, float] = field(default_factory=dict)


def highs_available() -> bool:
    try:
        import highspy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_mps_with_highs(path, time_limit: float = 60.0, names: MilpModel | None = None) -> ExternalResult:
    """Solve an MPS file with HiGHS (optional dependency ``highspy``).

    With ``names`` (the exported model), values are keyed by descriptive
    variable name; otherwise by the MPS column codes.
    """
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("mip_rel_gap", 0.0)
    h.readModel(str(path))
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        return ExternalResult(status, None)
    vals = list(h.getSolution().col_value)
    lp = h.getLp()
    keys = [v.name for v in names.variables] if names is not None else list(lp.col_names_)
    return ExternalResult(status, h.getInfo().objective_function_value, dict(zip(keys, vals)))


def solve_model_with_highs(model: MilpModel, time_limit: float = 60.0) -> ExternalResult:
    """Export to a temporary MPS file and solve it with HiGHS."""
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.mps"
        export_mps(model, path)
        return solve_mps_with_highs(path, time_limit, model)
