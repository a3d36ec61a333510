"""Mixed-integer linear model of the minimum revisit-time walk problem.

The model sequences ``k`` visits with binary edge choices and tracks,
for every target, the time elapsed since its last visit.  Variables:

* ``x_i_j_v`` (binary): visit ``v`` travels from target ``i`` to ``j``.
* ``f_i_v`` (continuous): time elapsed since the last visit to ``i``,
  measured right after visit ``v``.  The accumulation wraps: the first
  visit of a cycle follows the last visit of the previous cycle.
* ``z_i_v`` (continuous, ``v <= k - 1``): equals ``f_i_v`` when visit
  ``v`` is to ``i`` and zero otherwise; subtracting it restarts the
  clock of a just-visited target.  The product defining it is encoded
  by four big-M rows, so the variable is declared free and its
  nonnegativity is one of those rows.  No such variable exists for
  ``v = k``: the final visit is pinned to the depot, so the wrap rows
  spell out both cases directly.
* ``T`` (continuous): upper proxy for every ``f_i_v``; the objective.

Minimizing ``T`` over this feasible set yields exactly the optimal
revisit time for ``k`` visits, which is how the exact solvers here can
be cross-checked against any off-the-shelf MILP solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, NamedTuple

from .instance import Instance
from .walks import Walk

__all__ = [
    "Assignment",
    "LinearRow",
    "MilpModel",
    "VerificationReport",
    "Violation",
    "build_model",
    "export_lp",
    "lp_text",
    "verify_assignment",
    "walk_to_assignment",
]

VERIFY_TOL = 1e-6


def x_name(i: int, j: int, v: int) -> str:
    return f"x_{i}_{j}_{v}"


def f_name(i: int, v: int) -> str:
    return f"f_{i}_{v}"


def z_name(i: int, v: int) -> str:
    return f"z_{i}_{v}"


@dataclass(frozen=True)
class LinearRow:
    """One constraint: coeffs as ordered (variable, coefficient) pairs."""

    name: str
    tag: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str
    rhs: float

    def __post_init__(self) -> None:
        if self.sense not in ("<=", ">=", "="):
            raise ValueError(f"bad sense {self.sense!r}")

    def evaluate(self, values: dict[str, float]) -> float:
        return sum(c * values[var] for var, c in self.coeffs)

    def violation(self, values: dict[str, float]) -> float:
        lhs = self.evaluate(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class MilpModel:
    inst: Instance
    k: int
    depot: int
    big_m: float
    binaries: tuple[str, ...]
    continuous: tuple[str, ...]
    free: tuple[str, ...]
    rows: tuple[LinearRow, ...]
    objective: str = "T"

    @property
    def num_binaries(self) -> int:
        return len(self.binaries)

    @property
    def num_continuous(self) -> int:
        return len(self.continuous)

    def variable_names(self) -> tuple[str, ...]:
        return self.binaries + self.continuous

    def rows_tagged(self, tag: str) -> tuple[LinearRow, ...]:
        return tuple(r for r in self.rows if r.tag == tag)


@dataclass(frozen=True)
class Assignment:
    """A value for every variable of some model."""

    values: dict[str, float]

    @property
    def objective(self) -> float:
        return self.values["T"]


class Violation(NamedTuple):
    row: str
    tag: str
    amount: float


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    objective: float
    violations: tuple[Violation, ...]

    def by_tag(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.violations:
            counts[v.tag] = counts.get(v.tag, 0) + 1
        return counts


def build_model(inst: Instance, k: int) -> MilpModel:
    """Materialize the full constraint system for ``k`` visits.

    Row families, in emission order: deg-flow (a visit to a target is
    followed by a departure from it), no-self (an edge never returns to
    its own tail), depot (the walk leaves the depot first and enters it
    last), cover (every target departed from at least once), unique-edge
    (each visit uses exactly one edge), accum (clock recursion between
    consecutive visits), wrap-nondepot / wrap-depot (clock closure from
    visit k to visit 1), proxy (T dominates every clock), and bigM-1..4
    (linearization of the clock-reset product).
    """
    if k < 2:
        raise ValueError(f"k={k} is too small for a closed walk model")
    n = inst.n
    d = inst.depot
    targets = list(inst.targets())
    cost = inst.cost_rows()
    big_m = k * inst.max_cost

    binaries = tuple(
        x_name(i, j, v) for i in targets for j in targets for v in range(1, k + 1)
    )
    f_vars = tuple(f_name(i, v) for i in targets for v in range(1, k + 1))
    z_vars = tuple(z_name(i, v) for i in targets for v in range(1, k))
    continuous = f_vars + z_vars + ("T",)

    rows: list[LinearRow] = []

    # deg-flow: sum_l x[l][i][v-1] - sum_j x[i][j][v] = 0
    for i in targets:
        for v in range(2, k + 1):
            coeffs = [(x_name(l, i, v - 1), 1.0) for l in targets]
            coeffs += [(x_name(i, j, v), -1.0) for j in targets]
            rows.append(LinearRow(f"deg_flow_{i}_{v}", "deg-flow", tuple(coeffs), "=", 0.0))

    # no-self: x[i][i][v] = 0
    for i in targets:
        for v in range(1, k + 1):
            rows.append(
                LinearRow(f"no_self_{i}_{v}", "no-self", ((x_name(i, i, v), 1.0),), "=", 0.0)
            )

    # depot: first visit leaves d, last visit enters d
    rows.append(
        LinearRow(
            "depot_1",
            "depot",
            tuple((x_name(d, j, 1), 1.0) for j in targets),
            "=",
            1.0,
        )
    )
    rows.append(
        LinearRow(
            "depot_2",
            "depot",
            tuple((x_name(l, d, k), 1.0) for l in targets),
            "=",
            1.0,
        )
    )

    # cover: sum_v sum_j x[i][j][v] >= 1
    for i in targets:
        coeffs = tuple(
            (x_name(i, j, v), 1.0) for v in range(1, k + 1) for j in targets
        )
        rows.append(LinearRow(f"cover_{i}", "cover", coeffs, ">=", 1.0))

    # unique-edge: sum_{i,j} x[i][j][v] = 1
    for v in range(1, k + 1):
        coeffs = tuple((x_name(i, j, v), 1.0) for i in targets for j in targets)
        rows.append(LinearRow(f"unique_edge_{v}", "unique-edge", coeffs, "=", 1.0))

    # accum: f[i][v] - f[i][v-1] + z[i][v-1] - sum_{a,b} c(a,b) x[a][b][v] = 0
    for i in targets:
        for v in range(2, k + 1):
            coeffs = [
                (f_name(i, v), 1.0),
                (f_name(i, v - 1), -1.0),
                (z_name(i, v - 1), 1.0),
            ]
            coeffs += [
                (x_name(a, b, v), -cost[a - 1][b - 1])
                for a in targets
                for b in targets
                if a != b
            ]
            rows.append(LinearRow(f"accum_{i}_{v}", "accum", tuple(coeffs), "=", 0.0))

    # wrap-nondepot: f[i][1] - f[i][k] - sum_j c(d,j) x[d][j][1] = 0, i != d
    first_leg = [
        (x_name(d, j, 1), -cost[d - 1][j - 1]) for j in targets if j != d
    ]
    for i in targets:
        if i == d:
            continue
        coeffs = [(f_name(i, 1), 1.0), (f_name(i, k), -1.0)] + first_leg
        rows.append(
            LinearRow(f"wrap_nondepot_{i}", "wrap-nondepot", tuple(coeffs), "=", 0.0)
        )

    # wrap-depot: f[d][1] - sum_j c(d,j) x[d][j][1] = 0
    rows.append(
        LinearRow(
            "wrap_depot",
            "wrap-depot",
            tuple([(f_name(d, 1), 1.0)] + first_leg),
            "=",
            0.0,
        )
    )

    # proxy: f[i][v] - T <= 0
    for i in targets:
        for v in range(1, k + 1):
            rows.append(
                LinearRow(
                    f"proxy_{i}_{v}",
                    "proxy",
                    ((f_name(i, v), 1.0), ("T", -1.0)),
                    "<=",
                    0.0,
                )
            )

    # bigM-1..4: z[i][v] = f[i][v] * (visit v is to i), linearized
    for i in targets:
        for v in range(1, k):
            arrival = [(x_name(l, i, v), -big_m) for l in targets]
            rows.append(
                LinearRow(
                    f"bigM_1_{i}_{v}",
                    "bigM-1",
                    tuple([(z_name(i, v), 1.0)] + arrival),
                    "<=",
                    0.0,
                )
            )
    for i in targets:
        for v in range(1, k):
            arrival = [(x_name(l, i, v), -big_m) for l in targets]
            rows.append(
                LinearRow(
                    f"bigM_2_{i}_{v}",
                    "bigM-2",
                    tuple([(z_name(i, v), 1.0), (f_name(i, v), -1.0)] + arrival),
                    ">=",
                    -big_m,
                )
            )
    for i in targets:
        for v in range(1, k):
            rows.append(
                LinearRow(
                    f"bigM_3_{i}_{v}",
                    "bigM-3",
                    ((z_name(i, v), 1.0), (f_name(i, v), -1.0)),
                    "<=",
                    0.0,
                )
            )
    for i in targets:
        for v in range(1, k):
            rows.append(
                LinearRow(
                    f"bigM_4_{i}_{v}",
                    "bigM-4",
                    ((z_name(i, v), 1.0),),
                    ">=",
                    0.0,
                )
            )

    return MilpModel(
        inst=inst,
        k=k,
        depot=d,
        big_m=big_m,
        binaries=binaries,
        continuous=continuous,
        free=z_vars,
        rows=tuple(rows),
    )


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _term(var: str, coef: float, first: bool) -> str:
    sign = "-" if coef < 0 else "+"
    mag = abs(coef)
    body = var if mag == 1.0 else f"{_fmt(mag)} {var}"
    if first:
        return f"- {body}" if coef < 0 else body
    return f"{sign} {body}"


def _wrap_tokens(head: str, tokens: list[str], width: int = 72) -> list[str]:
    lines = [head]
    for tok in tokens:
        if len(lines[-1]) + 1 + len(tok) > width and lines[-1] != " ":
            lines.append(" ")
        lines[-1] = lines[-1] + " " + tok if lines[-1] != " " else " " + tok
    return lines


def lp_text(model: MilpModel) -> str:
    """The model in the standard LP interchange dialect.

    Deterministic down to the byte for a fixed model: section order,
    row order, term order, and number formatting are all fixed.
    """
    out: list[str] = ["Minimize", f" obj: {model.objective}", "Subject To"]
    for row in model.rows:
        tokens: list[str] = []
        for var, coef in row.coeffs:
            if coef == 0.0:
                continue
            tokens.append(_term(var, coef, first=not tokens))
        tokens.append(f"{row.sense} {_fmt(row.rhs)}")
        out.extend(_wrap_tokens(f" {row.name}:", tokens))
    out.append("Bounds")
    for var in model.free:
        out.append(f" {var} free")
    out.append("Binary")
    for var in model.binaries:
        out.append(f" {var}")
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: MilpModel, sink: Any) -> None:
    """Write the LP text to a path or file-like sink."""
    text = lp_text(model)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)


def walk_to_assignment(model: MilpModel, w: Walk) -> Assignment:
    """Translate a walk into a value for every model variable.

    Edge binaries trace the walk; each clock value is the cumulative
    travel time since the previous visit to that target, wrapping past
    the closure; reset variables copy the clock at the target's own
    visits; T is the largest clock value, i.e. the revisit time.
    """
    if w.inst is not model.inst:
        raise ValueError("walk and model were built from different instances")
    if w.k != model.k:
        raise ValueError(f"walk has {w.k} visits, model expects {model.k}")
    if w.start != model.depot:
        raise ValueError("walk must start at the model depot")
    k = model.k
    seq = w.seq
    cost = model.inst.cost_rows()
    values: dict[str, float] = {name: 0.0 for name in model.variable_names()}

    cum = [0.0] * (k + 1)
    for v in range(1, k + 1):
        cum[v] = cum[v - 1] + cost[seq[v - 1] - 1][seq[v] - 1]
        values[x_name(seq[v - 1], seq[v], v)] = 1.0
    total = cum[k]

    top = 0.0
    for i in model.inst.targets():
        visits = [v for v in range(1, k + 1) if seq[v] == i]
        for v in range(1, k + 1):
            prev = max((u for u in visits if u < v), default=None)
            if prev is None:
                elapsed = cum[v] + total - cum[max(visits)]
            else:
                elapsed = cum[v] - cum[prev]
            values[f_name(i, v)] = elapsed
            top = max(top, elapsed)
            if v < k:
                values[z_name(i, v)] = elapsed if seq[v] == i else 0.0
            assert elapsed <= model.big_m + 1e-9, "clock exceeded the big-M bound"
    values["T"] = top
    return Assignment(values=values)


def verify_assignment(
    model: MilpModel, a: Assignment, tol: float = VERIFY_TOL
) -> VerificationReport:
    """Check every row at the given tolerance and report what failed."""
    found: list[Violation] = []
    for row in model.rows:
        amount = row.violation(a.values)
        if amount > tol:
            found.append(Violation(row=row.name, tag=row.tag, amount=amount))
    return VerificationReport(
        ok=not found, objective=a.values["T"], violations=tuple(found)
    )
