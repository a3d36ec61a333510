"""Problem instances: targets, travel times, and the depot.

An instance describes one monitoring problem: ``n`` targets labeled
``1..n``, a strictly positive travel time between every ordered pair of
distinct targets, and a depot target where every plan starts and ends.
Travel times are expected to satisfy the triangle inequality.
``load_instance`` enforces that; instances built directly are checked
structurally only, so that :func:`validate_metric` can be used to report
violations on deliberately broken data.

Two document forms are understood::

    {"name": ..., "n": 4, "depot": 2, "cost": [[0, ...], ...]}
    {"name": ..., "n": 4, "depot": 2, "points": [[x, y], ...]}

The points form is converted to Euclidean travel times on load.
:func:`save_instance` always writes the canonical cost form and
round-trips bit-identically.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

__all__ = [
    "Instance",
    "InstanceError",
    "MetricReport",
    "MetricViolationError",
    "benchmark_instance",
    "instance_to_dict",
    "load_instance",
    "points_document",
    "random_euclidean_instance",
    "save_instance",
    "validate_metric",
]


class InstanceError(ValueError):
    """Malformed instance data: bad shape, ids, signs, or parse failure."""


class MetricViolationError(InstanceError):
    """Travel times violate the triangle inequality beyond tolerance."""

    def __init__(self, report: "MetricReport") -> None:
        u, v, w, amount = report.worst
        super().__init__(
            f"triangle inequality violated: c({u},{w}) exceeds "
            f"c({u},{v}) + c({v},{w}) by {amount:.6g} "
            f"(tolerance {report.tolerance:.6g}, "
            f"{len(report.violations)} ordered triple(s) total)"
        )
        self.report = report


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem instance.

    Targets are identified by the integers ``1..n`` throughout the
    package.  ``cost[u-1, v-1]`` is the travel time from target ``u`` to
    target ``v``; asymmetric matrices are accepted.  Instances are
    compared by identity, never by value.
    """

    n: int
    cost: np.ndarray
    depot: int = 1
    name: str = ""
    points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InstanceError(f"need at least 2 targets, got n={self.n}")
        cost = np.asarray(self.cost, dtype=float)
        if cost.shape != (self.n, self.n):
            raise InstanceError(
                f"cost matrix shape {cost.shape} does not match n={self.n}"
            )
        if not np.all(np.isfinite(cost)):
            raise InstanceError("cost matrix contains non-finite entries")
        if np.any(np.diagonal(cost) != 0.0):
            raise InstanceError("cost matrix diagonal must be zero")
        off = ~np.eye(self.n, dtype=bool)
        if np.any(cost[off] <= 0.0):
            raise InstanceError("off-diagonal travel times must be positive")
        if not 1 <= self.depot <= self.n:
            raise InstanceError(f"depot {self.depot} outside 1..{self.n}")
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.shape != (self.n, 2):
                raise InstanceError(
                    f"points shape {pts.shape} does not match n={self.n}"
                )
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)

    def travel_time(self, u: int, v: int) -> float:
        """Travel time from target ``u`` to target ``v`` (1-based ids)."""
        return float(self.cost[u - 1, v - 1])

    def targets(self) -> range:
        return range(1, self.n + 1)

    def cost_rows(self) -> list[list[float]]:
        """Plain nested-list copy of the cost matrix (hot-loop friendly)."""
        return self.cost.tolist()

    @property
    def max_cost(self) -> float:
        return float(self.cost.max())


@dataclass(frozen=True)
class MetricReport:
    """Outcome of a triangle-inequality scan.

    ``violations`` holds ordered triples ``(u, v, w, amount)`` where
    going direct from ``u`` to ``w`` is slower than detouring through
    ``v`` by ``amount`` beyond the tolerance, sorted worst-first.
    """

    violations: tuple[tuple[int, int, int, float], ...]
    tolerance: float

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def worst(self) -> tuple[int, int, int, float]:
        if not self.violations:
            raise ValueError("no violations recorded")
        return self.violations[0]


def validate_metric(inst: Instance, tolerance: float | None = None) -> MetricReport:
    """Scan all ordered triples for triangle-inequality violations.

    The default tolerance is ``1e-6 * max(cost)`` so that matrices given
    to a few decimals are not rejected for rounding dust.  Pass
    ``tolerance=0.0`` for an exact check.
    """
    if tolerance is None:
        tolerance = 1e-6 * inst.max_cost
    c = inst.cost
    # amount[u, v, w] = c[u, w] - (c[u, v] + c[v, w])
    amount = c[:, None, :] - (c[:, :, None] + c[None, :, :])
    u, v, w = np.nonzero(amount > tolerance)
    distinct = (u != v) & (v != w) & (u != w)
    triples = sorted(
        (
            (int(a) + 1, int(b) + 1, int(d) + 1, float(amount[a, b, d]))
            for a, b, d in zip(u[distinct], v[distinct], w[distinct])
        ),
        key=lambda t: (-t[3], t[0], t[1], t[2]),
    )
    return MetricReport(violations=tuple(triples), tolerance=tolerance)


_COST_KEYS = {"name", "n", "depot", "cost"}
_POINT_KEYS = {"name", "n", "depot", "points"}


def _document_from(source: Any) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str):
        # Paths are the common case; literal JSON is handy in tests.
        text = source if source.lstrip().startswith("{") else Path(source).read_text()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        raise InstanceError(f"cannot load an instance from {type(source).__name__}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    return doc


def load_instance(source: Any) -> Instance:
    """Parse and fully validate an instance document.

    ``source`` may be a path, an open file, a JSON string, or an already
    parsed dict.  Both the cost form and the points form are accepted.
    Raises :class:`MetricViolationError` when the matrix breaks the
    triangle inequality beyond ``1e-6 * max(cost)``.
    """
    doc = _document_from(source)
    keys = set(doc)
    has_cost = "cost" in keys
    has_points = "points" in keys
    if has_cost == has_points:
        raise InstanceError("instance document needs exactly one of 'cost' or 'points'")
    allowed = _COST_KEYS if has_cost else _POINT_KEYS
    unknown = keys - allowed
    if unknown:
        raise InstanceError(f"unknown instance fields: {sorted(unknown)}")

    name = doc.get("name", "")
    depot = doc.get("depot", 1)
    if not isinstance(depot, int):
        raise InstanceError("'depot' must be an integer target id")

    if has_points:
        pts = np.asarray(doc["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InstanceError("'points' must be a list of [x, y] pairs")
        n = doc.get("n", len(pts))
        if n != len(pts):
            raise InstanceError(f"'n'={n} does not match {len(pts)} points")
        cost = _euclidean_costs(pts)
        inst = Instance(n=n, cost=cost, depot=depot, name=name, points=pts)
    else:
        if "n" not in doc:
            raise InstanceError("cost-form instance document requires 'n'")
        inst = Instance(n=doc["n"], cost=np.asarray(doc["cost"], dtype=float),
                        depot=depot, name=name)

    report = validate_metric(inst)
    if not report.ok:
        raise MetricViolationError(report)
    return inst


def instance_to_dict(inst: Instance) -> dict:
    """Canonical cost-form document for ``inst``."""
    return {
        "name": inst.name,
        "n": inst.n,
        "depot": inst.depot,
        "cost": [[float(x) for x in row] for row in inst.cost],
    }


def points_document(inst: Instance) -> dict:
    """Points-form document; only available when coordinates are known."""
    if inst.points is None:
        raise InstanceError("instance has no coordinates")
    return {
        "name": inst.name,
        "n": inst.n,
        "depot": inst.depot,
        "points": [[float(x), float(y)] for x, y in inst.points],
    }


def save_instance(inst: Instance, sink: Any) -> None:
    """Write the canonical cost-form document.

    The output is deterministic (sorted keys, fixed layout), so save,
    load, save round-trips to identical bytes.
    """
    text = json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n"
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    elif hasattr(sink, "write"):
        sink.write(text)
    else:
        raise InstanceError(f"cannot save an instance to {type(sink).__name__}")


def _euclidean_costs(points: np.ndarray) -> np.ndarray:
    delta = points[:, None, :] - points[None, :, :]
    return np.hypot(delta[..., 0], delta[..., 1])


def random_euclidean_instance(
    n: int,
    seed: int,
    box: float = 100.0,
    depot: int = 1,
    name: str | None = None,
) -> Instance:
    """Seeded random Euclidean instance.

    Coordinates are ``default_rng(seed).uniform(0, box, (n, 2))`` and the
    matrix holds pairwise Euclidean distances, so output is a pure
    function of the arguments and the metric holds exactly.
    """
    if n < 2:
        raise InstanceError(f"need at least 2 targets, got n={n}")
    if box <= 0:
        raise InstanceError("box size must be positive")
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, box, size=(n, 2))
    if name is None:
        name = f"euclidean-n{n}-seed{seed}"
    return Instance(n=n, cost=_euclidean_costs(points), depot=depot,
                    name=name, points=points)


def benchmark_instance() -> Instance:
    """Bundled four-target benchmark with the depot at target 2.

    Travel times are symmetric and given to two decimals; they satisfy
    the triangle inequality as written.
    """
    cost = [
        [0.0, 13.89, 10.0, 10.82],
        [13.89, 0.0, 7.28, 13.34],
        [10.0, 7.28, 0.0, 6.08],
        [10.82, 13.34, 6.08, 0.0],
    ]
    return Instance(n=4, cost=np.array(cost), depot=2, name="bench4")
