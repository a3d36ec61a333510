"""Optimal walks of any length from a small table of solved base cases.

Solving the walk problem exactly for ``n`` through ``2n - 1`` visits is
enough: with ``k = p*n + q`` the optimal value for ``k`` visits equals
the base value for ``n + ceil(q/p)`` visits, and an optimal walk is a
concatenation of copies of two neighboring base walks.  Writing
``q = p*s + r`` with ``0 <= r <= p - 1``, the recipe is ``r`` copies of
the base walk with ``n + ceil(q/p)`` visits followed by ``p - r`` copies
of its one-visit shortcut (or of the same walk, when ``p`` divides
``q``).  Visit counts add up because concatenation writes the junction
once: ``r*(n + s + 1) + (p - r)*(n + s) = p*n + q = k``.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .instance import Instance
from .solver import SolveResult, SolverOptions, branch_and_bound, solve_tsp
from .walks import (
    ABS_TOL,
    Subwalk,
    Walk,
    WalkError,
    concatenate,
    cyclic_permutation,
    duration,
    gap_subwalks,
    rotate_to_first_visit,
    shortcut,
    walk_revisit_time,
    _cycle_positions,
)

__all__ = [
    "BaseSolutions",
    "UncertifiedBaseError",
    "build_base",
    "construct_optimal",
    "extend_by_n",
    "load_base",
    "save_base",
    "shortcut_one_revisit",
]


class UncertifiedBaseError(RuntimeError):
    """A base-table solve ran out of budget before proving optimality."""


@dataclass(frozen=True)
class BaseSolutions:
    """Certified optima for every visit count from ``n`` to ``2n - 1``.

    (Over two targets odd visit counts admit no walk, so only ``n``
    itself appears.)  Each entry is a proven-optimal solve result.
    """

    inst: Instance
    table: dict[int, SolveResult]

    def __post_init__(self) -> None:
        for m in _base_range(self.inst.n):
            if m not in self.table:
                raise ValueError(f"base table is missing k={m}")
            if not self.table[m].certified:
                raise UncertifiedBaseError(f"base entry k={m} is not certified")

    def walk(self, m: int) -> Walk:
        return self.table[m].walk

    def value(self, m: int) -> float:
        return self.table[m].value

    def values(self) -> dict[int, float]:
        return {m: r.value for m, r in self.table.items()}


def _base_range(n: int) -> list[int]:
    if n == 2:
        return [2]
    return list(range(n, 2 * n))


def build_base(inst: Instance, opts: SolverOptions | None = None) -> BaseSolutions:
    """Solve the base cases exactly: the tour for ``n`` visits, search
    for ``n + 1`` through ``2n - 1``.

    Raises :class:`UncertifiedBaseError` if any solve exhausts its time
    budget before proving optimality.
    """
    table: dict[int, SolveResult] = {inst.n: solve_tsp(inst)}
    for m in _base_range(inst.n)[1:]:
        result = branch_and_bound(inst, m, opts)
        if not result.certified:
            raise UncertifiedBaseError(
                f"solve for k={m} hit the time budget before certifying"
            )
        table[m] = result
    return BaseSolutions(inst=inst, table=table)


def shortcut_one_revisit(w: Walk) -> Walk:
    """Drop one revisit in place, keeping the walk's own frame.

    The dropped visit must not be the final visit to its target in the
    frame anchored at a once-visited target: that is the condition under
    which concatenating the walk with this shortcut of it preserves the
    revisit time.  The drop itself happens in the original sequence, so
    the result starts where ``w`` starts and stays block-aligned with it
    under concatenation.
    """
    counts = Counter(w.seq[1:])
    singles = sorted(t for t in w.inst.targets() if counts[t] == 1)
    if not singles:
        raise WalkError("walk has no target visited exactly once")
    if max(counts.values()) < 2:
        raise WalkError("walk has no repeated target to shortcut")
    anchor_at = _cycle_positions(w, singles[0])[0]
    rho = cyclic_permutation(w, anchor_at)
    last = {rho.seq[i]: i for i in range(1, rho.k + 1)}
    candidates = [
        i
        for i in range(1, rho.k)
        if counts[rho.seq[i]] >= 2
        and last[rho.seq[i]] != i
        and rho.seq[i - 1] != rho.seq[i + 1]
    ]
    for j in sorted(candidates, reverse=True):
        original = (anchor_at + j) % w.k
        if original:
            return shortcut(w, {original})
    raise WalkError("no revisit can be dropped without re-anchoring the walk")


def construct_optimal(base: BaseSolutions, k: int) -> tuple[Walk, float]:
    """Provably optimal ``k``-visit walk assembled from the base table.

    When two block sizes are mixed, both blocks are aligned to start at
    the smallest-id target visited exactly once in the larger block;
    that alignment is what makes the concatenation keep the larger
    block's revisit time.  The result is rotated back to the depot, and
    its recomputed revisit time is asserted to match the claimed value.
    """
    inst = base.inst
    n = inst.n
    if k < n:
        raise ValueError(f"k={k} is below n={n}")
    if n == 2 and k % 2:
        raise ValueError(f"no closed walk with k={k} visits exists over 2 targets")
    p, q = divmod(k, n)
    if q == 0:
        blocks = [base.walk(n)] * p
        value = base.value(n)
    else:
        a = n + -(-q // p)
        b = n + q // p
        w_star = base.walk(a)
        r = q % p
        assert r > 0 or a == b, "remainder zero forces equal block sizes"
        if a == b:
            blocks = [w_star] * p
        else:
            counts = Counter(w_star.seq[1:])
            pivot = min(t for t in inst.targets() if counts[t] == 1)
            rho = rotate_to_first_visit(w_star, pivot)
            blocks = [rho] * r + [shortcut_one_revisit(rho)] * (p - r)
        value = base.value(a)
    walk = blocks[0]
    for block in blocks[1:]:
        walk = concatenate(walk, block)
    if walk.start != inst.depot:
        walk = rotate_to_first_visit(walk, inst.depot)
    assert walk.k == k, f"assembled {walk.k} visits, wanted {k}"
    assert abs(walk_revisit_time(walk).time - value) <= ABS_TOL
    return walk, value


def _condensed_loop(inst: Instance, gap: Subwalk) -> tuple[int, ...]:
    """Shortcut a spanning closed subwalk down to one visit per target:
    keep each target's final appearance, in order, between the endpoints."""
    t = gap.seq[0]
    interior = gap.seq[1:-1]
    if set(interior) | {t} != set(inst.targets()):
        raise WalkError("binding subwalk does not span all targets")
    lasts: dict[int, int] = {}
    for i, u in enumerate(interior):
        lasts[u] = i
    ordered = sorted(lasts, key=lasts.get)
    return (t, *ordered, t)


def extend_by_n(w: Walk) -> Walk:
    """Add ``n`` visits without increasing the revisit time.

    The first binding subwalk (smallest terminus id, earliest start) is
    located, condensed to a one-visit-per-target loop, and that loop is
    spliced in right behind it.  The result has ``k + n`` visits and the
    same revisit time; iterating yields walks for every ``k + p*n``.
    """
    worst = walk_revisit_time(w).time
    chosen = None
    for t in w.inst.targets():
        positions = _cycle_positions(w, t)
        for start, gap in zip(positions, gap_subwalks(w, t)):
            if duration(gap) >= worst - ABS_TOL:
                chosen = (start, gap)
                break
        if chosen:
            break
    assert chosen is not None, "some gap always attains the walk revisit time"
    start, gap = chosen
    loop = _condensed_loop(w.inst, gap)
    rotated = cyclic_permutation(w, start)
    glen = len(gap.seq)
    assert rotated.seq[:glen] == gap.seq
    extended = Walk(w.inst, gap.seq + loop[1:] + rotated.seq[glen:])
    result = rotate_to_first_visit(extended, w.start)
    assert result.k == w.k + w.inst.n
    assert abs(walk_revisit_time(result).time - worst) <= ABS_TOL
    return result


def save_base(base: BaseSolutions, sink: Any) -> None:
    """Write the base table as a JSON document keyed by visit count."""
    doc = {
        "instance": base.inst.name,
        "solutions": [base.table[m].to_dict() for m in sorted(base.table)],
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)


def load_base(source: Any, inst: Instance) -> BaseSolutions:
    """Reload a saved base table against its instance.

    The stored records carry no bound, so each entry's own value stands
    in as the bound it certified against.
    """
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    elif hasattr(source, "read"):
        doc = json.loads(source.read())
    else:
        doc = source
    if doc.get("instance") != inst.name:
        raise ValueError(
            f"base table was built for {doc.get('instance')!r}, not {inst.name!r}"
        )
    table: dict[int, SolveResult] = {}
    for record in doc["solutions"]:
        walk = Walk(inst, tuple(record["walk"]))
        if not record["certified"]:
            raise UncertifiedBaseError(f"stored entry k={record['k']} not certified")
        table[record["k"]] = SolveResult(
            walk=walk,
            value=float(record["value"]),
            lower_bound_used=float(record["value"]),
            nodes_explored=int(record["nodes"]),
            elapsed=float(record["seconds"]),
            certified=True,
        )
    return BaseSolutions(inst=inst, table=table)
