"""Closed walks and the pure algebra of revisit times.

Vocabulary used throughout the package:

* A *walk* is a closed visit sequence ``(v1, ..., vk, v1)`` over the
  targets of an instance: consecutive entries differ, every target
  appears, and there are exactly ``k`` visits.  The starting entry is
  position 0 of ``seq`` and is not itself a visit; the closing entry is
  the last visit.
* A *subwalk* is a contiguous fragment with at least one edge.  A
  subwalk is *closed* when its endpoints coincide, and that endpoint is
  its *terminus* when it does not reappear in the interior.
* The *revisit time* of a target is the longest stretch between its
  consecutive visits when the walk repeats forever; the revisit time of
  the walk is the maximum over targets.
* A *binding subwalk* is a closed subwalk of the repeated walk whose
  endpoint is a terminus and whose duration equals the walk revisit
  time.

All operations are pure: they return new objects and never mutate their
arguments.  Internal float comparisons use an absolute tolerance of
``ABS_TOL`` (1e-9).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .instance import Instance

__all__ = [
    "ABS_TOL",
    "BindingSubwalk",
    "Decomposition",
    "RevisitTime",
    "ShortcutError",
    "Subwalk",
    "Walk",
    "WalkError",
    "concatenate",
    "cyclic_permutation",
    "decompose",
    "duration",
    "find_binding_subwalks",
    "gap_subwalks",
    "rotate_to_first_visit",
    "shortcut",
    "target_revisit_time",
    "visit_positions",
    "walk_from_dict",
    "walk_revisit_time",
    "walk_to_dict",
]

ABS_TOL = 1e-9


class WalkError(ValueError):
    """Sequence does not satisfy the invariants the operation requires."""


class ShortcutError(WalkError):
    """Requested drop set would leave an illegal sequence."""


def _check_ids(inst: Instance, seq: tuple[int, ...]) -> None:
    for t in seq:
        if not (isinstance(t, int) and 1 <= t <= inst.n):
            raise WalkError(f"target id {t!r} outside 1..{inst.n}")


def _check_consecutive(seq: tuple[int, ...]) -> None:
    for a, b in zip(seq, seq[1:]):
        if a == b:
            raise WalkError(f"consecutive visits to target {a} are not allowed")


@dataclass(frozen=True)
class Subwalk:
    """Contiguous fragment of a walk: at least one edge, no self-loops."""

    inst: Instance
    seq: tuple[int, ...]

    def __post_init__(self) -> None:
        seq = tuple(self.seq)
        object.__setattr__(self, "seq", seq)
        if len(seq) < 2:
            raise WalkError("a subwalk needs at least two entries")
        _check_ids(self.inst, seq)
        _check_consecutive(seq)

    @property
    def is_closed(self) -> bool:
        return self.seq[0] == self.seq[-1]

    @property
    def terminus(self) -> int | None:
        """Endpoint of a closed subwalk, if it never recurs inside."""
        if not self.is_closed:
            return None
        end = self.seq[0]
        return None if end in self.seq[1:-1] else end

    def spans_all_targets(self) -> bool:
        return len(set(self.seq)) == self.inst.n


@dataclass(frozen=True)
class Walk:
    """Closed walk visiting every target, with at least ``n`` visits."""

    inst: Instance
    seq: tuple[int, ...]

    def __post_init__(self) -> None:
        seq = tuple(self.seq)
        object.__setattr__(self, "seq", seq)
        if len(seq) < 2:
            raise WalkError("a walk needs at least one visit")
        _check_ids(self.inst, seq)
        if seq[0] != seq[-1]:
            raise WalkError(
                f"walk must close on its start: {seq[0]} != {seq[-1]}"
            )
        _check_consecutive(seq)
        missing = set(self.inst.targets()) - set(seq)
        if missing:
            raise WalkError(f"walk never visits targets {sorted(missing)}")
        if self.k < self.inst.n:
            raise WalkError(
                f"{self.k} visits cannot be a closed walk over "
                f"{self.inst.n} targets"
            )

    @property
    def k(self) -> int:
        """Number of visits (the starting entry does not count)."""
        return len(self.seq) - 1

    @property
    def start(self) -> int:
        return self.seq[0]

    def as_subwalk(self) -> Subwalk:
        return Subwalk(self.inst, self.seq)


class RevisitTime(NamedTuple):
    time: float
    witness: int


class BindingSubwalk(NamedTuple):
    subwalk: Subwalk
    terminus: int


@dataclass(frozen=True)
class Decomposition:
    """Split of a walk around one pivot target.

    ``prefix`` runs from the start to the pivot's first visit, each loop
    runs between consecutive pivot visits, and ``suffix`` runs from the
    pivot's last visit back to the start.  When the pivot is the start
    node itself there is no prefix or suffix and the loops partition the
    whole walk.  Reassembling the parts reproduces the original
    sequence exactly.
    """

    pivot: int
    prefix: Subwalk | None
    loops: tuple[Subwalk, ...]
    suffix: Subwalk | None

    def parts(self) -> tuple[Subwalk, ...]:
        head = (self.prefix,) if self.prefix is not None else ()
        tail = (self.suffix,) if self.suffix is not None else ()
        return head + self.loops + tail

    def reassemble(self) -> tuple[int, ...]:
        parts = self.parts()
        seq = parts[0].seq
        for part in parts[1:]:
            if seq[-1] != part.seq[0]:
                raise WalkError("decomposition parts do not join")
            seq = seq + part.seq[1:]
        return seq


def walk_to_dict(w: Walk) -> dict:
    """Document form of a walk: its instance's name and the sequence."""
    return {"instance": w.inst.name, "seq": list(w.seq)}


def walk_from_dict(doc: dict, inst: Instance) -> Walk:
    """Rebuild a walk from its document form against ``inst``."""
    if doc.get("instance") != inst.name:
        raise WalkError(
            f"walk was recorded for {doc.get('instance')!r}, not {inst.name!r}"
        )
    return Walk(inst, tuple(doc["seq"]))


def duration(fragment: Walk | Subwalk) -> float:
    """Total travel time along the fragment's edges."""
    cost = fragment.inst.cost
    total = 0.0
    for a, b in zip(fragment.seq, fragment.seq[1:]):
        total += cost[a - 1, b - 1]
    return float(total)


def visit_positions(w: Walk, t: int) -> list[int]:
    """Indices in ``w.seq`` (1..k) where target ``t`` is visited.

    Position 0 is the starting entry, not a visit; for the start node
    the closing entry at index k is its visit.
    """
    return [i for i in range(1, w.k + 1) if w.seq[i] == t]


def _cycle_positions(w: Walk, t: int) -> list[int]:
    # Occurrences among the k distinct cycle entries seq[0..k-1].
    return [i for i in range(w.k) if w.seq[i] == t]


def gap_subwalks(w: Walk, t: int) -> list[Subwalk]:
    """Closed subwalks of the repeated walk between consecutive visits
    to ``t``, in cyclic order starting from ``t``'s first appearance.

    Each gap has ``t`` as terminus.  A target appearing once yields a
    single gap: the full cycle rotated to start at it.
    """
    pos = _cycle_positions(w, t)
    if not pos:
        raise WalkError(f"target {t} does not appear in the walk")
    doubled = w.seq[:-1] * 2
    gaps = []
    for here, there in zip(pos, pos[1:] + [pos[0] + w.k]):
        gaps.append(Subwalk(w.inst, doubled[here : there + 1]))
    return gaps


def target_revisit_time(w: Walk, t: int) -> float:
    """Longest stretch between consecutive visits to ``t``."""
    return max(duration(g) for g in gap_subwalks(w, t))


def walk_revisit_time(w: Walk) -> RevisitTime:
    """Maximum revisit time over targets, with the smallest target id
    achieving it (ties resolved within ``ABS_TOL``)."""
    times = {t: target_revisit_time(w, t) for t in w.inst.targets()}
    worst = max(times.values())
    witness = min(t for t, rt in times.items() if rt >= worst - ABS_TOL)
    return RevisitTime(time=worst, witness=witness)


def cyclic_permutation(w: Walk, position: int) -> Walk:
    """Rotate the cycle to start at ``seq[position]``.

    ``position`` indexes the distinct cycle entries, 0..k-1; position 0
    returns an identical walk.  Revisit times are invariant under this
    operation.
    """
    if not 0 <= position < w.k:
        raise WalkError(f"rotation position {position} outside 0..{w.k - 1}")
    if position == 0:
        return Walk(w.inst, w.seq)
    body = w.seq[:-1]
    rotated = body[position:] + body[:position] + (body[position],)
    return Walk(w.inst, rotated)


def rotate_to_first_visit(w: Walk, t: int) -> Walk:
    """Rotate so the walk starts at the first appearance of ``t``."""
    pos = _cycle_positions(w, t)
    if not pos:
        raise WalkError(f"target {t} does not appear in the walk")
    return cyclic_permutation(w, pos[0])


def concatenate(a: Walk | Subwalk, b: Walk | Subwalk):
    """Join two fragments at a shared junction node, written once.

    Two walks must share their start node and yield a walk whose visit
    count is the sum of both.  Subwalks join end-to-start and yield a
    subwalk.
    """
    if a.inst is not b.inst:
        raise WalkError("fragments belong to different instances")
    if a.seq[-1] != b.seq[0]:
        raise WalkError(
            f"junction mismatch: {a.seq[-1]} does not meet {b.seq[0]}"
        )
    joined = a.seq + b.seq[1:]
    if isinstance(a, Walk) and isinstance(b, Walk):
        return Walk(a.inst, joined)
    return Subwalk(a.inst, joined)


def shortcut(w: Walk, drop: Iterable[int]) -> Walk:
    """Remove the given visit positions, keeping the walk legal.

    Positions index ``w.seq``; the anchoring entries at positions 0 and
    k stay put, so the result starts and closes where ``w`` does.  A
    position holding a target's only remaining visit is not droppable,
    keeping coverage intact, and under the triangle inequality the
    duration never increases.  A drop set that would leave two equal
    neighbors adjacent is rejected; drop one of them too instead.
    """
    positions = sorted(set(drop))
    if not positions:
        return Walk(w.inst, w.seq)
    remaining_count = Counter(w.seq[1:])
    for p in positions:
        if p == 0:
            raise ShortcutError("position 0 is the starting entry, not a visit")
        if p == w.k:
            raise ShortcutError(f"position {w.k} closes the walk, not a visit")
        if not 1 <= p < w.k:
            raise ShortcutError(f"position {p} outside 1..{w.k - 1}")
        remaining_count[w.seq[p]] -= 1
        if remaining_count[w.seq[p]] < 1:
            raise ShortcutError(
                f"position {p} holds the only remaining visit to "
                f"target {w.seq[p]}"
            )
    dropped = set(positions)
    remaining = tuple(x for i, x in enumerate(w.seq) if i not in dropped)
    for a, b in zip(remaining, remaining[1:]):
        if a == b:
            raise ShortcutError(
                f"dropping {positions} leaves consecutive visits to {a}; "
                "drop one of the neighbors as well"
            )
    return Walk(w.inst, remaining)


def decompose(w: Walk, pivot: int) -> Decomposition:
    """Split ``w`` at every appearance of ``pivot``.

    The pivot never appears inside any part, so each loop is a closed
    subwalk with the pivot as terminus.
    """
    pos = _cycle_positions(w, pivot)
    if not pos:
        raise WalkError(f"target {pivot} does not appear in the walk")
    cuts = pos + [w.k]
    pieces = [
        Subwalk(w.inst, w.seq[a : b + 1]) for a, b in zip(cuts, cuts[1:])
    ]
    if pos[0] == 0:
        return Decomposition(pivot=pivot, prefix=None,
                             loops=tuple(pieces), suffix=None)
    prefix = Subwalk(w.inst, w.seq[: pos[0] + 1])
    return Decomposition(
        pivot=pivot,
        prefix=prefix,
        loops=tuple(pieces[:-1]),
        suffix=pieces[-1],
    )


def find_binding_subwalks(w: Walk) -> list[BindingSubwalk]:
    """All gaps of the repeated walk whose duration attains the walk
    revisit time, ordered by terminus id, then by where the gap starts.

    For an optimal walk every returned fragment spans all targets;
    callers verify that with :meth:`Subwalk.spans_all_targets` rather
    than assume it for arbitrary walks.
    """
    worst = walk_revisit_time(w).time
    found = []
    for t in w.inst.targets():
        for gap in gap_subwalks(w, t):
            if duration(gap) >= worst - ABS_TOL:
                found.append(BindingSubwalk(subwalk=gap, terminus=t))
    return found
