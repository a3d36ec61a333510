"""Exact solvers for minimum revisit-time closed walks.

Three routes to an optimum:

* :func:`solve_tsp` - subset dynamic programming over the shortest
  covering tour; the k = n case, and the floor for every other k.
* :func:`brute_force_optimal` - exhaustive enumeration in lexicographic
  order; the reference oracle for small instances.
* :func:`branch_and_bound` - depth-first search with gap-based pruning;
  fast enough for the base-table solves the constructor needs.

Both search solvers resolve ties identically: a candidate replaces the
incumbent only when it is better by more than ``ABS_TOL``, or when it is
tied within ``ABS_TOL`` and lexicographically smaller.  Distinct walk
values are assumed to differ by more than the tolerance band unless they
are mathematically equal, which holds for the instances this package
targets; under that assumption the two solvers return the same walk.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from threading import Lock

from .instance import Instance
from .walks import ABS_TOL, Walk, walk_revisit_time

__all__ = [
    "CapacityError",
    "SolveResult",
    "SolverOptions",
    "branch_and_bound",
    "brute_force_optimal",
    "lower_bound",
    "solve_tsp",
]


class CapacityError(ValueError):
    """Instance is beyond the configured enumeration capacity."""


@dataclass(frozen=True)
class SolverOptions:
    """Knobs shared by the exact solvers.

    ``time_budget`` is wall-clock seconds; when it runs out the search
    returns its best incumbent flagged as not certified.  ``incumbent``
    warm-starts the search with a known feasible walk of the right
    length.  ``parallel_width`` workers explore disjoint root subtrees
    and share a monotone incumbent value used only for pruning, so the
    result is identical at any width.
    """

    time_budget: float = math.inf
    parallel_width: int = 1
    incumbent: Walk | None = None

    def __post_init__(self) -> None:
        if not self.time_budget > 0:
            raise ValueError("time budget must be positive")
        if self.parallel_width < 1:
            raise ValueError("parallel width must be at least 1")


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one exact solve.

    ``certified`` marks a proven optimum: the search either exhausted
    the space or matched the lower bound.  ``value`` always equals
    ``walk_revisit_time(walk).time``.
    """

    walk: Walk
    value: float
    lower_bound_used: float
    nodes_explored: int
    elapsed: float
    certified: bool

    def to_dict(self) -> dict:
        return {
            "k": self.walk.k,
            "value": self.value,
            "walk": list(self.walk.seq),
            "certified": self.certified,
            "nodes": self.nodes_explored,
            "seconds": self.elapsed,
        }


def _improves(cand_value: float, cand_seq: tuple[int, ...],
              best_value: float | None, best_seq: tuple[int, ...] | None) -> bool:
    # Shared tie-break rule; see the module docstring.
    if best_value is None:
        return True
    if cand_value < best_value - ABS_TOL:
        return True
    return cand_value <= best_value + ABS_TOL and cand_seq < best_seq


def _check_feasible(n: int, k: int) -> None:
    if k < n:
        raise ValueError(f"k={k} is below n={n}")
    if n == 2 and k % 2:
        # Two targets force strict alternation, so visit counts are even.
        raise ValueError(f"no closed walk with k={k} visits exists over 2 targets")


def solve_tsp(inst: Instance, max_n: int = 20) -> SolveResult:
    """Shortest covering tour through all targets, anchored at the depot.

    Subset dynamic programming; exact, deterministic, and limited to
    ``max_n`` targets (state space grows as ``n * 2^n``).
    """
    if inst.n > max_n:
        raise CapacityError(
            f"n={inst.n} exceeds the subset-DP capacity of {max_n}"
        )
    started = time.monotonic()
    cost = inst.cost_rows()
    d = inst.depot
    others = [t for t in inst.targets() if t != d]
    m = len(others)
    full = (1 << m) - 1

    # best[mask][j]: cheapest way to leave the depot, visit exactly the
    # targets in mask, and stand at others[j].
    best = [[math.inf] * m for _ in range(full + 1)]
    parent = [[-1] * m for _ in range(full + 1)]
    for j, t in enumerate(others):
        best[1 << j][j] = cost[d - 1][t - 1]
    nodes = 0
    for mask in range(1, full + 1):
        row = best[mask]
        for j in range(m):
            here = row[j]
            if math.isinf(here) or not mask & (1 << j):
                continue
            nodes += 1
            cj = cost[others[j] - 1]
            for nxt in range(m):
                if mask & (1 << nxt):
                    continue
                cand = here + cj[others[nxt] - 1]
                nxt_mask = mask | (1 << nxt)
                if cand < best[nxt_mask][nxt]:
                    best[nxt_mask][nxt] = cand
                    parent[nxt_mask][nxt] = j

    closing = -1
    closing_value = math.inf
    for j in range(m):
        cand = best[full][j] + cost[others[j] - 1][d - 1]
        if cand < closing_value:
            closing_value = cand
            closing = j
    order = []
    mask, j = full, closing
    while j != -1:
        order.append(others[j])
        prev = parent[mask][j]
        mask &= ~(1 << j)
        j = prev
    order.reverse()
    walk = Walk(inst, (d, *order, d))
    value = walk_revisit_time(walk).time
    return SolveResult(
        walk=walk,
        value=value,
        lower_bound_used=value,
        nodes_explored=nodes,
        elapsed=time.monotonic() - started,
        certified=True,
    )


def lower_bound(
    inst: Instance,
    k: int,
    tsp_star: float,
    base_values: dict[int, float] | None = None,
) -> float:
    """Largest known floor under the optimal value for ``k`` visits.

    With ``k = p*n + q``: the tour value for q = 0, otherwise the base
    value for ``n + ceil(q/p)`` visits when the table has it, never less
    than the tour value.
    """
    n = inst.n
    if k < n:
        raise ValueError(f"k={k} is below n={n}")
    p, q = divmod(k, n)
    if q == 0:
        return tsp_star
    m = n + -(-q // p)
    if base_values and m in base_values:
        return max(tsp_star, base_values[m])
    return tsp_star


def brute_force_optimal(inst: Instance, k: int, cap: int = 10**8) -> SolveResult:
    """Enumerate every feasible walk of ``k`` visits, lexicographically.

    The reference oracle: guaranteed optimal, deterministic tie-break
    (lexicographically smallest sequence), refuses instances whose
    search space ``(n-1)^(k-1)`` exceeds ``cap``.
    """
    n = inst.n
    _check_feasible(n, k)
    if (n - 1) ** (k - 1) > cap:
        raise CapacityError(
            f"(n-1)^(k-1) = {(n - 1) ** (k - 1)} exceeds the cap of {cap}"
        )
    started = time.monotonic()
    d = inst.depot
    targets = list(inst.targets())
    tsp_star = solve_tsp(inst).value

    best_value: float | None = None
    best_seq: tuple[int, ...] | None = None
    nodes = 0
    prefix = [d] + [0] * k
    seen = [0] * (n + 1)
    seen[d] = 1

    def extend(i: int, missing: int) -> None:
        nonlocal best_value, best_seq, nodes
        nodes += 1
        prev = prefix[i - 1]
        if i == k:
            if prev == d or missing:
                return
            prefix[i] = d
            cand = Walk(inst, tuple(prefix))
            value = walk_revisit_time(cand).time
            if _improves(value, cand.seq, best_value, best_seq):
                best_value, best_seq = value, cand.seq
            return
        free_after = k - 1 - i  # entries i+1..k-1; entry k is the depot
        for t in targets:
            if t == prev:
                continue
            if i == k - 1 and t == d:
                continue
            now_missing = missing - (1 if not seen[t] else 0)
            if now_missing > free_after:
                continue
            prefix[i] = t
            seen[t] += 1
            extend(i + 1, now_missing)
            seen[t] -= 1

    extend(1, n - 1)
    walk = Walk(inst, best_seq)
    return SolveResult(
        walk=walk,
        value=best_value,
        lower_bound_used=tsp_star,
        nodes_explored=nodes,
        elapsed=time.monotonic() - started,
        certified=True,
    )


def _padded_heuristic_walk(inst: Instance, k: int, tour: Walk) -> Walk:
    """Any feasible k-visit walk: the tour repeated, plus a short
    back-and-forth spliced in when n does not divide k."""
    p, q = divmod(k, inst.n)
    body = tour.seq[:-1]
    seq = body * p + (tour.seq[0],)
    if q:
        d, after = tour.seq[0], tour.seq[1]
        bounce = min(t for t in inst.targets() if t not in (d, after))
        pad = tuple(bounce if i % 2 == 0 else d for i in range(q))
        seq = seq[:1] + pad + seq[1:]
    return Walk(inst, seq)


class _Budget(Exception):
    pass


class _SharedIncumbent:
    """Monotone best value shared across workers; used only to prune."""

    def __init__(self, value: float) -> None:
        self.value = value
        self._lock = Lock()

    def offer(self, value: float) -> None:
        with self._lock:
            if value < self.value:
                self.value = value


class _Worker:
    """One depth-first lane of the branch-and-bound search."""

    def __init__(self, inst: Instance, k: int, deadline: float,
                 shared: _SharedIncumbent) -> None:
        self.inst = inst
        self.k = k
        self.deadline = deadline
        self.shared = shared
        self.cost = inst.cost_rows()
        self.best_value: float | None = None
        self.best_seq: tuple[int, ...] | None = None
        self.nodes = 0
        self.truncated = False

    def offer(self, seq: tuple[int, ...]) -> None:
        value = walk_revisit_time(Walk(self.inst, seq)).time
        if _improves(value, seq, self.best_value, self.best_seq):
            self.best_value, self.best_seq = value, seq
            self.shared.offer(value)

    def run(self, first_moves: list[int]) -> None:
        n, d, k = self.inst.n, self.inst.depot, self.k
        prefix = [d] + [0] * k
        last_at = [0.0] * (n + 1)   # cumulative time of the latest visit
        first_at = [0.0] * (n + 1)  # cumulative time of the first visit
        count = [0] * (n + 1)
        count[d] = 1
        try:
            for t in first_moves:
                prefix[1] = t
                count[t] += 1
                edge = self.cost[d - 1][t - 1]
                last_at[t] = first_at[t] = edge
                self._fill(prefix, 2, edge, n - 2, 0.0,
                           last_at, first_at, count)
                count[t] -= 1
                last_at[t] = first_at[t] = 0.0
        except _Budget:
            self.truncated = True

    def _fill(self, prefix, i, cum, missing, max_closed,
              last_at, first_at, count) -> None:
        """Choose the entry at index i; entries 0..i-1 are placed and
        cum is the travel time through them."""
        self.nodes += 1
        if self.nodes % 2048 == 0 and time.monotonic() > self.deadline:
            raise _Budget
        k, cost = self.k, self.cost
        n, d = self.inst.n, self.inst.depot
        prev = prefix[i - 1]
        row = cost[prev - 1]
        allowance = self.shared.value + ABS_TOL

        if i == k:
            # Closing entry: must be the depot, everything covered.
            if prev == d or missing:
                return
            total = cum + row[d - 1]
            if max(max_closed, total - last_at[d]) > allowance:
                return
            prefix[k] = d
            self.offer(tuple(prefix))
            return

        free_after = k - 1 - i
        moves = []
        for t in range(1, n + 1):
            if t == prev:
                continue
            if i == k - 1 and t == d:
                continue
            fresh = count[t] == 0
            if missing - (1 if fresh else 0) > free_after:
                continue
            moves.append((not fresh, row[t - 1], t))
        moves.sort()

        for _, edge, t in moves:
            new_cum = cum + edge
            fresh = count[t] == 0
            closed = 0.0 if fresh else new_cum - last_at[t]
            new_max = max_closed if closed <= max_closed else closed
            if new_max > allowance:
                continue
            # Every open gap still has to close, either at another visit
            # to its target or around the wrap through the depot; both
            # completions are floored by the triangle inequality.
            row_t = cost[t - 1]
            home = row_t[d - 1]
            viable = True
            for u in range(1, n + 1):
                if not count[u] or u == t:
                    continue
                open_gap = new_cum - last_at[u]
                if open_gap + min(row_t[u - 1], home + first_at[u]) > allowance:
                    viable = False
                    break
            if not viable:
                continue
            prefix[i] = t
            prev_last = last_at[t]
            count[t] += 1
            last_at[t] = new_cum
            if fresh:
                first_at[t] = new_cum
            self._fill(prefix, i + 1, new_cum, missing - (1 if fresh else 0),
                       new_max, last_at, first_at, count)
            count[t] -= 1
            last_at[t] = prev_last
            if fresh:
                first_at[t] = 0.0


def branch_and_bound(
    inst: Instance,
    k: int,
    opts: SolverOptions | None = None,
) -> SolveResult:
    """Depth-first exact search for the best ``k``-visit walk.

    Prunes a partial walk when a closed gap already exceeds the
    incumbent, when an open gap plus its cheapest possible completion
    does, or when the remaining visits cannot cover the missing targets.
    Matches :func:`brute_force_optimal` in value and tie-broken walk.
    The tour value (and the quotient-remainder floor it implies) is kept
    as a certificate: a search cut short by the time budget still counts
    as certified when its value meets that floor, otherwise it is
    returned flagged as not certified.
    """
    if opts is None:
        opts = SolverOptions()
    n = inst.n
    _check_feasible(n, k)
    started = time.monotonic()
    deadline = started + opts.time_budget
    tour = solve_tsp(inst)
    bound = lower_bound(inst, k, tour.value)

    warm = opts.incumbent
    if warm is not None:
        if warm.inst is not inst or warm.k != k:
            raise ValueError("warm-start walk does not match the problem")
    else:
        warm = _padded_heuristic_walk(inst, k, tour.walk)

    d = inst.depot
    cost = inst.cost_rows()
    first_moves = sorted(
        (t for t in inst.targets() if t != d),
        key=lambda t: (cost[d - 1][t - 1], t),
    )
    width = min(opts.parallel_width, len(first_moves))
    shared = _SharedIncumbent(walk_revisit_time(warm).time)
    workers = [_Worker(inst, k, deadline, shared) for _ in range(width)]
    workers[0].offer(warm.seq)
    lanes: list[list[int]] = [[] for _ in range(width)]
    for idx, move in enumerate(first_moves):
        lanes[idx % width].append(move)

    if width == 1:
        workers[0].run(first_moves)
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            jobs = [
                pool.submit(worker.run, lane)
                for worker, lane in zip(workers, lanes)
            ]
            for job in jobs:
                job.result()

    best_value: float | None = None
    best_seq: tuple[int, ...] | None = None
    for worker in workers:
        if worker.best_value is not None and _improves(
            worker.best_value, worker.best_seq, best_value, best_seq
        ):
            best_value, best_seq = worker.best_value, worker.best_seq

    truncated = any(worker.truncated for worker in workers)
    walk = Walk(inst, best_seq)
    certified = not truncated or abs(best_value - bound) <= ABS_TOL
    return SolveResult(
        walk=walk,
        value=best_value,
        lower_bound_used=bound,
        nodes_explored=sum(worker.nodes for worker in workers) + tour.nodes_explored,
        elapsed=time.monotonic() - started,
        certified=certified,
    )
