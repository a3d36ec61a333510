"""Command-line harness over the solvers, constructor, and model export.

Subcommands: solve, sweep, verify-theorems, export-milp, gen-instance,
oracle.  Exit codes are a stable contract: 0 success, 1 usage or input
error, 2 property or validation failure, 3 time budget truncation.
Set WALKPLAN_THREADS to cap (and enable) worker threads; results are
identical at any width.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .construct import (
    BaseSolutions,
    UncertifiedBaseError,
    build_base,
    construct_optimal,
    extend_by_n,
    shortcut_one_revisit,
)
from .instance import (
    Instance,
    InstanceError,
    MetricViolationError,
    load_instance,
    random_euclidean_instance,
    save_instance,
    validate_metric,
)
from .milp import build_model, export_lp
from .solver import (
    CapacityError,
    SolveResult,
    SolverOptions,
    branch_and_bound,
    brute_force_optimal,
    lower_bound,
    solve_tsp,
)
from .walks import (
    ABS_TOL,
    cyclic_permutation,
    concatenate,
    find_binding_subwalks,
    target_revisit_time,
    walk_revisit_time,
)

__all__ = ["main", "entrypoint", "UsageError"]


class UsageError(Exception):
    """Bad arguments or environment; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _round2(value: float) -> str:
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _thread_cap() -> int:
    raw = os.environ.get("WALKPLAN_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        raise UsageError(f"WALKPLAN_THREADS must be a positive integer, got {raw!r}")
    return cap


def _load(args: argparse.Namespace) -> Instance:
    inst = load_instance(args.instance)
    if getattr(args, "depot", None) is not None and args.depot != inst.depot:
        inst = replace(inst, depot=args.depot)
    return inst


def _budget(args: argparse.Namespace) -> float:
    raw = getattr(args, "budget_seconds", None)
    if raw is None:
        return math.inf
    if raw <= 0:
        raise UsageError("--budget-seconds must be positive")
    return raw


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _result_doc(result: SolveResult) -> str:
    return json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load(args)
    cap = _thread_cap()
    budget = _budget(args)
    started = time.perf_counter()
    if args.method == "tsp":
        if args.k != inst.n:
            raise UsageError(f"--method tsp solves exactly k=n={inst.n}, got k={args.k}")
        result = solve_tsp(inst)
    elif args.method == "brute":
        result = brute_force_optimal(inst, args.k)
    elif args.method == "bnb":
        opts = SolverOptions(time_budget=budget, parallel_width=cap)
        result = branch_and_bound(inst, args.k, opts)
    else:
        base = build_base(inst, SolverOptions(time_budget=budget, parallel_width=cap))
        walk, value = construct_optimal(base, args.k)
        result = SolveResult(
            walk=walk,
            value=value,
            lower_bound_used=lower_bound(inst, args.k, base.value(inst.n), base.values()),
            nodes_explored=sum(r.nodes_explored for r in base.table.values()),
            elapsed=time.perf_counter() - started,
            certified=True,
        )
    _emit(_result_doc(result), args.out)
    return 0 if result.certified else 3


def cmd_oracle(args: argparse.Namespace) -> int:
    inst = _load(args)
    result = brute_force_optimal(inst, args.k)
    _emit(_result_doc(result), args.out)
    return 0


@dataclass(frozen=True)
class _SweepRow:
    k: int
    value: float
    method: str
    certified: bool


def _feasible_ks(n: int, lo: int, hi: int) -> list[int]:
    ks = []
    for k in range(lo, hi + 1):
        if n == 2 and k % 2:
            continue
        ks.append(k)
    return ks


def cmd_sweep(args: argparse.Namespace) -> int:
    inst = _load(args)
    n = inst.n
    if args.k_max < n:
        raise UsageError(f"--k-max must be at least n={n}")
    cap = _thread_cap()
    budget = _budget(args)
    opts = SolverOptions(time_budget=budget)

    skipped = [k for k in range(n, args.k_max + 1) if n == 2 and k % 2]
    for k in skipped:
        print(f"k={k}: no closed walk exists over 2 targets, skipping", file=sys.stderr)

    window_ks = _feasible_ks(n, n, min(2 * n - 1, args.k_max))
    results: dict[int, SolveResult] = {}

    def solve_window(k: int) -> SolveResult:
        if k == n:
            return solve_tsp(inst)
        return branch_and_bound(inst, k, opts)

    if cap > 1 and len(window_ks) > 1:
        with ThreadPoolExecutor(max_workers=min(cap, len(window_ks))) as pool:
            for k, res in zip(window_ks, pool.map(solve_window, window_ks)):
                results[k] = res
    else:
        for k in window_ks:
            results[k] = solve_window(k)

    rows = [
        _SweepRow(k, results[k].value, "tsp" if k == n else "bnb", results[k].certified)
        for k in window_ks
    ]

    base: BaseSolutions | None = None
    base_ks = _feasible_ks(n, n, 2 * n - 1)
    if all(k in results and results[k].certified for k in base_ks):
        base = BaseSolutions(inst=inst, table={k: results[k] for k in base_ks})

    tail_ks = _feasible_ks(n, 2 * n, args.k_max)
    if tail_ks and base is None:
        print("base solves not certified in budget; tail rows fall back to search", file=sys.stderr)

    def solve_tail(k: int) -> _SweepRow:
        if base is not None and not args.exact:
            _, value = construct_optimal(base, k)
            return _SweepRow(k, value, "constructed", True)
        warm = None
        if base is not None:
            warm, _ = construct_optimal(base, k)
        res = branch_and_bound(inst, k, replace(opts, incumbent=warm))
        return _SweepRow(k, res.value, "bnb", res.certified)

    if cap > 1 and len(tail_ks) > 1:
        with ThreadPoolExecutor(max_workers=min(cap, len(tail_ks))) as pool:
            rows.extend(pool.map(solve_tail, tail_ks))
    else:
        rows.extend(solve_tail(k) for k in tail_ks)

    rows.sort(key=lambda r: r.k)
    lines = ["k,value,method,certified,value_raw"]
    for row in rows:
        lines.append(
            f"{row.k},{_round2(row.value)},{row.method},"
            f"{'true' if row.certified else 'false'},{row.value!r}"
        )
    _emit("\n".join(lines) + "\n", args.out)

    threshold = n * n - n
    if base is not None and n > 2:
        print(
            f"bi-modal regime: for k >= {threshold}, value is {_round2(base.value(n))} "
            f"when k % {n} == 0 and {_round2(base.value(n + 1))} otherwise",
            file=sys.stderr,
        )
    else:
        print(f"bi-modal regime starts at k >= {threshold}", file=sys.stderr)
    return 0 if all(r.certified for r in rows) else 3


def cmd_export_milp(args: argparse.Namespace) -> int:
    inst = _load(args)
    if args.k < inst.n:
        raise UsageError(f"--k must be at least n={inst.n}")
    model = build_model(inst, args.k)
    export_lp(model, args.out)
    print(
        f"binaries={model.num_binaries} continuous={model.num_continuous} "
        f"rows={len(model.rows)} -> {args.out}"
    )
    return 0


def cmd_gen_instance(args: argparse.Namespace) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    inst = random_euclidean_instance(args.n, args.seed, depot=args.depot or 1)
    if args.out:
        save_instance(inst, args.out)
    else:
        save_instance(inst, sys.stdout)
    return 0


@dataclass(frozen=True)
class _Check:
    name: str
    ok: bool
    margin: float


def _theorem_checks(inst: Instance, k_max: int, opts: SolverOptions) -> list[_Check]:
    n = inst.n
    checks: list[_Check] = []

    report = validate_metric(inst)
    slack = 0.0 if report.ok else report.worst[3]
    checks.append(_Check("metric-triangle", report.ok, slack))

    base = build_base(inst, opts)
    tsp_star = base.value(n)

    ks = _feasible_ks(n, n, k_max)
    constructed = {k: construct_optimal(base, k) for k in ks}
    values = {k: v for k, (_, v) in constructed.items()}

    exact_hi = min(k_max, 2 * n + 3, 14)
    exact: dict[int, float] = {k: base.value(k) for k in ks if k < 2 * n}
    for k in _feasible_ks(n, 2 * n, exact_hi):
        res = branch_and_bound(inst, k, replace(opts, incumbent=constructed[k][0]))
        if not res.certified:
            raise UncertifiedBaseError(f"exact cross-check for k={k} hit the time budget")
        exact[k] = res.value

    checks.append(
        _Check("tour-floor", all(v >= tsp_star - ABS_TOL for v in exact.values()),
               min(v - tsp_star for v in exact.values()))
    )

    floors = {k: lower_bound(inst, k, tsp_star, base.values()) for k in exact}
    checks.append(
        _Check("quotient-floor", all(exact[k] >= floors[k] - ABS_TOL for k in exact),
               min(exact[k] - floors[k] for k in exact))
    )

    multiples = [k for k in ks if k % n == 0]
    gap = max(abs(values[k] - tsp_star) for k in multiples)
    checks.append(_Check("multiple-of-n-equals-tour", gap <= ABS_TOL, gap))

    base_vals = [base.value(m) for m in sorted(base.table)]
    steps = [b - a for a, b in zip(base_vals, base_vals[1:])] or [0.0]
    checks.append(_Check("base-window-monotone", min(steps) >= -ABS_TOL, min(steps)))

    worst = max(
        (values[k + n] - values[k] for k in ks if k + n in values), default=0.0
    )
    checks.append(_Check("extension-never-worse", worst <= ABS_TOL, worst))

    gap = 0.0
    ok = True
    for m in sorted(base.table):
        w = base.walk(m)
        ext = extend_by_n(w)
        ok = ok and ext.k == w.k + n
        gap = max(gap, abs(walk_revisit_time(ext).time - walk_revisit_time(w).time))
    checks.append(_Check("insert-loop-preserves", ok and gap <= ABS_TOL, gap))

    gap = 0.0
    for m in sorted(base.table):
        w = base.walk(m)
        r = walk_revisit_time(w).time
        for pos in range(w.k):
            gap = max(gap, abs(walk_revisit_time(cyclic_permutation(w, pos)).time - r))
    checks.append(_Check("rotation-invariant", gap <= ABS_TOL, gap))

    gap = 0.0
    for m in sorted(base.table):
        w = base.walk(m)
        doubled = concatenate(w, w)
        for t in inst.targets():
            gap = max(gap, abs(target_revisit_time(doubled, t) - target_revisit_time(w, t)))
    checks.append(_Check("self-concat-per-target", gap <= ABS_TOL, gap))

    ok = all(
        b.subwalk.spans_all_targets()
        for m in sorted(base.table)
        for b in find_binding_subwalks(base.walk(m))
    )
    checks.append(_Check("binding-spans-targets", ok, 0.0))

    ok = True
    for m in sorted(base.table):
        if m == n:
            continue
        short = shortcut_one_revisit(base.walk(m))
        ok = ok and short.k == m - 1 and short.start == base.walk(m).start
    checks.append(_Check("shortcut-drops-one-visit", ok, 0.0))

    window = [k for k in ks if k >= n * n - n]
    gap = max(
        (abs(values[k] - (tsp_star if k % n == 0 else base.value(n + 1)))
         for k in window if n > 2),
        default=0.0,
    )
    checks.append(_Check("bi-modal-window", gap <= ABS_TOL, gap))

    cross = [k for k in exact if k >= 2 * n]
    gap = max((abs(exact[k] - values[k]) for k in cross), default=0.0)
    checks.append(_Check("construct-matches-exact", gap <= ABS_TOL, gap))

    return checks


def cmd_verify_theorems(args: argparse.Namespace) -> int:
    cap = _thread_cap()
    opts = SolverOptions(time_budget=_budget(args), parallel_width=cap)
    instances: list[Instance] = []
    if args.instances:
        for path in args.instances:
            instances.append(load_instance(path))
    else:
        if args.n < 2:
            raise UsageError("--n must be at least 2")
        for s in range(args.seed, args.seed + args.count):
            instances.append(random_euclidean_instance(args.n, s))

    all_ok = True
    for inst in instances:
        k_max = args.k_max if args.k_max is not None else inst.n * (inst.n + 1)
        if k_max < inst.n:
            raise UsageError(f"--k-max must be at least n={inst.n}")
        print(f"== {inst.name or 'instance'}: n={inst.n} depot={inst.depot} k<={k_max} ==")
        for check in _theorem_checks(inst, k_max, opts):
            verdict = "PASS" if check.ok else "FAIL"
            print(f" {verdict} {check.name:<26} margin={check.margin:.3e}")
            all_ok = all_ok and check.ok
    print("all properties passed" if all_ok else "property failures detected")
    return 0 if all_ok else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="walkplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--depot", type=int, default=None, help="override the depot target id")
        p.add_argument("--out", default=None, help="write output to this path instead of stdout")

    p = sub.add_parser("solve", help="solve one visit count exactly or by construction")
    p.add_argument("instance")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=["tsp", "brute", "bnb", "construct"], default="bnb")
    p.add_argument("--budget-seconds", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive reference solve for tiny cases")
    p.add_argument("instance")
    p.add_argument("--k", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="value per visit count from n to --k-max, as CSV")
    p.add_argument("instance")
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="search every k instead of constructing")
    p.add_argument("--budget-seconds", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-theorems", help="run the structural property suite")
    p.add_argument("instances", nargs="*")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--budget-seconds", type=float, default=None)
    p.set_defaults(func=cmd_verify_theorems)

    p = sub.add_parser("export-milp", help="write the model as LP text")
    p.add_argument("instance")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--depot", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("gen-instance", help="random Euclidean instance as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_gen_instance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MetricViolationError as exc:
        print(f"instance validation failed: {exc}", file=sys.stderr)
        return 2 if args.command == "verify-theorems" else 1
    except InstanceError as exc:
        print(f"bad instance: {exc}", file=sys.stderr)
        return 1
    except UncertifiedBaseError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except (ValueError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
