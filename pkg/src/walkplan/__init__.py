"""Minimum revisit-time closed walks over a finite target set.

A vehicle patrols ``n`` targets along a closed walk with a fixed number
of visits ``k``; the objective is the largest time any target waits
between consecutive visits, taken over the endlessly repeated walk.
The package provides the instance model, a walk algebra (rotation,
concatenation, shortcut, decomposition, binding subwalks), exact
solvers, a constructor that assembles provably optimal walks for any
``k`` from at most ``n`` solved base cases, and a mixed-integer model
with LP-text export for cross-checking against external solvers.
"""

from .instance import (
    Instance,
    InstanceError,
    MetricReport,
    MetricViolationError,
    benchmark_instance,
    instance_to_dict,
    load_instance,
    points_document,
    random_euclidean_instance,
    save_instance,
    validate_metric,
)
from .walks import (
    ABS_TOL,
    BindingSubwalk,
    Decomposition,
    RevisitTime,
    ShortcutError,
    Subwalk,
    Walk,
    WalkError,
    concatenate,
    cyclic_permutation,
    decompose,
    duration,
    find_binding_subwalks,
    gap_subwalks,
    rotate_to_first_visit,
    shortcut,
    target_revisit_time,
    visit_positions,
    walk_from_dict,
    walk_revisit_time,
    walk_to_dict,
)
from .solver import (
    CapacityError,
    SolveResult,
    SolverOptions,
    branch_and_bound,
    brute_force_optimal,
    lower_bound,
    solve_tsp,
)
from .construct import (
    BaseSolutions,
    UncertifiedBaseError,
    build_base,
    construct_optimal,
    extend_by_n,
    load_base,
    save_base,
    shortcut_one_revisit,
)
from .milp import (
    Assignment,
    LinearRow,
    MilpModel,
    VerificationReport,
    build_model,
    export_lp,
    lp_text,
    verify_assignment,
    walk_to_assignment,
)

__version__ = "0.1.0"

__all__ = [
    "ABS_TOL",
    "Assignment",
    "BaseSolutions",
    "BindingSubwalk",
    "CapacityError",
    "Decomposition",
    "Instance",
    "InstanceError",
    "LinearRow",
    "MetricReport",
    "MetricViolationError",
    "MilpModel",
    "RevisitTime",
    "ShortcutError",
    "SolveResult",
    "SolverOptions",
    "Subwalk",
    "UncertifiedBaseError",
    "VerificationReport",
    "Walk",
    "WalkError",
    "benchmark_instance",
    "branch_and_bound",
    "brute_force_optimal",
    "build_base",
    "build_model",
    "concatenate",
    "construct_optimal",
    "cyclic_permutation",
    "decompose",
    "duration",
    "export_lp",
    "extend_by_n",
    "find_binding_subwalks",
    "gap_subwalks",
    "instance_to_dict",
    "load_base",
    "load_instance",
    "lower_bound",
    "lp_text",
    "points_document",
    "random_euclidean_instance",
    "rotate_to_first_visit",
    "save_base",
    "save_instance",
    "shortcut",
    "shortcut_one_revisit",
    "solve_tsp",
    "target_revisit_time",
    "validate_metric",
    "verify_assignment",
    "visit_positions",
    "walk_from_dict",
    "walk_revisit_time",
    "walk_to_assignment",
    "walk_to_dict",
]
