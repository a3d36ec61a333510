"""The arrival-indexed 0/1 formulation: variable layout, constraint
rows, walk round-trips, and deterministic LP text export."""

from __future__ import annotations

import pytest

import walkplan as wp
from walkplan.milp import f_name, x_name, z_name


def expected_tag_counts(n: int, k: int) -> dict[str, int]:
    return {
        "deg-flow": n * (k - 1),
        "no-self": n * k,
        "depot": 2,
        "cover": n,
        "unique-edge": k,
        "accum": n * (k - 1),
        "wrap-nondepot": n - 1,
        "wrap-depot": 1,
        "proxy": n * k,
        "bigM-1": n * (k - 1),
        "bigM-2": n * (k - 1),
        "bigM-3": n * (k - 1),
        "bigM-4": n * (k - 1),
    }


class TestModelShape:
    def test_variable_counts_scale_with_k(self, bench):
        m4 = wp.build_model(bench, 4)
        assert m4.num_binaries == 64  # n^2 * k
        assert m4.num_continuous == 29  # n*k clocks + n*(k-1) resets + T
        m5 = wp.build_model(bench, 5)
        assert m5.num_binaries == 100
        assert m5.num_continuous == 36
        m16 = wp.build_model(bench, 16)
        assert m16.num_binaries == 256
        assert m16.num_continuous == 125

    def test_two_target_model(self):
        two = wp.Instance(n=2, cost=[[0.0, 3.0], [3.0, 0.0]], depot=1)
        m = wp.build_model(two, 2)
        assert m.num_binaries == 8

    def test_big_m_covers_the_horizon(self, bench):
        m = wp.build_model(bench, 4)
        assert m.big_m == pytest.approx(4 * 13.89, abs=1e-12)
        assert m.depot == 2
        assert m.objective == "T"

    def test_row_families(self, bench):
        m = wp.build_model(bench, 4)
        counts = {}
        for row in m.rows:
            counts[row.tag] = counts.get(row.tag, 0) + 1
        assert counts == expected_tag_counts(4, 4)
        assert len(m.rows_tagged("depot")) == 2

    def test_variable_names_are_systematic(self, bench):
        m = wp.build_model(bench, 4)
        names = set(m.variable_names())
        assert x_name(1, 2, 1) == "x_1_2_1"
        assert f_name(3, 4) in names
        assert z_name(2, 3) in names
        assert "T" in names

    def test_k_below_two_rejected(self, bench):
        with pytest.raises(ValueError):
            wp.build_model(bench, 1)


class TestWalkRoundTrip:
    def test_tour_assignment_is_feasible(self, bench):
        m = wp.build_model(bench, 4)
        tour = wp.Walk(bench, (2, 3, 4, 1, 2))
        a = wp.walk_to_assignment(m, tour)
        report = wp.verify_assignment(m, a)
        assert report.ok
        assert report.violations == ()
        assert report.objective == pytest.approx(38.07, abs=1e-6)

    def test_five_visit_assignment(self, bench):
        m = wp.build_model(bench, 5)
        w = wp.Walk(bench, (2, 3, 1, 4, 3, 2))
        report = wp.verify_assignment(m, wp.walk_to_assignment(m, w))
        assert report.ok
        assert report.objective == pytest.approx(
            wp.walk_revisit_time(w).time, abs=1e-6
        )

    def test_witness_clock_matches_the_revisit_time(self, bench):
        m = wp.build_model(bench, 5)
        w = wp.Walk(bench, (2, 3, 1, 4, 3, 2))
        a = wp.walk_to_assignment(m, w)
        # target 1 is reset at its single visit, the second arrival
        assert a.values[f_name(1, 2)] == pytest.approx(41.46, abs=1e-9)
        assert a.objective == pytest.approx(41.46, abs=1e-9)

    def test_constructed_walks_stay_feasible(self, bench_base):
        for k in (8, 11, 13):
            walk, value = wp.construct_optimal(bench_base, k)
            m = wp.build_model(bench_base.inst, k)
            report = wp.verify_assignment(m, wp.walk_to_assignment(m, walk))
            assert report.ok
            assert report.objective == pytest.approx(value, abs=1e-6)

    def test_mismatched_walks_rejected(self, bench):
        m = wp.build_model(bench, 4)
        with pytest.raises(ValueError):
            wp.walk_to_assignment(m, wp.Walk(bench, (2, 3, 1, 4, 3, 2)))  # k=5
        other = wp.random_euclidean_instance(4, seed=5)
        with pytest.raises(ValueError):
            wp.walk_to_assignment(m, wp.Walk(other, (1, 2, 3, 4, 1)))
        rotated = wp.Walk(bench, (3, 4, 1, 2, 3))  # starts off the depot
        with pytest.raises(ValueError):
            wp.walk_to_assignment(m, rotated)


class TestViolationDetection:
    def test_self_loop_is_flagged(self, bench):
        m = wp.build_model(bench, 4)
        a = wp.walk_to_assignment(m, wp.Walk(bench, (2, 3, 4, 1, 2)))
        tampered = dict(a.values)
        tampered[x_name(1, 1, 1)] = 1.0
        report = wp.verify_assignment(m, wp.Assignment(values=tampered))
        assert not report.ok
        assert "no-self" in report.by_tag()

    def test_dropped_coverage_is_flagged(self, bench):
        m = wp.build_model(bench, 4)
        a = wp.walk_to_assignment(m, wp.Walk(bench, (2, 3, 4, 1, 2)))
        tampered = dict(a.values)
        for j in bench.targets():
            for v in range(1, 5):
                tampered[x_name(1, j, v)] = 0.0
        report = wp.verify_assignment(m, wp.Assignment(values=tampered))
        assert not report.ok
        assert "cover" in report.by_tag()

    def test_clock_nudges_respect_the_tolerance(self, bench):
        m = wp.build_model(bench, 4)
        a = wp.walk_to_assignment(m, wp.Walk(bench, (2, 3, 4, 1, 2)))
        barely = dict(a.values)
        barely[f_name(3, 1)] += 1e-8
        assert wp.verify_assignment(m, wp.Assignment(values=barely)).ok
        clearly = dict(a.values)
        clearly[f_name(3, 1)] += 1e-3
        report = wp.verify_assignment(m, wp.Assignment(values=clearly))
        assert not report.ok
        assert max(v.amount for v in report.violations) == pytest.approx(
            1e-3, rel=1e-3
        )


class TestLpText:
    def test_sections_in_order(self, bench):
        text = wp.lp_text(wp.build_model(bench, 4))
        positions = [text.index(s) for s in
                     ("Minimize", "Subject To", "Bounds", "Binary", "End")]
        assert positions == sorted(positions)
        assert text.rstrip().endswith("End")

    def test_byte_determinism(self, bench, tmp_path):
        a = wp.lp_text(wp.build_model(bench, 6))
        b = wp.lp_text(wp.build_model(bench, 6))
        assert a == b
        p1, p2 = tmp_path / "a.lp", tmp_path / "b.lp"
        wp.export_lp(wp.build_model(bench, 6), p1)
        wp.export_lp(wp.build_model(bench, 6), p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text() == a

    def test_lines_stay_narrow(self, bench):
        text = wp.lp_text(wp.build_model(bench, 8))
        assert all(len(line) <= 80 for line in text.splitlines())

    def test_every_row_appears(self, bench):
        m = wp.build_model(bench, 4)
        text = wp.lp_text(m)
        for row in m.rows:
            assert f"{row.name}:" in text
