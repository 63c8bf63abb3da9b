from __future__ import annotations

import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from planloop import metrics
from planloop.protocol import EpisodeRecord


def make_record(success: bool, task_id="t", k=None, questions=()) -> EpisodeRecord:
    record = EpisodeRecord(task_id=task_id, setting="grounder", cot=False, seed=0)
    record.success = success
    record.outcome = "success" if success else "budget-exhausted"
    record.required_predictions = k
    for predicate, verdict, truth in questions:
        record.log_question(
            atom=__import__("planloop.pddl", fromlist=["GroundAtom"]).GroundAtom(predicate, ("o",)),
            question="q",
            raw=verdict,
            verdict=verdict,
            truth=truth,
            phase="enumeration",
        )
    return record


def records_with_successes(successes: int, n: int):
    return [make_record(i < successes, task_id=f"t{i}") for i in range(n)]


class TestSuccessRate:
    def test_twelve_of_twentyfive(self):
        rate, sem = metrics.success_rate(records_with_successes(12, 25))
        assert rate == pytest.approx(0.48)
        assert sem == pytest.approx(math.sqrt(0.48 * 0.52 / 25))
        assert metrics.fmt2(sem) == "0.10"

    def test_perfect_split(self):
        rate, sem = metrics.success_rate(records_with_successes(25, 25))
        assert (rate, sem) == (1.0, 0.0)

    def test_degenerate_zero(self):
        rate, sem = metrics.success_rate(records_with_successes(0, 25))
        assert (rate, sem) == (0.0, 0.0)

    @given(st.lists(st.booleans(), min_size=1, max_size=60), st.randoms())
    def test_permutation_invariant(self, flags, rng):
        records = [make_record(flag, task_id=str(i)) for i, flag in enumerate(flags)]
        before = metrics.success_rate(records)
        rng.shuffle(records)
        assert metrics.success_rate(records) == before


class TestCombined:
    def test_leaderboard_row_reproduction(self):
        # Two domain scores of 0.77 +/- 0.04 and 0.11 +/- 0.03 combine to
        # 0.44 with an error that displays as 0.03.
        a = metrics.CombinedReport(((0.77, 0.04),), 0.77, 0.04)
        b = metrics.CombinedReport(((0.11, 0.03),), 0.11, 0.03)
        combined = metrics.combined_average([a, b])
        assert combined.mean == pytest.approx(0.44)
        assert combined.sem == pytest.approx(0.5 * math.sqrt(0.04**2 + 0.03**2))
        assert metrics.fmt2(combined.mean) == "0.44"
        assert metrics.fmt2(combined.sem) == "0.03"

    def test_identical_members_shrink_error(self):
        member = metrics.SplitReport("s", 25, 20, 0.8, 0.08)
        combined = metrics.combined_average([member] * 4)
        assert combined.mean == pytest.approx(0.8)
        assert combined.sem == pytest.approx(0.08 / 2)

    def test_single_member_identity(self):
        member = metrics.SplitReport("s", 25, 20, 0.8, 0.08)
        combined = metrics.combined_average([member])
        assert (combined.mean, combined.sem) == (0.8, 0.08)

    def test_combined_sem_never_exceeds_max_member(self):
        members = [
            metrics.SplitReport("a", 25, 10, 0.4, 0.10),
            metrics.SplitReport("b", 25, 20, 0.8, 0.08),
            metrics.SplitReport("c", 25, 5, 0.2, 0.08),
        ]
        combined = metrics.combined_average(members)
        assert combined.sem <= max(m.sem for m in members)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            metrics.combined_average([])


class TestPredicateAccuracy:
    def test_oracle_records_are_perfect(self):
        questions = [("clear", "yes", True), ("on", "no", False)] * 10
        rows = metrics.predicate_accuracy([make_record(True, questions=questions)])
        assert all(row.accuracy == 1.0 for row in rows)

    def test_override_shows_up_per_predicate(self):
        questions = [("clear", "no", True)] * 10 + [("on", "yes", True)] * 10
        rows = {r.predicate: r for r in metrics.predicate_accuracy([make_record(True, questions=questions)])}
        assert rows["clear"].accuracy == 0.0
        assert rows["on"].accuracy == 1.0

    def test_noisy_accuracy_converges(self):
        rng = random.Random("predicate-accuracy")
        questions = []
        for _ in range(20_000):
            truth = rng.random() < 0.5
            correct = rng.random() < 0.97
            verdict = "yes" if truth == correct else "no"
            questions.append(("incolumn", verdict, truth))
        rows = metrics.predicate_accuracy([make_record(True, questions=questions)])
        assert abs(rows[0].accuracy - 0.97) <= 0.01


class TestCompounding:
    def test_oracle_fraction_is_one_everywhere(self):
        records = [make_record(True, task_id=str(i), k=i % 5) for i in range(50)]
        buckets = metrics.compounding_curve(records)
        assert all(b.fraction == 1.0 for b in buckets)

    def test_bucket_grouping(self):
        records = [
            make_record(True, "a", k=3),
            make_record(False, "b", k=3),
            make_record(True, "c", k=7),
        ]
        buckets = {b.required_predictions: b for b in metrics.compounding_curve(records)}
        assert buckets[3].tasks == 2 and buckets[3].solved == 1
        assert buckets[7].fraction == 1.0

    def test_records_without_k_are_skipped(self):
        records = [make_record(True, "a", k=None)]
        assert metrics.compounding_curve(records) == []

    def test_plot_data_format(self):
        buckets = [metrics.CompoundingBucket(7, 100, 80)]
        text = metrics.compounding_plot_data(buckets)
        assert text.splitlines()[0] == "required_predictions,fraction,sem,tasks"
        assert text.splitlines()[1].startswith("7,0.8")

    def test_svg_emitter(self):
        buckets = [metrics.CompoundingBucket(k, 10, 10 - k) for k in range(5)]
        svg = metrics.compounding_svg(buckets)
        assert svg.startswith("<svg") and "polyline" in svg


class TestLeaderboard:
    def cell(self, rate, sem):
        return [metrics.SplitReport("s", 25, int(rate * 25), rate, sem)]

    def test_ranking_by_combined_mean(self):
        cells = {
            ("a", "grounder", True): {"bw": self.cell(0.47, 0.04)},
            ("b", "grounder", True): {"bw": self.cell(0.44, 0.03)},
        }
        rows = metrics.leaderboard(cells)
        assert [r.agent for r in rows] == ["a", "b"]

    def test_tie_broken_by_smaller_sem_then_name(self):
        cells = {
            ("zeta", "grounder", False): {"bw": self.cell(0.5, 0.04)},
            ("alpha", "grounder", False): {"bw": self.cell(0.5, 0.04)},
            ("mid", "grounder", False): {"bw": self.cell(0.5, 0.03)},
        }
        rows = metrics.leaderboard(cells)
        assert [r.agent for r in rows] == ["mid", "alpha", "zeta"]

    def test_single_cell(self):
        rows = metrics.leaderboard({("a", "planner", False): {"hh": self.cell(0.2, 0.05)}})
        assert len(rows) == 1
        assert rows[0].combined.mean == pytest.approx(0.2)

    def test_emitters(self):
        cells = {
            ("a", "grounder", True): {
                "bw": self.cell(0.77, 0.04),
                "hh": self.cell(0.11, 0.03),
            }
        }
        rows = metrics.leaderboard(cells)
        text = metrics.leaderboard_text(rows)
        assert "0.44 (0.03)" in text
        csv = metrics.leaderboard_csv(rows)
        assert csv.splitlines()[0].startswith("rank,agent,setting,cot")
        payload = metrics.leaderboard_json(rows)
        assert '"rank": 1' in payload


class TestCotComparison:
    def cell(self, rate, sem):
        return [metrics.SplitReport("s", 25, int(rate * 25), rate, sem)]

    def test_difference_error_and_ratio(self):
        cells = {
            ("a", "grounder", True): {"bw": self.cell(0.6, 0.03)},
            ("a", "grounder", False): {"bw": self.cell(0.5, 0.04)},
        }
        rows = metrics.cot_comparison(cells)
        assert len(rows) == 1
        row = rows[0]
        assert row["difference"] == pytest.approx(0.1)
        assert row["error"] == pytest.approx(math.sqrt(0.03**2 + 0.04**2))
        assert row["ratio"] == pytest.approx(0.1 / math.sqrt(0.0025))
        csv = metrics.cot_comparison_csv(rows)
        assert csv.splitlines()[0] == "agent,setting,domain,difference,error,ratio"

    def test_unpaired_cells_skipped(self):
        cells = {("a", "grounder", True): {"bw": self.cell(0.6, 0.03)}}
        assert metrics.cot_comparison(cells) == []


class TestRounding:
    def test_half_even_display(self):
        assert metrics.fmt2(0.125) == "0.12"  # exact tie rounds to even
        assert metrics.fmt2(0.135) == "0.14"  # stored double sits just above the tie
        assert metrics.fmt2(0.025) == "0.03"  # stored double sits just above the tie
