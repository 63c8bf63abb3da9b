from __future__ import annotations

import pytest

from planloop.agents import (
    NoisyAnswerer,
    NoisyProfile,
    OracleAnswerer,
    ReplayAnswerer,
    ScriptedAnswerer,
)
from planloop.envs import BwEnv, EnvConfig, HhEnv, ProbeEnv, make_probe_problem
from planloop.pddl import GroundAtom
from planloop.protocol import (
    GrounderConfig,
    enumerate_predicates,
    fired_effects,
    run_grounder_episode,
)
from planloop.protocol.grounder import oracle_required_predictions


def make_bw_env(bw_domain, bw_problem, failure_prob=0.0, seed=0):
    return BwEnv(bw_problem, EnvConfig(failure_prob=failure_prob, seed=seed, kind="bw"), domain=bw_domain)


def make_hh_env(hh_domain, hh_problem, failure_prob=0.0, seed=0):
    return HhEnv(
        hh_problem, EnvConfig(failure_prob=failure_prob, seed=seed, kind="household"), domain=hh_domain
    )


class RecordingAnswerer:
    """Oracle that remembers which atoms were asked in which order."""

    def __init__(self, env):
        self.env = env
        self.asked: list[GroundAtom] = []

    def answer(self, question, atom, observation):
        self.asked.append(atom)
        return "Yes" if atom in self.env.ground_truth() else "No"


class TestEnumeration:
    def test_oracle_estimate_matches_truth(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        estimate = enumerate_predicates(env, OracleAnswerer(env.ground_truth))
        truth = env.ground_truth()
        non_reflexive = {a for a in env.task.fluent_set if not a.is_reflexive}
        assert estimate == truth & non_reflexive
        # Reflexive atoms default to false in the estimate.
        assert not any(a.is_reflexive for a in estimate)

    def test_each_visible_atom_asked_exactly_once_in_order(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        answerer = RecordingAnswerer(env)
        enumerate_predicates(env, answerer)
        expected = sorted(
            (a for a in env.task.fluent_set if not a.is_reflexive),
            key=lambda a: (a.pred, a.args),
        )
        assert answerer.asked == expected

    def test_hidden_atoms_not_asked_and_filled_from_truth(self, hh_domain, hh_problem):
        env = make_hh_env(hh_domain, hh_problem)
        answerer = RecordingAnswerer(env)
        estimate = enumerate_predicates(env, answerer)
        assert all("bowl_1" not in atom.args for atom in answerer.asked)
        assert GroundAtom("inside", ("bowl_1", "cabinet_1")) in estimate

    def test_always_yes_marks_every_visible_atom_true(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        estimate = enumerate_predicates(env, ScriptedAnswerer("Yes"))
        non_reflexive = {a for a in env.task.fluent_set if not a.is_reflexive}
        assert estimate == non_reflexive


class TestEpisode:
    def test_oracle_succeeds_with_optimal_steps_and_no_replans(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        record = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
        assert record.outcome == "success"
        assert record.success
        assert record.steps == 4
        assert record.replans == 0

    def test_oracle_succeeds_on_household(self, hh_domain, hh_problem):
        env = make_hh_env(hh_domain, hh_problem)
        record = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
        assert record.success
        assert record.steps == 5
        assert record.replans == 0

    def test_failure_injection_recovered_by_replanning(self, bw_domain, bw_problem):
        for seed in range(8):
            env = make_bw_env(bw_domain, bw_problem, failure_prob=0.1, seed=seed)
            record = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
            assert record.success, f"seed {seed}: {record.outcome}"

    def test_always_no_exhausts_budget(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        record = run_grounder_episode(env, ScriptedAnswerer("No"), GrounderConfig(max_replans=3))
        assert record.outcome == "budget-exhausted"
        assert not record.success

    def test_question_budget_terminates_episode(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        record = run_grounder_episode(
            env, OracleAnswerer(env.ground_truth), GrounderConfig(max_questions=10)
        )
        assert record.outcome == "budget-exhausted"
        assert record.questions_asked == 10

    def test_success_flag_always_tracks_ground_truth(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        record = run_grounder_episode(env, ScriptedAnswerer("No"), GrounderConfig(max_replans=0))
        assert record.success == env.goal_satisfied()

    def test_unparsable_answers_downgrade_to_no_after_reprompt(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        record = run_grounder_episode(
            env, ScriptedAnswerer("hmm, unclear"), GrounderConfig(max_replans=0)
        )
        faults = [e for e in record.events if e["kind"] == "parse_fault"]
        questions = list(record.question_events())
        assert faults and all(q["verdict"] == "no" for q in questions)
        # Two model calls per question: the original and one re-prompt.
        assert len(faults) == 2 * len(questions)

    def test_replay_answers_reproduce_episode(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        first = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
        transcript = [e["raw"] for e in first.question_events()]
        env2 = make_bw_env(bw_domain, bw_problem)
        second = run_grounder_episode(env2, ReplayAnswerer(transcript), GrounderConfig())
        assert second.success == first.success
        assert [e["atom"] for e in second.question_events()] == [
            e["atom"] for e in first.question_events()
        ]

    def test_cot_oracle_round_trip(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        answerer = OracleAnswerer(env.ground_truth, cot=True)
        record = run_grounder_episode(env, answerer, GrounderConfig(cot=True))
        assert record.success
        assert record.replans == 0


class TestVerificationCoverage:
    def test_effect_queries_match_fired_branches(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        answerer = RecordingAnswerer(env)
        record = run_grounder_episode(env, answerer, GrounderConfig())
        assert record.success

        # Replay the bookkeeping: enumeration first, then per-action phases.
        env2 = make_bw_env(bw_domain, bw_problem)
        estimate = enumerate_predicates(env2, OracleAnswerer(env2.ground_truth))
        asked_by_phase = {}
        for event in record.question_events():
            asked_by_phase.setdefault(event["phase"], []).append(
                GroundAtom(event["atom"][0], tuple(event["atom"][1]))
            )
        actions = [e for e in record.events if e["kind"] == "action"]
        effect_queries = iter(asked_by_phase.get("effect", []))
        for entry in actions[:-1]:  # the final action ends at the goal check
            action = env2.task.action(entry["action"][0], tuple(entry["action"][1]))
            adds, dels = fired_effects(action, estimate)
            visible = env2.task.fluent_set
            expected = sorted(
                (a for a in adds | dels if a in visible and not a.is_reflexive),
                key=lambda a: (a.pred, a.args),
            )
            got = [next(effect_queries) for _ in expected]
            assert got == expected
            estimate = frozenset((estimate - dels) | adds)
            env2.step(action)

    def test_precondition_queries_limited_to_visible(self, hh_domain, hh_problem):
        env = make_hh_env(hh_domain, hh_problem)
        record = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
        assert record.success
        for event in record.question_events():
            atom = GroundAtom(event["atom"][0], tuple(event["atom"][1]))
            assert not atom.is_reflexive


class TestRequiredPredictions:
    def test_probe_counts(self):
        for k in (0, 1, 5, 7):
            count = oracle_required_predictions(lambda k=k: ProbeEnv(make_probe_problem(k)))
            assert count == k

    def test_rejects_failing_environment(self, bw_domain, bw_problem):
        with pytest.raises(ValueError):
            oracle_required_predictions(
                lambda: make_bw_env(bw_domain, bw_problem, failure_prob=0.5)
            )


class TestTranscript:
    def test_counters_consistent_with_event_log(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem, failure_prob=0.1, seed=3)
        record = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
        kinds = [e["kind"] for e in record.events]
        assert record.questions_asked == kinds.count("question")
        assert record.steps == kinds.count("action")
        assert record.replans == kinds.count("replan")

    def test_jsonl_round_trip(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        record = run_grounder_episode(env, OracleAnswerer(env.ground_truth), GrounderConfig())
        from planloop.protocol import EpisodeRecord

        clone = EpisodeRecord.from_jsonl(record.to_jsonl())
        assert clone.header() == record.header()
        assert clone.events == record.events

    def test_sink_streams_every_event(self, bw_domain, bw_problem):
        env = make_bw_env(bw_domain, bw_problem)
        streamed = []
        record = run_grounder_episode(
            env, OracleAnswerer(env.ground_truth), GrounderConfig(), sink=streamed.append
        )
        assert streamed == record.events


class TestProbeCompounding:
    def test_single_wrong_answer_is_fatal(self):
        # With the replan budget at zero every answer is load-bearing.
        problem = make_probe_problem(7)
        failures = 0
        for seed in range(40):
            env = ProbeEnv(problem)
            profile = NoisyProfile(accuracy=0.0, seed=seed)  # always wrong
            record = run_grounder_episode(
                env, NoisyAnswerer(env.ground_truth, profile), GrounderConfig(max_replans=0)
            )
            failures += not record.success
        assert failures == 40
