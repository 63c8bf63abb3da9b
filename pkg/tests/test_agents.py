from __future__ import annotations

import json
import random

import pytest

from planloop.agents import (
    NoisyAnswerer,
    NoisyProfile,
    OracleAnswerer,
    ReplayExhausted,
    noisy_answer,
    oracle_answer,
    oracle_plan,
    replay_answer,
)
from planloop.pddl import GroundAtom
from planloop.protocol import parse_plan_json, parse_yes_no


def atom(pred, *args):
    return GroundAtom(pred, args)


class TestOracle:
    def test_membership(self):
        truth = frozenset({atom("clear", "y")})
        assert oracle_answer(atom("clear", "y"), truth) == "Yes"
        assert oracle_answer(atom("clear", "p"), truth) == "No"

    def test_cot_wrapper_parses(self):
        truth = frozenset({atom("clear", "y")})
        text = oracle_answer(atom("clear", "y"), truth, cot=True)
        assert text == "<explanation>oracle</explanation><answer>Yes</answer>"
        assert parse_yes_no(text, cot=True) == "yes"


class TestNoisy:
    def test_accuracy_one_matches_oracle(self):
        truth = frozenset({atom("clear", "y")})
        rng = random.Random(0)
        profile = NoisyProfile(accuracy=1.0)
        for a in (atom("clear", "y"), atom("clear", "p")):
            assert noisy_answer(a, truth, profile, rng) == oracle_answer(a, truth)

    def test_accuracy_zero_always_flips(self):
        truth = frozenset({atom("clear", "y")})
        rng = random.Random(0)
        profile = NoisyProfile(accuracy=0.0)
        assert noisy_answer(atom("clear", "y"), truth, profile, rng) == "No"
        assert noisy_answer(atom("clear", "p"), truth, profile, rng) == "Yes"

    def test_empirical_accuracy_converges(self):
        truth = frozenset({atom("clear", "y")})
        rng = random.Random("convergence")
        profile = NoisyProfile(accuracy=0.97)
        n = 100_000
        correct = 0
        for _ in range(n):
            correct += noisy_answer(atom("clear", "y"), truth, profile, rng) == "Yes"
        assert abs(correct / n - 0.97) <= 0.003

    def test_per_predicate_overrides(self):
        truth = frozenset({atom("clear", "y"), atom("incolumn", "y", "c1")})
        profile = NoisyProfile(accuracy=1.0, overrides=(("clear", 0.0),))
        rng = random.Random(0)
        assert noisy_answer(atom("clear", "y"), truth, profile, rng) == "No"
        assert noisy_answer(atom("incolumn", "y", "c1"), truth, profile, rng) == "Yes"

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            NoisyProfile(accuracy=1.5)

    def test_transcripts_deterministic_per_seed(self):
        truth = frozenset({atom("clear", "y")})
        queries = [atom("clear", "y"), atom("clear", "p"), atom("clear", "r")] * 50

        def transcript(seed):
            answerer = NoisyAnswerer(lambda: truth, NoisyProfile(accuracy=0.7, seed=seed))
            return [answerer.answer("q", a, None) for a in queries]

        assert transcript(3) == transcript(3)
        assert transcript(3) != transcript(4)


class TestReplay:
    def test_in_order(self):
        assert replay_answer(["a", "b"], 0) == "a"
        assert replay_answer(["a", "b"], 1) == "b"

    def test_past_end_errors(self):
        with pytest.raises(ReplayExhausted):
            replay_answer(["a"], 1)


class TestOraclePlan:
    def test_solvable_plan_has_actions(self, bw_task):
        text = oracle_plan(bw_task.init, bw_task)
        parsed = parse_plan_json(text, bw_task.domain)
        assert parsed and len(parsed) == 4

    def test_goal_met_gives_empty_plan(self, bw_task):
        from planloop.envs import BwScene
        from planloop.envs.blocksworld import scene_to_atoms

        goal_state = scene_to_atoms(BwScene((("r",), (), ("y",), ("p",))))
        assert parse_plan_json(oracle_plan(goal_state, bw_task), bw_task.domain) == []

    def test_unsolvable_gives_empty_plan_with_note(self, bw_domain, bw_problem):
        import dataclasses

        from planloop.pddl import And, Atom, ground

        impossible = dataclasses.replace(
            bw_problem, goal=And((Atom("on", ("y", "p")), Atom("on", ("p", "y"))))
        )
        task = ground(bw_domain, impossible)
        text = oracle_plan(task.init, task)
        payload = json.loads(text)
        assert payload["plan"] == []
        assert "unsolvable" in payload["explanation"]
