from __future__ import annotations

import json

import pytest

from planloop.agents import OraclePlanAgent, ReplayPlanAgent, ScriptedPlanAgent
from planloop.envs import BwEnv, EnvConfig, HhEnv
from planloop.protocol import (
    OUTCOME_PARSE_DEADLOCK,
    PlannerLoopConfig,
    previous_actions_text,
    run_planner_episode,
)


def make_bw_env(bw_domain, bw_problem, failure_prob=0.0, seed=0):
    return BwEnv(bw_problem, EnvConfig(failure_prob=failure_prob, seed=seed, kind="bw"), domain=bw_domain)


class PromptCapturingAgent:
    """Wraps another agent and records the contexts it was shown."""

    def __init__(self, inner):
        self.inner = inner
        self.contexts = []

    def propose(self, context):
        self.contexts.append(context)
        return self.inner.propose(context)


def test_config_guards():
    with pytest.raises(ValueError):
        PlannerLoopConfig(max_steps=0)
    cfg = PlannerLoopConfig.for_split(5)
    assert cfg.max_steps == 20


def test_oracle_agent_solves_in_optimal_steps(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    agent = OraclePlanAgent(env.ground_truth, env.task)
    record = run_planner_episode(env, agent, PlannerLoopConfig(max_steps=20))
    assert record.outcome == "success"
    assert record.steps == 4


def test_oracle_agent_solves_household(hh_domain, hh_problem):
    env = HhEnv(hh_problem, EnvConfig(kind="household"), domain=hh_domain)
    agent = OraclePlanAgent(env.ground_truth, env.task)
    record = run_planner_episode(env, agent, PlannerLoopConfig(max_steps=20))
    assert record.outcome == "success"
    assert record.steps == 5


def test_one_action_executed_per_response(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    agent = PromptCapturingAgent(OraclePlanAgent(env.ground_truth, env.task))
    record = run_planner_episode(env, agent, PlannerLoopConfig(max_steps=20))
    assert record.steps == len(agent.contexts) == 4


def test_failure_injection_recovered_transparently(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem, failure_prob=0.1, seed=11)
    agent = OraclePlanAgent(env.ground_truth, env.task)
    record = run_planner_episode(env, agent, PlannerLoopConfig(max_steps=40))
    assert record.outcome == "success"


def test_inapplicable_action_agent_fails_after_max_steps(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    # y already sits in c2, so this move never applies.
    stubborn = ScriptedPlanAgent(
        json.dumps({"plan": [{"action": "moveblock", "parameters": {"block": "y", "column": "c2"}}]})
    )
    record = run_planner_episode(env, stubborn, PlannerLoopConfig(max_steps=6))
    assert record.outcome == "budget-exhausted"
    assert record.steps == 6
    assert all(not e["executed"] for e in record.events if e["kind"] == "action")


def test_unknown_action_counts_as_failed_step(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    agent = ScriptedPlanAgent('{"plan": [{"action": "teleport", "parameters": ["y"]}]}')
    record = run_planner_episode(env, agent, PlannerLoopConfig(max_steps=3))
    actions = [e for e in record.events if e["kind"] == "action"]
    assert [a["action"][0] for a in actions] == ["teleport"] * 3
    assert record.outcome == "budget-exhausted"


def test_unparsable_output_reprompted_once_then_noop(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)

    class FlakyAgent:
        def __init__(self):
            self.calls = 0

        def propose(self, context):
            self.calls += 1
            if self.calls == 1:
                assert context.parse_error is None
                return "no json here"
            if self.calls == 2:
                assert context.parse_error is not None
                return "still prose"
            return json.dumps(
                {"plan": [{"action": "moveblock", "parameters": {"block": "y", "column": "c3"}}]}
            )

    agent = FlakyAgent()
    record = run_planner_episode(env, agent, PlannerLoopConfig(max_steps=4))
    actions = [e for e in record.events if e["kind"] == "action"]
    assert actions[0]["action"][0] == "unparsable-plan"
    assert actions[1]["action"][0] == "moveblock"


def test_all_unparsable_is_parse_deadlock(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    record = run_planner_episode(env, ScriptedPlanAgent("word salad"), PlannerLoopConfig(max_steps=3))
    assert record.outcome == OUTCOME_PARSE_DEADLOCK
    assert not record.success


def test_empty_plan_burns_a_step(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    record = run_planner_episode(env, ScriptedPlanAgent('{"plan": []}'), PlannerLoopConfig(max_steps=2))
    assert record.outcome == "budget-exhausted"
    assert record.steps == 2


def test_goal_at_start_succeeds_without_prompting(bw_domain):
    from planloop.envs import BwScene
    from planloop.envs.blocksworld import scene_problem

    scene = BwScene((("r",), ("g",), (), ()))
    problem = scene_problem("done", scene, scene)
    env = BwEnv(problem, EnvConfig(kind="bw"), domain=bw_domain)
    record = run_planner_episode(env, ScriptedPlanAgent("never called"), PlannerLoopConfig(max_steps=2))
    assert record.outcome == "success"
    assert record.steps == 0


def test_history_carries_failure_notes(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem, failure_prob=1.0)
    agent = PromptCapturingAgent(OraclePlanAgent(env.ground_truth, env.task))
    run_planner_episode(env, agent, PlannerLoopConfig(max_steps=3))
    last_context = agent.contexts[-1]
    assert all(not executed for _, executed in last_context.previous_actions)
    text = previous_actions_text(list(last_context.previous_actions))
    assert "failed" in text and "1." in text


def test_replay_plan_agent(bw_domain, bw_problem):
    env = make_bw_env(bw_domain, bw_problem)
    first = run_planner_episode(
        env, OraclePlanAgent(env.ground_truth, env.task), PlannerLoopConfig(max_steps=20)
    )
    raws = [e["raw"] for e in first.plan_requests()]
    env2 = make_bw_env(bw_domain, bw_problem)
    second = run_planner_episode(env2, ReplayPlanAgent(raws), PlannerLoopConfig(max_steps=20))
    assert second.success and second.steps == first.steps
