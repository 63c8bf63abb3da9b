"""Closed-loop plan-proposal protocol.

Each step the agent sees the current scene, the goal, the action catalog and
a failure-annotated history, and returns a full plan; only the first action is
executed, then the loop re-prompts. Unparsable output earns one re-prompt with
the parse error appended; a second failure burns a step as a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..pddl import Domain, GroundTask
from .episode import (
    OUTCOME_BUDGET,
    OUTCOME_PARSE_DEADLOCK,
    OUTCOME_SUCCESS,
    EpisodeRecord,
    PlannerLoopConfig,
)
from .outputs import parse_plan_json
from .questions import QuestionTemplates, goal_text


@dataclass(frozen=True)
class PlanContext:
    """Everything a plan agent may use to produce its next plan."""

    kind: str
    description: str
    goal_string: str
    previous_actions: tuple[tuple[str, bool], ...]
    privileged: str
    cot: bool
    image_ref: str | None = None
    parse_error: str | None = None


def run_planner_episode(
    env,
    plan_agent,
    cfg: PlannerLoopConfig,
    *,
    task_id: str = "",
    seed: int = 0,
    sink=None,
) -> EpisodeRecord:
    """Run one closed-loop planning episode."""
    task: GroundTask = env.task
    domain: Domain = task.domain
    templates = QuestionTemplates.for_task(task, env.kind)
    goal_string = goal_text(task, templates)
    record = EpisodeRecord(
        task_id=task_id or task.problem.name, setting="planner", cot=cfg.cot, seed=seed, sink=sink
    )
    history: list[tuple[str, bool]] = []

    if env.goal_satisfied():
        record.outcome = OUTCOME_SUCCESS
        record.success = True
        return record

    any_parsed = False
    while record.steps < cfg.max_steps:
        observation = env.observe()
        context = PlanContext(
            kind=env.kind,
            description=observation.description,
            goal_string=goal_string,
            previous_actions=tuple(history),
            privileged=env.privileged_text,
            cot=cfg.cot,
            image_ref=observation.image_ref,
        )
        raw = plan_agent.propose(context)
        parsed = parse_plan_json(raw, domain)
        if parsed is None:
            record.log_parse_fault(raw, "plan")
            retry_context = replace(context, parse_error="Your previous output could not be parsed as a plan JSON object.")
            raw = plan_agent.propose(retry_context)
            parsed = parse_plan_json(raw, domain)
        record.log_plan_request(raw, [[n, list(a)] for n, a in parsed] if parsed is not None else None)

        if parsed is None:
            record.log_parse_fault(raw, "plan")
            record.log_action("unparsable-plan", (), False)
            history.append(("unparsable plan", False))
            continue
        any_parsed = True

        if not parsed:
            # The agent believes the goal is already met; burn a no-op step.
            record.log_action("empty-plan", (), False)
            history.append(("empty plan", False))
            continue

        name, args = parsed[0]
        action = task.action(name, args)
        if action is None:
            record.log_action(name, args, False)
            history.append((f"{name}({', '.join(args)})", False))
            continue

        result = env.step(action)
        record.log_action(action.name, action.args, result.executed)
        history.append((str(action), result.executed))
        if env.goal_satisfied():
            record.outcome = OUTCOME_SUCCESS
            record.success = True
            return record

    record.outcome = OUTCOME_BUDGET if any_parsed else OUTCOME_PARSE_DEADLOCK
    record.success = env.goal_satisfied()
    return record
