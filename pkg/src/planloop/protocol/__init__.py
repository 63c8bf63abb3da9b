"""Evaluation protocols: question-answer grounding and closed-loop planning."""

from .episode import (
    OUTCOME_BUDGET,
    OUTCOME_PARSE_DEADLOCK,
    OUTCOME_SUCCESS,
    EpisodeRecord,
    GrounderConfig,
    PlannerLoopConfig,
    QuestionBudgetExceeded,
)
from .grounder import (
    enumerate_predicates,
    fired_effects,
    oracle_required_predictions,
    run_grounder_episode,
)
from .outputs import NO, UNPARSABLE, YES, parse_plan_json, parse_yes_no
from .planner_loop import PlanContext, run_planner_episode
from .prompts import PromptMessage, fill_template, load_prompt, previous_actions_text, split_roles
from .questions import QuestionTemplates, TemplateError, atom_to_question, goal_text, load_patterns

__all__ = [
    "NO",
    "OUTCOME_BUDGET",
    "OUTCOME_PARSE_DEADLOCK",
    "OUTCOME_SUCCESS",
    "UNPARSABLE",
    "YES",
    "EpisodeRecord",
    "GrounderConfig",
    "PlanContext",
    "PlannerLoopConfig",
    "PromptMessage",
    "QuestionBudgetExceeded",
    "QuestionTemplates",
    "TemplateError",
    "atom_to_question",
    "enumerate_predicates",
    "fill_template",
    "fired_effects",
    "goal_text",
    "load_patterns",
    "load_prompt",
    "oracle_required_predictions",
    "parse_plan_json",
    "parse_yes_no",
    "previous_actions_text",
    "run_grounder_episode",
    "run_planner_episode",
    "split_roles",
]
