"""Local answer and plan providers: ground-truth oracle, seeded noise, replay.

Answerers implement ``answer(question, atom, observation) -> str`` and plan
agents ``propose(context) -> str``; both return raw text exactly as a remote
model would, so the parsing path is identical for every agent kind.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from ..pddl import GroundAtom, GroundTask, State
from ..planner import DEFAULT_NODE_BUDGET, PlanStatus, plan_from

TruthProvider = Callable[[], State]


def _wrap_cot(verdict: str, explanation: str = "oracle") -> str:
    return f"<explanation>{explanation}</explanation><answer>{verdict}</answer>"


def oracle_answer(atom: GroundAtom, truth: State, cot: bool = False) -> str:
    """Closed-world membership answer for one atom."""
    verdict = "Yes" if atom in truth else "No"
    return _wrap_cot(verdict) if cot else verdict


class OracleAnswerer:
    """Reads the environment's true symbolic state; the accuracy-1 limit."""

    def __init__(self, truth_provider: TruthProvider, cot: bool = False):
        self._truth = truth_provider
        self.cot = cot

    def answer(self, question: str, atom: GroundAtom, observation) -> str:
        return oracle_answer(atom, self._truth(), self.cot)


@dataclass(frozen=True)
class NoisyProfile:
    """Per-query independent error model with optional per-predicate accuracy."""

    accuracy: float = 0.97
    overrides: tuple[tuple[str, float], ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        for value in (self.accuracy, *(v for _, v in self.overrides)):
            if not 0.0 <= value <= 1.0:
                raise ValueError("accuracies must lie in [0, 1]")

    def accuracy_for(self, predicate: str) -> float:
        for name, value in self.overrides:
            if name == predicate:
                return value
        return self.accuracy


def noisy_answer(
    atom: GroundAtom, truth: State, profile: NoisyProfile, rng: random.Random, cot: bool = False
) -> str:
    """Correct answer with the profile's per-predicate probability, else flipped."""
    correct = atom in truth
    if rng.random() >= profile.accuracy_for(atom.pred):
        correct = not correct
    verdict = "Yes" if correct else "No"
    return _wrap_cot(verdict, "noisy") if cot else verdict


class NoisyAnswerer:
    """Seeded Bernoulli corruption of the oracle; deterministic per query stream."""

    def __init__(self, truth_provider: TruthProvider, profile: NoisyProfile, cot: bool = False):
        self._truth = truth_provider
        self.profile = profile
        self.cot = cot
        self._rng = random.Random(f"noisy-answerer:{profile.seed}")

    def answer(self, question: str, atom: GroundAtom, observation) -> str:
        return noisy_answer(atom, self._truth(), self.profile, self._rng, self.cot)


class ReplayExhausted(Exception):
    """A replay agent was asked for more outputs than its transcript holds."""


def replay_answer(transcript: Sequence[str], cursor: int) -> str:
    """Recorded raw text at position ``cursor``; errors past the end."""
    if cursor >= len(transcript):
        raise ReplayExhausted(f"transcript has {len(transcript)} entries, wanted index {cursor}")
    return transcript[cursor]


class ReplayAnswerer:
    """Replays recorded raw answers in order; for golden-transcript tests."""

    def __init__(self, transcript: Sequence[str]):
        self.transcript = list(transcript)
        self.cursor = 0

    def answer(self, question: str, atom: GroundAtom, observation) -> str:
        text = replay_answer(self.transcript, self.cursor)
        self.cursor += 1
        return text


class ScriptedAnswerer:
    """Answers every question with the same fixed text."""

    def __init__(self, text: str):
        self.text = text

    def answer(self, question: str, atom: GroundAtom, observation) -> str:
        return self.text


# --- Plan agents --------------------------------------------------------------


def plan_to_json(actions, explanation: str | None = None) -> str:
    payload: dict = {}
    if explanation is not None:
        payload["explanation"] = explanation
    payload["plan"] = [
        {"action": action.name, "parameters": list(action.args)} for action in actions
    ]
    return json.dumps(payload)


def oracle_plan(truth: State, task: GroundTask, budget: int = DEFAULT_NODE_BUDGET) -> str:
    """Plan on the true state, serialized in the chat plan format."""
    outcome = plan_from(task, truth, budget)
    if outcome.status is not PlanStatus.SOLVED:
        return plan_to_json((), explanation=f"no plan: {outcome.status.value}")
    return plan_to_json(outcome.plan.actions)


class OraclePlanAgent:
    """Plans on ground truth each step; exercises the loop plumbing end to end."""

    def __init__(self, truth_provider: TruthProvider, task: GroundTask, budget: int = DEFAULT_NODE_BUDGET):
        self._truth = truth_provider
        self.task = task
        self.budget = budget

    def propose(self, context) -> str:
        return oracle_plan(self._truth(), self.task, self.budget)


class NoisyPlanAgent:
    """Plans on a noisy perception of the true state.

    Every atom of the fluent universe keeps its true membership with the
    profile accuracy and flips otherwise, then the planner runs on the
    corrupted state.
    """

    def __init__(
        self,
        truth_provider: TruthProvider,
        task: GroundTask,
        profile: NoisyProfile,
        budget: int = DEFAULT_NODE_BUDGET,
    ):
        self._truth = truth_provider
        self.task = task
        self.profile = profile
        self.budget = budget
        self._rng = random.Random(f"noisy-planner:{profile.seed}")

    def propose(self, context) -> str:
        truth = self._truth()
        noisy: set[GroundAtom] = set()
        for atom in self.task.fluents:
            member = atom in truth
            if self._rng.random() >= self.profile.accuracy_for(atom.pred):
                member = not member
            if member:
                noisy.add(atom)
        return oracle_plan(frozenset(noisy), self.task, self.budget)


class ReplayPlanAgent:
    def __init__(self, transcript: Sequence[str]):
        self.transcript = list(transcript)
        self.cursor = 0

    def propose(self, context) -> str:
        text = replay_answer(self.transcript, self.cursor)
        self.cursor += 1
        return text


class ScriptedPlanAgent:
    def __init__(self, text: str):
        self.text = text

    def propose(self, context) -> str:
        return self.text
