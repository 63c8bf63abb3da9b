"""Switchboard micro-tasks for calibrating the compounding-error law.

A probe task has n switches, all initially off. The goal requires pressing m
of them (m >= 1) and leaving the rest untouched; ``press`` has no
preconditions and simply turns its switch on. A perfect answerer needs
exactly k = n + m - 1 answers (n enumeration questions plus one effect check
after each press except the last, which ends the episode), and every one of
those answers is load-bearing: with the replan budget at zero, a single wrong
answer makes the episode unrecoverable. Success probability under per-answer
accuracy a is therefore exactly a^k.
"""

from __future__ import annotations

import random

from ..pddl import (
    ActionSchema,
    And,
    Atom,
    Domain,
    GroundAction,
    GroundAtom,
    Not,
    PredicateSchema,
    Problem,
    State,
    TypeHierarchy,
    apply,
    applicable,
    goal_satisfied,
    ground,
)
from .core import EnvConfig, Observation, StepResult, finish_observation

PROBE_DOMAIN = Domain(
    name="switchboard",
    requirements=frozenset({":strips", ":typing", ":negative-preconditions"}),
    types=TypeHierarchy(),
    predicates=(PredicateSchema("lit", (("?s", "object"),)),),
    actions=(
        ActionSchema(
            name="press",
            params=(("?s", "object"),),
            precondition=And(()),
            effect=Atom("lit", ("?s",)),
        ),
    ),
)


def probe_shape(k: int) -> tuple[int, int]:
    """Pick (switch count, presses required) so the oracle path asks k questions."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0, 0
    presses = (k + 1) // 2
    return k + 1 - presses, presses


def make_probe_problem(k: int, name: str = "probe") -> Problem:
    """A task whose failure-free oracle path asks exactly k questions."""
    switches, presses = probe_shape(k)
    objects = tuple((f"switch_{i + 1}", "object") for i in range(switches))
    parts = [Atom("lit", (obj,)) for obj, _ in objects[:presses]]
    parts.extend(Not(Atom("lit", (obj,))) for obj, _ in objects[presses:])
    return Problem(name, "switchboard", objects, frozenset(), And(tuple(parts)))


class ProbeEnv:
    """Fully observable, failure-free environment over a switchboard task."""

    kind = "probe"

    def __init__(self, problem: Problem, cfg: EnvConfig | None = None):
        self.problem = problem
        self.cfg = cfg or EnvConfig(kind="probe")
        self.task = ground(PROBE_DOMAIN, problem)
        self.state: State = self.task.init
        self.privileged_text = ""
        self._rng = random.Random(self.cfg.seed)

    def observe(self) -> Observation:
        return finish_observation(
            Observation(kind="probe", visible=self.task.fluent_set, true_visible=self.state)
        )

    def step(self, action: GroundAction) -> StepResult:
        if applicable(self.state, action):
            self.state = apply(self.state, action)
            executed = True
        else:
            executed = False
        return StepResult(executed, self.observe(), self.goal_satisfied())

    def ground_truth(self) -> State:
        return self.state

    def goal_satisfied(self) -> bool:
        return goal_satisfied(self.task, self.state)
