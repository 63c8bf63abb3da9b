"""Shared environment types: configuration, observations, step results.

An environment object exposes:

- ``task``: the GroundTask being executed
- ``kind``: "bw", "household" or "probe"
- ``observe()`` -> Observation
- ``step(action)`` -> StepResult
- ``ground_truth()`` -> State (privileged; for oracles and success checks)
- ``goal_satisfied()`` -> bool (always judged on ground truth)
- ``privileged_text``: str ("" when nothing is hidden)

Every instance owns its mutable state and RNG; distinct episodes must use
distinct instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..naming import base_counts, render_object
from ..pddl import GroundAtom, GroundTask, State, holds


@dataclass(frozen=True)
class EnvConfig:
    """Execution knobs: failure probability and RNG seed."""

    failure_prob: float = 0.0
    seed: int = 0
    kind: str = "bw"

    def __post_init__(self) -> None:
        if not 0.0 <= self.failure_prob <= 1.0:
            raise ValueError("failure_prob must be in [0, 1]")


@dataclass(frozen=True)
class Observation:
    """What an agent can see at one instant.

    ``visible`` is the set of ground atoms whose truth is assessable (the
    question mask); ``true_visible`` is the subset of those that actually hold.
    Under full observability ``visible`` equals the whole fluent universe.
    """

    kind: str
    visible: frozenset[GroundAtom]
    true_visible: frozenset[GroundAtom]
    description: str = ""
    image_ref: str | None = None
    privileged: str = ""


@dataclass(frozen=True)
class StepResult:
    """Outcome of executing one action: False means failed or inapplicable."""

    executed: bool
    observation: Observation
    goal_reached: bool


def goal_reached(state: State, goal) -> bool:
    """Goal test on the ground-truth state (never on an agent's estimate)."""
    return holds(state, goal)


# --- Scene description (text surrogate for a rendered image) ----------------


def _column_sort_key(name: str) -> tuple[int, str]:
    digits = "".join(ch for ch in name if ch.isdigit())
    return (int(digits) if digits else 0, name)


def _describe_bw(visible: frozenset[GroundAtom], true_visible: frozenset[GroundAtom]) -> str:
    columns = sorted({a.args[1] for a in visible if a.pred == "incolumn"}, key=_column_sort_key)
    in_column: dict[str, list[str]] = {c: [] for c in columns}
    on_pairs = {a.args for a in true_visible if a.pred == "on"}
    below = {upper: lower for upper, lower in on_pairs}
    for atom in true_visible:
        if atom.pred == "incolumn":
            in_column[atom.args[1]].append(atom.args[0])
    if not any(in_column.values()):
        return "All columns are empty."
    lines = []
    for column in columns:
        blocks = set(in_column[column])
        if not blocks:
            lines.append(f"Column {column.upper()}: empty.")
            continue
        bottom = [b for b in blocks if below.get(b) not in blocks]
        stack = [sorted(bottom)[0]] if bottom else [sorted(blocks)[0]]
        above = {lower: upper for upper, lower in on_pairs}
        while stack[-1] in above and above[stack[-1]] in blocks and len(stack) < len(blocks):
            stack.append(above[stack[-1]])
        lines.append(f"Column {column.upper()}: {' '.join(b.upper() for b in stack)} (bottom to top).")
    return "\n".join(lines)


def _describe_hh(visible: frozenset[GroundAtom], true_visible: frozenset[GroundAtom]) -> str:
    counts = base_counts({arg for atom in visible for arg in atom.args})

    def name(arg: str) -> str:
        return render_object(arg, counts, article=None)

    sentences = []
    for atom in sorted(true_visible, key=lambda a: (a.pred, a.args)):
        names = [name(arg) for arg in atom.args]
        if atom.pred == "reachable":
            sentences.append(f"The {names[0]} is within reach.")
        elif atom.pred == "holding":
            sentences.append(f"The agent is holding the {names[0]}.")
        elif atom.pred == "open":
            sentences.append(f"The {names[0]} is open.")
        elif atom.pred == "ontop":
            sentences.append(f"The {names[0]} is on top of the {names[1]}.")
        elif atom.pred == "nextto":
            sentences.append(f"The {names[0]} is next to the {names[1]}.")
        elif atom.pred == "inside":
            sentences.append(f"The {names[0]} is inside the {names[1]}.")
    if not sentences:
        return "Nothing of note is visible."
    return " ".join(sentences)


def describe_scene(obs: Observation) -> str:
    """Deterministic English rendering of the visible part of the world."""
    if obs.kind == "bw":
        return _describe_bw(obs.visible, obs.true_visible)
    if obs.kind == "household":
        return _describe_hh(obs.visible, obs.true_visible)
    return f"{len(obs.true_visible)} of {len(obs.visible)} observable facts hold."


def finish_observation(obs: Observation) -> Observation:
    """Fill in the description field from the visible atoms."""
    return replace(obs, description=describe_scene(obs))
