"""Optimal forward search over a ground task.

Breadth-first search over canonicalized states with a closed set. Unit action
costs; deterministic tie-breaking (FIFO expansion, actions tried in the
grounded lexicographic order), so two runs on the same task return identical
plans. States are compiled to bit masks over the fluent universe for speed;
the compiled form is cached on the task.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .pddl import GroundAction, GroundAtom, GroundTask, State, ValidationError
from .pddl import applicable as _applicable
from .pddl import apply as _apply
from .pddl import goal_satisfied

DEFAULT_NODE_BUDGET = 5_000_000


class PlanStatus(Enum):
    SOLVED = "solved"
    UNSOLVABLE = "unsolvable"
    BUDGET_EXCEEDED = "budget-exceeded"


@dataclass(frozen=True)
class Plan:
    actions: tuple[GroundAction, ...]

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __str__(self) -> str:
        return "; ".join(str(a) for a in self.actions)


@dataclass(frozen=True)
class PlanOutcome:
    status: PlanStatus
    plan: Plan | None
    expanded: int

    @property
    def solved(self) -> bool:
        return self.status is PlanStatus.SOLVED


class _Compiled:
    """Bit-mask encoding of a ground task, cached per GroundTask instance."""

    __slots__ = ("index", "atoms", "actions", "goal_pos", "goal_neg")

    def __init__(self, task: GroundTask):
        self.atoms = task.fluents
        self.index = {atom: 1 << i for i, atom in enumerate(task.fluents)}
        index = self.index
        self.goal_pos = self._mask(task.goal_pos)
        self.goal_neg = self._mask(task.goal_neg)
        actions = []
        for action in task.actions:
            pos = self._mask(action.positive_preconditions)
            neg = self._mask(action.negative_preconditions)
            clauses = tuple(
                (tuple(index[a] for a in cp), tuple(index[a] for a in cn))
                for cp, cn in action.clauses
            )
            effects = tuple(
                (
                    self._mask(e.condition_pos),
                    self._mask(e.condition_neg),
                    self._mask(e.add),
                    self._mask(e.delete),
                )
                for e in action.effects
            )
            actions.append((pos, neg, clauses, effects, action))
        self.actions = tuple(actions)

    def _mask(self, atoms) -> int:
        mask = 0
        for atom in atoms:
            mask |= self.index[atom]
        return mask

    def encode(self, state: State) -> int:
        mask = 0
        for atom in state:
            bit = self.index.get(atom)
            if bit is None:
                raise ValidationError(f"state atom {atom} is outside the fluent universe")
            mask |= bit
        return mask


_COMPILED_CACHE: dict[int, tuple[GroundTask, _Compiled]] = {}


def _compiled(task: GroundTask) -> _Compiled:
    entry = _COMPILED_CACHE.get(id(task))
    if entry is not None and entry[0] is task:
        return entry[1]
    compiled = _Compiled(task)
    if len(_COMPILED_CACHE) > 128:
        _COMPILED_CACHE.clear()
    _COMPILED_CACHE[id(task)] = (task, compiled)
    return compiled


def plan(task: GroundTask, budget: int = DEFAULT_NODE_BUDGET) -> PlanOutcome:
    """Find a minimum-length plan from the task's initial state."""
    return plan_from(task, task.init, budget)


def plan_from(task: GroundTask, state: State, budget: int = DEFAULT_NODE_BUDGET) -> PlanOutcome:
    """Find a minimum-length plan from an arbitrary state estimate.

    The estimate may be physically inconsistent; search follows pure PDDL
    semantics and leaves consistency checks to execution.
    """
    compiled = _compiled(task)
    start = compiled.encode(state)
    goal_pos = compiled.goal_pos
    goal_neg = compiled.goal_neg

    if (start & goal_pos) == goal_pos and not (start & goal_neg):
        return PlanOutcome(PlanStatus.SOLVED, Plan(()), 0)

    actions = compiled.actions
    parents: dict[int, tuple[int, int]] = {start: (-1, -1)}
    frontier = deque((start,))
    expanded = 0

    def reconstruct(mask: int) -> Plan:
        chain = []
        current = mask
        while True:
            parent, action_idx = parents[current]
            if parent == -1:
                break
            chain.append(action_idx)
            current = parent
        chain.reverse()
        return Plan(tuple(actions[i][4] for i in chain))

    while frontier:
        if expanded >= budget:
            return PlanOutcome(PlanStatus.BUDGET_EXCEEDED, None, expanded)
        s = frontier.popleft()
        expanded += 1
        for action_idx, (pos, neg, clauses, effects, _action) in enumerate(actions):
            if (s & pos) != pos or (s & neg):
                continue
            if clauses:
                ok = True
                for clause_pos, clause_neg in clauses:
                    if any(s & bit for bit in clause_pos):
                        continue
                    if any(not (s & bit) for bit in clause_neg):
                        continue
                    ok = False
                    break
                if not ok:
                    continue
            adds = 0
            dels = 0
            for cp, cn, add, delete in effects:
                if (s & cp) == cp and not (s & cn):
                    adds |= add
                    dels |= delete
            successor = (s & ~dels) | adds
            if successor in parents:
                continue
            parents[successor] = (s, action_idx)
            if (successor & goal_pos) == goal_pos and not (successor & goal_neg):
                return PlanOutcome(PlanStatus.SOLVED, reconstruct(successor), expanded)
            frontier.append(successor)

    return PlanOutcome(PlanStatus.UNSOLVABLE, None, expanded)


def validate_plan(task: GroundTask, state: State, plan_obj: Plan) -> bool:
    """Independent checker: replay the plan and test the goal at the end."""
    current = state
    for action in plan_obj:
        if not _applicable(current, action):
            return False
        current = _apply(current, action)
    return goal_satisfied(task, current)


def external_plan(
    task: GroundTask,
    state: State,
    command_template: str,
    *,
    timeout: float = 300.0,
) -> PlanOutcome:
    """Adapter for swapping in an external planner binary.

    The task is written as standard PDDL files; the command template is
    formatted with {domain}, {problem} and {plan} paths and must leave one
    "(action arg ...)" line per step in the plan file. The returned plan is
    checked with validate_plan; anything invalid counts as unsolvable. The
    in-repo search remains the default and the test baseline.
    """
    import dataclasses
    import re
    import subprocess
    import tempfile
    from pathlib import Path

    from .pddl import domain_to_pddl, problem_to_pddl

    with tempfile.TemporaryDirectory(prefix="planloop-ext-") as workdir:
        base = Path(workdir)
        domain_path = base / "domain.pddl"
        problem_path = base / "problem.pddl"
        plan_path = base / "plan.txt"
        domain_path.write_text(domain_to_pddl(task.domain))
        problem = dataclasses.replace(task.problem, init=frozenset(state))
        problem_path.write_text(problem_to_pddl(problem))
        command = command_template.format(
            domain=domain_path, problem=problem_path, plan=plan_path
        )
        subprocess.run(command, shell=True, check=True, timeout=timeout, capture_output=True)
        if not plan_path.exists():
            return PlanOutcome(PlanStatus.UNSOLVABLE, None, 0)
        actions = []
        for line in plan_path.read_text().splitlines():
            match = re.match(r"\s*\(\s*([^\s()]+)((?:\s+[^\s()]+)*)\s*\)", line)
            if not match:
                continue
            name = match.group(1).lower()
            args = tuple(match.group(2).split())
            action = task.action(name, tuple(a.lower() for a in args))
            if action is None:
                return PlanOutcome(PlanStatus.UNSOLVABLE, None, 0)
            actions.append(action)
        candidate = Plan(tuple(actions))
        if not validate_plan(task, state, candidate):
            return PlanOutcome(PlanStatus.UNSOLVABLE, None, 0)
        return PlanOutcome(PlanStatus.SOLVED, candidate, 0)
