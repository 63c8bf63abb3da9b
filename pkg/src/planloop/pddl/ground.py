"""Grounding and state-transition semantics.

``ground`` instantiates every predicate and action schema over a problem's
object list, expanding ``forall``, resolving equalities to constants and
lowering ``when`` to flat conditional effects. ``holds``/``applicable``/
``apply`` implement closed-world evaluation and PDDL 2.1 add-after-delete
transition semantics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .model import (
    ActionSchema,
    And,
    Atom,
    Domain,
    Equals,
    Forall,
    Formula,
    GroundAtom,
    Not,
    Or,
    PddlError,
    Problem,
    State,
    ValidationError,
    When,
    atom_sort_key,
    is_variable,
)

# Sentinels produced when equality or an empty connective collapses a formula.
_TRUE = ("true",)
_FALSE = ("false",)


class ContractViolation(PddlError):
    """An operation was called outside its stated contract."""


class InapplicableAction(PddlError):
    """``apply`` was called on an action whose precondition does not hold."""


@dataclass(frozen=True)
class ConditionalEffect:
    """One ``when`` branch with a flat condition; empty condition fires always."""

    condition_pos: frozenset[GroundAtom]
    condition_neg: frozenset[GroundAtom]
    add: frozenset[GroundAtom]
    delete: frozenset[GroundAtom]

    def __post_init__(self) -> None:
        if self.add & self.delete:
            raise ValidationError("conditional effect adds and deletes the same atom")

    def fires(self, state: State) -> bool:
        return self.condition_pos <= state and not (self.condition_neg & state)


# A disjunctive precondition clause: (positive atoms, negative atoms); the
# clause is satisfied when any positive member is true or any negative member
# is false. Only the household navigate action produces these.
Clause = tuple[tuple[GroundAtom, ...], tuple[GroundAtom, ...]]


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    positive_preconditions: frozenset[GroundAtom]
    negative_preconditions: frozenset[GroundAtom]
    clauses: tuple[Clause, ...]
    effects: tuple[ConditionalEffect, ...]

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})"

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.name, self.args)


@dataclass(eq=False)
class GroundTask:
    """A fully instantiated planning task.

    Immutable by convention; identity-based equality so tasks can key caches.
    """

    domain: Domain
    problem: Problem
    fluents: tuple[GroundAtom, ...]
    actions: tuple[GroundAction, ...]
    init: State
    goal: Formula
    goal_pos: frozenset[GroundAtom]
    goal_neg: frozenset[GroundAtom]
    _action_index: dict = field(default_factory=dict, repr=False)

    def action(self, name: str, args: tuple[str, ...]) -> GroundAction | None:
        if not self._action_index:
            self._action_index.update({a.key: a for a in self.actions})
        return self._action_index.get((name, args))

    @property
    def fluent_set(self) -> frozenset[GroundAtom]:
        return frozenset(self.fluents)


def _substitute(formula: Formula, binding: dict[str, str]) -> Formula:
    if isinstance(formula, Atom):
        return Atom(formula.pred, tuple(binding.get(t, t) for t in formula.terms))
    if isinstance(formula, Equals):
        return Equals(binding.get(formula.left, formula.left), binding.get(formula.right, formula.right))
    if isinstance(formula, Not):
        return Not(_substitute(formula.body, binding))
    if isinstance(formula, And):
        return And(tuple(_substitute(p, binding) for p in formula.parts))
    if isinstance(formula, Or):
        return Or(tuple(_substitute(p, binding) for p in formula.parts))
    if isinstance(formula, When):
        return When(_substitute(formula.condition, binding), _substitute(formula.effect, binding))
    if isinstance(formula, Forall):
        inner = {k: v for k, v in binding.items() if k not in {var for var, _ in formula.variables}}
        return Forall(formula.variables, _substitute(formula.body, inner))
    raise TypeError(f"not a formula: {formula!r}")


def _instantiate(formula: Formula, binding: dict[str, str], objects_by_type) -> object:
    """Substitute, expand ``forall`` and resolve equalities.

    Returns a formula tree over ground atoms, or a _TRUE/_FALSE sentinel when
    the whole subtree collapses.
    """
    if isinstance(formula, Atom):
        terms = tuple(binding.get(t, t) for t in formula.terms)
        if any(is_variable(t) for t in terms):
            raise ValidationError(f"free variable in {formula!r}")
        return GroundAtom(formula.pred, terms)
    if isinstance(formula, Equals):
        left = binding.get(formula.left, formula.left)
        right = binding.get(formula.right, formula.right)
        if is_variable(left) or is_variable(right):
            raise ValidationError(f"free variable in equality {formula!r}")
        return _TRUE if left == right else _FALSE
    if isinstance(formula, Not):
        inner = _instantiate(formula.body, binding, objects_by_type)
        if inner is _TRUE:
            return _FALSE
        if inner is _FALSE:
            return _TRUE
        return Not(inner)
    if isinstance(formula, And):
        parts = []
        for part in formula.parts:
            inner = _instantiate(part, binding, objects_by_type)
            if inner is _FALSE:
                return _FALSE
            if inner is _TRUE:
                continue
            parts.append(inner)
        if not parts:
            return _TRUE
        return And(tuple(parts))
    if isinstance(formula, Or):
        parts = []
        for part in formula.parts:
            inner = _instantiate(part, binding, objects_by_type)
            if inner is _TRUE:
                return _TRUE
            if inner is _FALSE:
                continue
            parts.append(inner)
        if not parts:
            return _FALSE
        return Or(tuple(parts))
    if isinstance(formula, When):
        condition = _instantiate(formula.condition, binding, objects_by_type)
        if condition is _FALSE:
            return _TRUE  # a branch that can never fire contributes nothing
        effect = _instantiate(formula.effect, binding, objects_by_type)
        if effect is _TRUE:
            return _TRUE
        if condition is _TRUE:
            return effect
        return When(condition, effect)
    if isinstance(formula, Forall):
        expansions = []
        domains = [objects_by_type(typ) for _, typ in formula.variables]
        names = [var for var, _ in formula.variables]
        for combo in itertools.product(*domains):
            inner_binding = dict(binding)
            inner_binding.update(zip(names, combo))
            inner = _instantiate(formula.body, inner_binding, objects_by_type)
            if inner is _FALSE:
                return _FALSE
            if inner is _TRUE:
                continue
            expansions.append(inner)
        if not expansions:
            return _TRUE
        return And(tuple(expansions))
    raise TypeError(f"not a formula: {formula!r}")


def _flatten_condition(tree) -> tuple[set[GroundAtom], set[GroundAtom], list[Clause]]:
    """Split an instantiated precondition into literal lists plus clauses."""
    pos: set[GroundAtom] = set()
    neg: set[GroundAtom] = set()
    clauses: list[Clause] = []

    def visit(node) -> None:
        if isinstance(node, GroundAtom):
            pos.add(node)
            return
        if isinstance(node, Not):
            if isinstance(node.body, GroundAtom):
                neg.add(node.body)
                return
            if isinstance(node.body, Or):
                # De Morgan: not(or ...) over literals is a conjunction.
                for part in node.body.parts:
                    visit(Not(part) if isinstance(part, GroundAtom) else part.body)
                return
            raise ValidationError("unsupported negation nesting in precondition")
        if isinstance(node, And):
            for part in node.parts:
                visit(part)
            return
        if isinstance(node, Or):
            clause_pos: list[GroundAtom] = []
            clause_neg: list[GroundAtom] = []
            for part in node.parts:
                if isinstance(part, GroundAtom):
                    clause_pos.append(part)
                elif isinstance(part, Not) and isinstance(part.body, GroundAtom):
                    clause_neg.append(part.body)
                else:
                    raise ValidationError("disjunction members must be literals")
            clauses.append((tuple(clause_pos), tuple(clause_neg)))
            return
        raise ValidationError(f"unsupported construct in precondition: {node!r}")

    visit(tree)
    return pos, neg, clauses


def _collect_effect_literals(tree, add: set[GroundAtom], delete: set[GroundAtom]) -> None:
    if isinstance(tree, GroundAtom):
        add.add(tree)
        return
    if isinstance(tree, Not) and isinstance(tree.body, GroundAtom):
        delete.add(tree.body)
        return
    if isinstance(tree, And):
        for part in tree.parts:
            _collect_effect_literals(part, add, delete)
        return
    raise ValidationError(f"unsupported construct inside effect: {tree!r}")


def _lower_effects(tree) -> tuple[ConditionalEffect, ...]:
    """Lower an instantiated effect tree into flat conditional effects."""
    unconditional_add: set[GroundAtom] = set()
    unconditional_del: set[GroundAtom] = set()
    conditionals: list[ConditionalEffect] = []

    def visit(node) -> None:
        if node is _TRUE:
            return
        if isinstance(node, (GroundAtom, Not)):
            _collect_effect_literals(node, unconditional_add, unconditional_del)
            return
        if isinstance(node, And):
            for part in node.parts:
                visit(part)
            return
        if isinstance(node, When):
            pos, neg, clauses = _flatten_condition(node.condition)
            if clauses:
                raise ValidationError("disjunctive conditions on effects are unsupported")
            add: set[GroundAtom] = set()
            delete: set[GroundAtom] = set()
            _collect_effect_literals(node.effect, add, delete)
            conditionals.append(
                ConditionalEffect(frozenset(pos), frozenset(neg), frozenset(add), frozenset(delete))
            )
            return
        raise ValidationError(f"unsupported construct in effect: {node!r}")

    visit(tree)
    effects: list[ConditionalEffect] = []
    if unconditional_add or unconditional_del:
        effects.append(
            ConditionalEffect(frozenset(), frozenset(), frozenset(unconditional_add), frozenset(unconditional_del))
        )
    effects.extend(conditionals)
    return tuple(effects)


def ground(domain: Domain, problem: Problem) -> GroundTask:
    """Instantiate all predicates and actions of ``problem`` over its objects."""

    def objects_by_type(wanted: str) -> tuple[str, ...]:
        return problem.objects_of_type(wanted, domain.types)

    fluents: list[GroundAtom] = []
    for schema in domain.predicates:
        domains = [objects_by_type(typ) for _, typ in schema.params]
        for combo in itertools.product(*domains):
            fluents.append(GroundAtom(schema.name, tuple(combo)))
    fluents.sort(key=atom_sort_key)
    fluent_set = frozenset(fluents)

    for atom in problem.init:
        if atom not in fluent_set:
            raise ValidationError(f"init atom {atom} is outside the fluent universe")

    actions: list[GroundAction] = []
    for schema in domain.actions:
        domains = [objects_by_type(typ) for _, typ in schema.params]
        names = [var for var, _ in schema.params]
        for combo in itertools.product(*domains):
            binding = dict(zip(names, combo))
            precondition = _instantiate(schema.precondition, binding, objects_by_type)
            if precondition is _FALSE:
                continue  # statically impossible instantiation
            if precondition is _TRUE:
                pos, neg, clauses = set(), set(), []
            else:
                pos, neg, clauses = _flatten_condition(precondition)
            effect_tree = _instantiate(schema.effect, binding, objects_by_type)
            effects = _lower_effects(effect_tree) if effect_tree is not _TRUE else ()
            actions.append(
                GroundAction(
                    schema.name,
                    tuple(combo),
                    frozenset(pos),
                    frozenset(neg),
                    tuple(clauses),
                    effects,
                )
            )
    actions.sort(key=lambda a: a.key)

    goal_tree = _instantiate(problem.goal, {}, objects_by_type)
    if goal_tree is _TRUE:
        goal_pos: frozenset[GroundAtom] = frozenset()
        goal_neg: frozenset[GroundAtom] = frozenset()
    elif goal_tree is _FALSE:
        raise ValidationError("goal simplifies to false")
    else:
        pos, neg, clauses = _flatten_condition(goal_tree)
        if clauses:
            raise ValidationError("disjunctive goals are unsupported")
        goal_pos, goal_neg = frozenset(pos), frozenset(neg)
    for atom in goal_pos | goal_neg:
        if atom not in fluent_set:
            raise ValidationError(f"goal atom {atom} is outside the fluent universe")

    return GroundTask(
        domain=domain,
        problem=problem,
        fluents=tuple(fluents),
        actions=tuple(actions),
        init=frozenset(problem.init),
        goal=problem.goal,
        goal_pos=goal_pos,
        goal_neg=goal_neg,
    )


def holds(state: State, formula) -> bool:
    """Closed-world truth of a ground formula (or GroundAtom) in ``state``."""
    if isinstance(formula, GroundAtom):
        return formula in state
    if isinstance(formula, Atom):
        if any(is_variable(t) for t in formula.terms):
            raise ContractViolation(f"formula is not ground: {formula!r}")
        return GroundAtom(formula.pred, formula.terms) in state
    if isinstance(formula, Equals):
        if is_variable(formula.left) or is_variable(formula.right):
            raise ContractViolation(f"formula is not ground: {formula!r}")
        return formula.left == formula.right
    if isinstance(formula, Not):
        return not holds(state, formula.body)
    if isinstance(formula, And):
        return all(holds(state, part) for part in formula.parts)
    if isinstance(formula, Or):
        return any(holds(state, part) for part in formula.parts)
    if isinstance(formula, When):
        raise ContractViolation("'when' has no truth value; it belongs to effects")
    if isinstance(formula, Forall):
        raise ContractViolation("'forall' must be expanded by ground() before evaluation")
    raise TypeError(f"not a formula: {formula!r}")


def _clause_satisfied(state: State, clause: Clause) -> bool:
    pos, neg = clause
    return any(a in state for a in pos) or any(a not in state for a in neg)


def applicable(state: State, action: GroundAction) -> bool:
    """True iff the action's flat precondition holds in ``state``."""
    if not action.positive_preconditions <= state:
        return False
    if action.negative_preconditions & state:
        return False
    return all(_clause_satisfied(state, clause) for clause in action.clauses)


def apply(state: State, action: GroundAction) -> State:
    """Transition ``state`` by ``action``; conditions read the pre-state.

    Adds win over deletes when both fire for the same atom.
    """
    if not applicable(state, action):
        raise InapplicableAction(f"{action} is not applicable")
    adds: set[GroundAtom] = set()
    dels: set[GroundAtom] = set()
    for effect in action.effects:
        if effect.fires(state):
            adds.update(effect.add)
            dels.update(effect.delete)
    return frozenset((state - dels) | adds)


def goal_satisfied(task: GroundTask, state: State) -> bool:
    return task.goal_pos <= state and not (task.goal_neg & state)
