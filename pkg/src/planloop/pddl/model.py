"""Core PDDL data model: identifiers, types, formulas, schemas, domains, problems.

The supported fragment is typed STRIPS plus negative preconditions,
conditional effects and equality. Disjunctions are additionally allowed in
preconditions and goal-free contexts because the household domain needs them
in one action's precondition. Everything is immutable after construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

ROOT_TYPE = "object"

SUPPORTED_REQUIREMENTS = frozenset(
    {
        ":strips",
        ":typing",
        ":negative-preconditions",
        ":conditional-effects",
        ":equality",
    }
)

_IDENT_RE = re.compile(r"[a-z][a-z0-9_-]*\Z")


class PddlError(Exception):
    """Base class for all PDDL-layer failures."""


class ParseError(PddlError):
    """Syntax error with source position and the token that was expected."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class ValidationError(PddlError):
    """Structurally well-formed input that violates a semantic rule."""


def canonical_name(text: str, *, what: str = "identifier") -> str:
    """Lowercase an identifier and validate it against the PDDL name grammar."""
    name = text.lower()
    if not _IDENT_RE.match(name):
        raise ValidationError(f"invalid {what} {text!r}")
    return name


def is_variable(term: str) -> bool:
    return term.startswith("?")


@dataclass(frozen=True)
class TypeHierarchy:
    """Map from each declared type to its parent; ``object`` is the implicit root."""

    parents: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for name, parent in self.parents:
            if name == ROOT_TYPE:
                raise ValidationError("the root type cannot be redeclared")
            if name in seen:
                raise ValidationError(f"type {name!r} declared twice")
            seen.add(name)
        for name in seen:
            # Walk to the root; a revisited node means a cycle.
            visited = {name}
            current = self.parent_of(name)
            while current != ROOT_TYPE:
                if current in visited:
                    raise ValidationError(f"type cycle through {name!r}")
                visited.add(current)
                current = self.parent_of(current)

    def parent_of(self, name: str) -> str:
        for child, parent in self.parents:
            if child == name:
                return parent
        if name == ROOT_TYPE:
            return ROOT_TYPE
        raise ValidationError(f"unknown type {name!r}")

    @property
    def declared(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.parents)

    def is_declared(self, name: str) -> bool:
        return name == ROOT_TYPE or any(name == child for child, _ in self.parents)

    def is_subtype(self, name: str, ancestor: str) -> bool:
        """Reflexive-transitive subtype test."""
        if ancestor == ROOT_TYPE:
            return self.is_declared(name)
        current = name
        while True:
            if current == ancestor:
                return True
            if current == ROOT_TYPE:
                return False
            current = self.parent_of(current)


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: tuple[tuple[str, str], ...]  # (variable, type) pairs

    def __post_init__(self) -> None:
        variables = [v for v, _ in self.params]
        if len(set(variables)) != len(variables):
            raise ValidationError(f"duplicate parameter in predicate {self.name!r}")

    @property
    def arity(self) -> int:
        return len(self.params)


# --- Formula tree -----------------------------------------------------------
#
# Terms are either variables (leading '?') or object names. ``When`` is legal
# only inside effects; ``Or`` only inside preconditions.


@dataclass(frozen=True)
class Atom:
    pred: str
    terms: tuple[str, ...]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Forall:
    variables: tuple[tuple[str, str], ...]
    body: "Formula"


@dataclass(frozen=True)
class When:
    condition: "Formula"
    effect: "Formula"


@dataclass(frozen=True)
class Equals:
    left: str
    right: str


Formula = Union[Atom, Not, And, Or, Forall, When, Equals]


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: Formula
    effect: Formula


@dataclass(frozen=True)
class GroundAtom:
    """A predicate applied to object names; the unit of state and questioning."""

    pred: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        if not self.args:
            return f"({self.pred})"
        return f"({self.pred} {' '.join(self.args)})"

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.pred, self.args)

    @property
    def is_reflexive(self) -> bool:
        """True when the atom repeats one object in every slot, e.g. (on y y)."""
        return len(self.args) >= 2 and len(set(self.args)) == 1


State = frozenset  # frozenset[GroundAtom]; closed world: absent means false.


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: frozenset[str]
    types: TypeHierarchy
    predicates: tuple[PredicateSchema, ...]
    actions: tuple[ActionSchema, ...]

    def predicate(self, name: str) -> PredicateSchema:
        for schema in self.predicates:
            if schema.name == name:
                return schema
        raise ValidationError(f"undeclared predicate {name!r}")

    def has_predicate(self, name: str) -> bool:
        return any(schema.name == name for schema in self.predicates)

    def action(self, name: str) -> ActionSchema:
        for schema in self.actions:
            if schema.name == name:
                return schema
        raise ValidationError(f"undeclared action {name!r}")


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]  # (object, type) pairs
    init: frozenset[GroundAtom]
    goal: Formula

    def objects_of_type(self, wanted: str, types: TypeHierarchy) -> tuple[str, ...]:
        return tuple(
            name for name, typ in self.objects if types.is_subtype(typ, wanted)
        )

    def type_of(self, obj: str) -> str:
        for name, typ in self.objects:
            if name == obj:
                return typ
        raise ValidationError(f"undeclared object {obj!r}")


def atom_sort_key(atom: GroundAtom) -> tuple[str, tuple[str, ...]]:
    return (atom.pred, atom.args)


def sorted_atoms(atoms: Iterable[GroundAtom]) -> tuple[GroundAtom, ...]:
    return tuple(sorted(atoms, key=atom_sort_key))
