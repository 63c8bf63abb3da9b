"""PDDL fragment: parsing, printing, grounding and transition semantics."""

from .ground import (
    Clause,
    ConditionalEffect,
    ContractViolation,
    GroundAction,
    GroundTask,
    InapplicableAction,
    applicable,
    apply,
    goal_satisfied,
    ground,
    holds,
)
from .model import (
    ROOT_TYPE,
    SUPPORTED_REQUIREMENTS,
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
    ParseError,
    PddlError,
    PredicateSchema,
    Problem,
    State,
    TypeHierarchy,
    ValidationError,
    When,
    atom_sort_key,
    canonical_name,
    sorted_atoms,
)
from .parser import parse_domain, parse_problem, tokenize
from .writer import domain_to_pddl, formula_to_pddl, problem_to_pddl

__all__ = [
    "ROOT_TYPE",
    "SUPPORTED_REQUIREMENTS",
    "ActionSchema",
    "And",
    "Atom",
    "Clause",
    "ConditionalEffect",
    "ContractViolation",
    "Domain",
    "Equals",
    "Forall",
    "Formula",
    "GroundAction",
    "GroundAtom",
    "GroundTask",
    "InapplicableAction",
    "Not",
    "Or",
    "ParseError",
    "PddlError",
    "PredicateSchema",
    "Problem",
    "State",
    "TypeHierarchy",
    "ValidationError",
    "When",
    "applicable",
    "apply",
    "atom_sort_key",
    "canonical_name",
    "domain_to_pddl",
    "formula_to_pddl",
    "goal_satisfied",
    "ground",
    "holds",
    "parse_domain",
    "parse_problem",
    "problem_to_pddl",
    "sorted_atoms",
    "tokenize",
]
