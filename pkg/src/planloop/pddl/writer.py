"""Pretty-printer emitting the same PDDL fragment the parser accepts.

Output is canonical (lowercased, fixed indentation, no comments); parsing the
printed text reproduces the original structures exactly.
"""

from __future__ import annotations

from .model import (
    ROOT_TYPE,
    And,
    Atom,
    Domain,
    Equals,
    Forall,
    Formula,
    GroundAtom,
    Not,
    Or,
    Problem,
    When,
    sorted_atoms,
)


def _typed_list(pairs: tuple[tuple[str, str], ...]) -> str:
    chunks: list[str] = []
    group: list[str] = []
    group_type: str | None = None
    for name, typ in pairs:
        if group_type is None:
            group_type = typ
        if typ != group_type:
            chunks.append(f"{' '.join(group)} - {group_type}")
            group = []
            group_type = typ
        group.append(name)
    if group:
        chunks.append(f"{' '.join(group)} - {group_type}")
    return " ".join(chunks)


def formula_to_pddl(formula: Formula, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(formula, Atom):
        body = " ".join(formula.terms)
        return f"{pad}({formula.pred}{' ' + body if body else ''})"
    if isinstance(formula, Equals):
        return f"{pad}(= {formula.left} {formula.right})"
    if isinstance(formula, Not):
        inner = formula_to_pddl(formula.body, 0)
        return f"{pad}(not {inner})"
    if isinstance(formula, (And, Or)):
        head = "and" if isinstance(formula, And) else "or"
        if not formula.parts:
            return f"{pad}({head})"
        inner = "\n".join(formula_to_pddl(part, indent + 1) for part in formula.parts)
        return f"{pad}({head}\n{inner}\n{pad})"
    if isinstance(formula, Forall):
        inner = formula_to_pddl(formula.body, indent + 1)
        return f"{pad}(forall ({_typed_list(formula.variables)})\n{inner}\n{pad})"
    if isinstance(formula, When):
        condition = formula_to_pddl(formula.condition, indent + 1)
        effect = formula_to_pddl(formula.effect, indent + 1)
        return f"{pad}(when\n{condition}\n{effect}\n{pad})"
    raise TypeError(f"not a formula: {formula!r}")


def domain_to_pddl(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(sorted(domain.requirements))})")
    if domain.types.parents:
        lines.append(f"  (:types {_typed_list(domain.types.parents)})")
    if domain.predicates:
        lines.append("  (:predicates")
        for schema in domain.predicates:
            params = " ".join(f"{var} - {typ}" for var, typ in schema.params)
            lines.append(f"    ({schema.name}{' ' + params if params else ''})")
        lines.append("  )")
    for action in domain.actions:
        lines.append(f"  (:action {action.name}")
        lines.append(f"    :parameters ({_typed_list(action.params)})")
        lines.append("    :precondition")
        lines.append(formula_to_pddl(action.precondition, 3))
        lines.append("    :effect")
        lines.append(formula_to_pddl(action.effect, 3))
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _init_atom(atom: GroundAtom) -> str:
    return f"    {atom}"


def problem_to_pddl(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})"]
    lines.append(f"  (:domain {problem.domain_name})")
    if problem.objects:
        lines.append(f"  (:objects {_typed_list(problem.objects)})")
    lines.append("  (:init")
    for atom in sorted_atoms(problem.init):
        lines.append(_init_atom(atom))
    lines.append("  )")
    lines.append("  (:goal")
    lines.append(formula_to_pddl(problem.goal, 2))
    lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"
