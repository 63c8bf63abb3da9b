"""Predicate-to-question templating and goal phrasing.

Each domain ships a template table mapping predicate names to yes/no sentence
patterns. Placeholders are ``{0}``/``{1}`` for positional arguments; household
patterns use ``{the_0}``/``{a_0}`` to request an article, which is dropped
when several objects share the base name and an index is needed instead.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from ..naming import base_counts, render_block, render_column, render_object
from ..pddl import GroundAtom, GroundTask, ValidationError

_PLACEHOLDER_RE = re.compile(r"\{(?:(the|a)_)?(\d)\}")

_PATTERN_FILES = {
    "bw": "questions_bw.json",
    "household": "questions_hh.json",
    "probe": "questions_probe.json",
}


class TemplateError(ValidationError):
    """A predicate has no question template."""


def load_patterns(kind: str) -> dict[str, str]:
    try:
        filename = _PATTERN_FILES[kind]
    except KeyError:
        raise TemplateError(f"no question templates for domain kind {kind!r}") from None
    text = resources.files("planloop.data").joinpath(filename).read_text()
    return json.loads(text)


@dataclass(frozen=True)
class QuestionTemplates:
    kind: str
    patterns: Mapping[str, str]
    counts: Mapping[str, int]  # object base name -> multiplicity
    block_typed: frozenset[str] = frozenset()  # objects rendered as colors (bw)
    column_typed: frozenset[str] = frozenset()

    @staticmethod
    def for_task(task: GroundTask, kind: str) -> "QuestionTemplates":
        patterns = load_patterns(kind)
        names = [name for name, _ in task.problem.objects]
        blocks: set[str] = set()
        columns: set[str] = set()
        if kind == "bw":
            types = task.domain.types
            for name, typ in task.problem.objects:
                if types.is_subtype(typ, "block"):
                    blocks.add(name)
                elif types.is_subtype(typ, "column"):
                    columns.add(name)
        return QuestionTemplates(
            kind=kind,
            patterns=patterns,
            counts=base_counts(names),
            block_typed=frozenset(blocks),
            column_typed=frozenset(columns),
        )

    def render_term(self, name: str, article: str | None) -> str:
        if name in self.block_typed:
            return render_block(name)
        if name in self.column_typed:
            return render_column(name)
        return render_object(name, self.counts, article=article)


def atom_to_question(atom: GroundAtom, templates: QuestionTemplates) -> str:
    """Instantiate the predicate's template with human-readable object names."""
    pattern = templates.patterns.get(atom.pred)
    if pattern is None:
        raise TemplateError(f"no question template for predicate {atom.pred!r}")

    def substitute(match: re.Match) -> str:
        article = match.group(1)
        index = int(match.group(2))
        if index >= len(atom.args):
            raise TemplateError(f"template for {atom.pred!r} references argument {index}")
        return templates.render_term(atom.args[index], article)

    return _PLACEHOLDER_RE.sub(substitute, pattern)


def goal_text(task: GroundTask, templates: QuestionTemplates) -> str:
    """Deterministic English statement of the task goal."""
    sentences = []
    for atom in sorted(task.goal_pos, key=lambda a: (a.pred, a.args)):
        sentences.append(_goal_sentence(atom, templates, positive=True))
    for atom in sorted(task.goal_neg, key=lambda a: (a.pred, a.args)):
        sentences.append(_goal_sentence(atom, templates, positive=False))
    return " ".join(sentences)


def _goal_sentence(atom: GroundAtom, templates: QuestionTemplates, *, positive: bool) -> str:
    names = [templates.render_term(arg, "the") for arg in atom.args]
    if templates.kind == "bw":
        if atom.pred == "incolumn":
            return f"The {names[0]} block must end up in column {names[1]}."
        if atom.pred == "on":
            return f"The {names[0]} block must rest on top of the {names[1]} block."
        if atom.pred == "clear":
            return f"The {names[0]} block must have nothing on top of it."
    else:
        subject = names[0][0].upper() + names[0][1:]
        if atom.pred == "ontop":
            return f"{subject} must {'be' if positive else 'not be'} on top of {names[1]}."
        if atom.pred == "inside":
            return f"{subject} must {'be' if positive else 'not be'} inside {names[1]}."
        if atom.pred == "nextto":
            return f"{subject} must {'be' if positive else 'not be'} next to {names[1]}."
        if atom.pred == "open":
            return f"{subject} must be {'open' if positive else 'closed'}."
        if atom.pred == "holding":
            return f"The agent must {'be' if positive else 'not be'} holding {names[0]}."
        if atom.pred == "reachable":
            return f"{subject} must {'be' if positive else 'not be'} within reach."
        if atom.pred == "lit":
            return f"{subject} must {'be' if positive else 'not be'} lit."
    literal = str(atom) if positive else f"(not {atom})"
    return f"The condition {literal} must hold."
