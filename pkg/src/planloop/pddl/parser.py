"""Recursive-descent parser for the supported PDDL fragment.

Identifiers are case-insensitive and canonicalized to lowercase. Comments run
from ``;`` to end of line. Errors carry line/column and say what was expected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

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
    PredicateSchema,
    Problem,
    TypeHierarchy,
    ValidationError,
    When,
    canonical_name,
    is_variable,
)

_WORD_RE = re.compile(r"[^\s();]+")


@dataclass(frozen=True)
class Token:
    text: str  # '(' / ')' or a lowercased word
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if ch.isspace():
            i += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        if ch in "()":
            tokens.append(Token(ch, line, col))
            i += 1
            continue
        match = _WORD_RE.match(text, i)
        if not match:
            raise ParseError(f"unexpected character {ch!r}", line, col)
        tokens.append(Token(match.group(0).lower(), line, col))
        i = match.end()
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    def peek(self) -> Token | None:
        if self._pos < len(self._tokens):
            return self._tokens[self._pos]
        return None

    def next(self, expected: str) -> Token:
        token = self.peek()
        if token is None:
            last = self._tokens[-1] if self._tokens else Token("", 1, 1)
            raise ParseError(f"expected {expected}, found end of input", last.line, last.column)
        self._pos += 1
        return token

    def expect(self, literal: str) -> Token:
        token = self.next(repr(literal))
        if token.text != literal:
            raise ParseError(f"expected {literal!r}, found {token.text!r}", token.line, token.column)
        return token

    def expect_word(self, expected: str = "a name") -> Token:
        token = self.next(expected)
        if token.text in "()":
            raise ParseError(f"expected {expected}, found {token.text!r}", token.line, token.column)
        return token

    def at_end(self) -> bool:
        return self._pos >= len(self._tokens)


def _name_at(token: Token, *, what: str) -> str:
    try:
        return canonical_name(token.text, what=what)
    except ValidationError as exc:
        raise ParseError(str(exc), token.line, token.column) from None


def _parse_typed_list(stream: _Stream, *, variables: bool, what: str) -> list[tuple[str, str]]:
    """Parse ``a b - t c d - u e`` until the closing paren (not consumed).

    Untyped trailing entries default to the root type.
    """
    result: list[tuple[str, str]] = []
    pending: list[str] = []
    while True:
        token = stream.peek()
        if token is None:
            raise ParseError("expected ')' to close typed list", 0, 0)
        if token.text == ")":
            result.extend((name, ROOT_TYPE) for name in pending)
            return result
        if token.text == "-":
            stream.next("'-'")
            type_token = stream.expect_word("a type name")
            type_name = _name_at(type_token, what="type name")
            if not pending:
                raise ParseError("dangling '-' in typed list", token.line, token.column)
            result.extend((name, type_name) for name in pending)
            pending = []
            continue
        word = stream.expect_word(what)
        if variables:
            if not word.text.startswith("?"):
                raise ParseError(f"expected a variable, found {word.text!r}", word.line, word.column)
            pending.append("?" + _name_at(Token(word.text[1:], word.line, word.column), what="variable"))
        else:
            if word.text.startswith("?"):
                raise ParseError(f"expected a name, found variable {word.text!r}", word.line, word.column)
            pending.append(_name_at(word, what=what))


class _FormulaContext:
    """Scope and legality flags carried while parsing a formula."""

    def __init__(
        self,
        domain_predicates: dict[str, PredicateSchema],
        types: TypeHierarchy,
        bound: dict[str, str],
        objects: dict[str, str] | None,
        *,
        allow_when: bool,
        allow_or: bool,
        effect_context: bool,
    ):
        self.predicates = domain_predicates
        self.types = types
        self.bound = bound
        self.objects = objects  # object -> type, None while parsing a domain
        self.allow_when = allow_when
        self.allow_or = allow_or
        self.effect_context = effect_context

    def with_bound(self, extra: dict[str, str]) -> "_FormulaContext":
        merged = dict(self.bound)
        merged.update(extra)
        clone = _FormulaContext(
            self.predicates,
            self.types,
            merged,
            self.objects,
            allow_when=self.allow_when,
            allow_or=self.allow_or,
            effect_context=self.effect_context,
        )
        return clone

    def term_type(self, term: str, token: Token) -> str:
        if is_variable(term):
            if term not in self.bound:
                raise ParseError(f"unbound variable {term!r}", token.line, token.column)
            return self.bound[term]
        if self.objects is None:
            raise ParseError(f"object name {term!r} not allowed in a domain body", token.line, token.column)
        if term not in self.objects:
            raise ParseError(f"undeclared object {term!r}", token.line, token.column)
        return self.objects[term]


def _parse_term(stream: _Stream, context: _FormulaContext) -> tuple[str, Token]:
    token = stream.expect_word("a term")
    if token.text.startswith("?"):
        name = "?" + _name_at(Token(token.text[1:], token.line, token.column), what="variable")
    else:
        name = _name_at(token, what="object name")
    return name, token


def _parse_formula(stream: _Stream, context: _FormulaContext) -> Formula:
    open_token = stream.expect("(")
    head = stream.next("a formula head")
    if head.text == ")":
        raise ParseError("empty formula", open_token.line, open_token.column)

    if head.text == "and":
        parts = []
        while stream.peek() is not None and stream.peek().text != ")":
            parts.append(_parse_formula(stream, context))
        stream.expect(")")
        return And(tuple(parts))

    if head.text == "or":
        if not context.allow_or:
            raise ParseError("disjunction is not allowed here", head.line, head.column)
        parts = []
        while stream.peek() is not None and stream.peek().text != ")":
            parts.append(_parse_formula(stream, context))
        stream.expect(")")
        return Or(tuple(parts))

    if head.text == "not":
        body = _parse_formula(stream, context)
        stream.expect(")")
        if context.effect_context and not isinstance(body, Atom):
            raise ParseError("negation in effects must apply directly to an atom", head.line, head.column)
        return Not(body)

    if head.text == "forall":
        stream.expect("(")
        variables = _parse_typed_list(stream, variables=True, what="a variable")
        stream.expect(")")
        for _, type_name in variables:
            if not context.types.is_declared(type_name):
                raise ParseError(f"undeclared type {type_name!r}", head.line, head.column)
        body = _parse_formula(stream, context.with_bound(dict(variables)))
        stream.expect(")")
        return Forall(tuple(variables), body)

    if head.text == "when":
        if not context.allow_when:
            raise ParseError("'when' is only allowed inside effects", head.line, head.column)
        condition_context = _FormulaContext(
            context.predicates,
            context.types,
            context.bound,
            context.objects,
            allow_when=False,
            allow_or=False,
            effect_context=False,
        )
        condition = _parse_formula(stream, condition_context)
        effect = _parse_formula(stream, context)
        stream.expect(")")
        return When(condition, effect)

    if head.text == "=":
        left, _ = _parse_term(stream, context)
        right, _ = _parse_term(stream, context)
        stream.expect(")")
        context.term_type(left, head)
        context.term_type(right, head)
        return Equals(left, right)

    # Plain atom.
    pred = _name_at(head, what="predicate name")
    if pred not in context.predicates:
        raise ParseError(f"undeclared predicate {pred!r}", head.line, head.column)
    schema = context.predicates[pred]
    terms: list[str] = []
    while stream.peek() is not None and stream.peek().text != ")":
        term, token = _parse_term(stream, context)
        index = len(terms)
        if index >= schema.arity:
            raise ParseError(
                f"predicate {pred!r} takes {schema.arity} arguments", token.line, token.column
            )
        actual = context.term_type(term, token)
        expected = schema.params[index][1]
        if not context.types.is_subtype(actual, expected):
            raise ParseError(
                f"argument {index + 1} of {pred!r} must be of type {expected!r}, got {actual!r}",
                token.line,
                token.column,
            )
        terms.append(term)
    closing = stream.expect(")")
    if len(terms) != schema.arity:
        raise ParseError(
            f"predicate {pred!r} takes {schema.arity} arguments, got {len(terms)}",
            closing.line,
            closing.column,
        )
    return Atom(pred, tuple(terms))


def parse_domain(text: str) -> Domain:
    """Parse a domain definition from PDDL source text."""
    stream = _Stream(tokenize(text))
    stream.expect("(")
    define = stream.expect_word("'define'")
    if define.text != "define":
        raise ParseError(f"expected 'define', found {define.text!r}", define.line, define.column)
    stream.expect("(")
    kind = stream.expect_word("'domain'")
    if kind.text != "domain":
        raise ParseError(f"expected 'domain', found {kind.text!r}", kind.line, kind.column)
    name = _name_at(stream.expect_word("a domain name"), what="domain name")
    stream.expect(")")

    requirements: set[str] = set()
    types = TypeHierarchy()
    predicates: list[PredicateSchema] = []
    actions: list[ActionSchema] = []

    while True:
        token = stream.next("a domain section or ')'")
        if token.text == ")":
            break
        if token.text != "(":
            raise ParseError(f"expected '(', found {token.text!r}", token.line, token.column)
        section = stream.expect_word("a section keyword")

        if section.text == ":requirements":
            while stream.peek() is not None and stream.peek().text != ")":
                req = stream.expect_word("a requirement flag")
                if req.text not in SUPPORTED_REQUIREMENTS:
                    raise ParseError(f"unsupported requirement {req.text!r}", req.line, req.column)
                requirements.add(req.text)
            stream.expect(")")
            continue

        if section.text == ":types":
            declared = _parse_typed_list(stream, variables=False, what="a type name")
            stream.expect(")")
            try:
                types = TypeHierarchy(tuple(declared))
            except ValidationError as exc:
                raise ParseError(str(exc), section.line, section.column) from None
            for _, parent in declared:
                if parent != ROOT_TYPE and not types.is_declared(parent):
                    raise ParseError(f"undeclared parent type {parent!r}", section.line, section.column)
            continue

        if section.text == ":predicates":
            while stream.peek() is not None and stream.peek().text != ")":
                stream.expect("(")
                pred_name = _name_at(stream.expect_word("a predicate name"), what="predicate name")
                params = _parse_typed_list(stream, variables=True, what="a variable")
                stream.expect(")")
                for _, type_name in params:
                    if not types.is_declared(type_name):
                        raise ParseError(f"undeclared type {type_name!r}", section.line, section.column)
                if any(schema.name == pred_name for schema in predicates):
                    raise ParseError(f"predicate {pred_name!r} declared twice", section.line, section.column)
                try:
                    predicates.append(PredicateSchema(pred_name, tuple(params)))
                except ValidationError as exc:
                    raise ParseError(str(exc), section.line, section.column) from None
            stream.expect(")")
            continue

        if section.text == ":action":
            action_name = _name_at(stream.expect_word("an action name"), what="action name")
            if any(schema.name == action_name for schema in actions):
                raise ParseError(f"action {action_name!r} declared twice", section.line, section.column)
            keyword = stream.expect_word("':parameters'")
            if keyword.text != ":parameters":
                raise ParseError(f"expected ':parameters', found {keyword.text!r}", keyword.line, keyword.column)
            stream.expect("(")
            params = _parse_typed_list(stream, variables=True, what="a variable")
            stream.expect(")")
            for _, type_name in params:
                if not types.is_declared(type_name):
                    raise ParseError(f"undeclared type {type_name!r}", keyword.line, keyword.column)
            if len({v for v, _ in params}) != len(params):
                raise ParseError(f"duplicate parameter in action {action_name!r}", keyword.line, keyword.column)

            predicate_map = {schema.name: schema for schema in predicates}
            bound = dict(params)
            precondition: Formula = And(())
            effect: Formula = And(())
            while stream.peek() is not None and stream.peek().text != ")":
                keyword = stream.expect_word("':precondition' or ':effect'")
                if keyword.text == ":precondition":
                    context = _FormulaContext(
                        predicate_map, types, bound, None,
                        allow_when=False, allow_or=True, effect_context=False,
                    )
                    precondition = _parse_formula(stream, context)
                elif keyword.text == ":effect":
                    context = _FormulaContext(
                        predicate_map, types, bound, None,
                        allow_when=True, allow_or=False, effect_context=True,
                    )
                    effect = _parse_formula(stream, context)
                else:
                    raise ParseError(
                        f"expected ':precondition' or ':effect', found {keyword.text!r}",
                        keyword.line,
                        keyword.column,
                    )
            stream.expect(")")
            actions.append(ActionSchema(action_name, tuple(params), precondition, effect))
            continue

        raise ParseError(f"unknown domain section {section.text!r}", section.line, section.column)

    if not stream.at_end():
        extra = stream.peek()
        raise ParseError(f"unexpected trailing token {extra.text!r}", extra.line, extra.column)
    return Domain(name, frozenset(requirements), types, tuple(predicates), tuple(actions))


def _ground_atom_from(formula: Formula, objects: dict[str, str]) -> GroundAtom:
    assert isinstance(formula, Atom)
    return GroundAtom(formula.pred, formula.terms)


def parse_problem(text: str, domain: Domain) -> Problem:
    """Parse a problem definition and type-check it against ``domain``."""
    stream = _Stream(tokenize(text))
    stream.expect("(")
    define = stream.expect_word("'define'")
    if define.text != "define":
        raise ParseError(f"expected 'define', found {define.text!r}", define.line, define.column)
    stream.expect("(")
    kind = stream.expect_word("'problem'")
    if kind.text != "problem":
        raise ParseError(f"expected 'problem', found {kind.text!r}", kind.line, kind.column)
    name = _name_at(stream.expect_word("a problem name"), what="problem name")
    stream.expect(")")

    domain_name: str | None = None
    objects: list[tuple[str, str]] = []
    init: set[GroundAtom] = set()
    goal: Formula | None = None
    predicate_map = {schema.name: schema for schema in domain.predicates}

    while True:
        token = stream.next("a problem section or ')'")
        if token.text == ")":
            break
        if token.text != "(":
            raise ParseError(f"expected '(', found {token.text!r}", token.line, token.column)
        section = stream.expect_word("a section keyword")

        if section.text == ":domain":
            domain_name = _name_at(stream.expect_word("a domain name"), what="domain name")
            stream.expect(")")
            if domain_name != domain.name:
                raise ParseError(
                    f"problem references domain {domain_name!r}, expected {domain.name!r}",
                    section.line,
                    section.column,
                )
            continue

        if section.text == ":objects":
            declared = _parse_typed_list(stream, variables=False, what="an object name")
            stream.expect(")")
            for obj, type_name in declared:
                if not domain.types.is_declared(type_name):
                    raise ParseError(f"undeclared type {type_name!r}", section.line, section.column)
                if any(obj == existing for existing, _ in objects):
                    raise ParseError(f"object {obj!r} declared twice", section.line, section.column)
                objects.append((obj, type_name))
            continue

        if section.text == ":init":
            object_map = dict(objects)
            context = _FormulaContext(
                predicate_map, domain.types, {}, object_map,
                allow_when=False, allow_or=False, effect_context=False,
            )
            while stream.peek() is not None and stream.peek().text != ")":
                literal = _parse_formula(stream, context)
                if isinstance(literal, Atom):
                    init.add(_ground_atom_from(literal, object_map))
                elif isinstance(literal, Not) and isinstance(literal.body, Atom):
                    # Closed world: explicit negated init literals are dropped.
                    pass
                else:
                    raise ParseError("init entries must be literals", section.line, section.column)
            stream.expect(")")
            continue

        if section.text == ":goal":
            context = _FormulaContext(
                predicate_map, domain.types, {}, dict(objects),
                allow_when=False, allow_or=False, effect_context=False,
            )
            goal = _parse_formula(stream, context)
            stream.expect(")")
            continue

        raise ParseError(f"unknown problem section {section.text!r}", section.line, section.column)

    if not stream.at_end():
        extra = stream.peek()
        raise ParseError(f"unexpected trailing token {extra.text!r}", extra.line, extra.column)
    if domain_name is None:
        raise ParseError("problem is missing a (:domain ...) section", 1, 1)
    if goal is None:
        goal = And(())
    return Problem(name, domain_name, tuple(objects), frozenset(init), goal)
