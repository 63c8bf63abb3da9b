"""Parsing of model outputs: yes/no verdicts and JSON plans."""

from __future__ import annotations

import json
import re

from ..pddl import Domain

YES = "yes"
NO = "no"
UNPARSABLE = "unparsable"

_ANSWER_SPAN_RE = re.compile(r"<answer>(.*?)</answer>", re.IGNORECASE | re.DOTALL)
_LEADING_JUNK = " \t\r\n\"'`*_.,:;!()[]-"


def parse_yes_no(text: str, cot: bool = False) -> str:
    """Extract a yes/no verdict.

    Plain mode takes the leading token after trimming punctuation; chain-of-
    thought mode reads the last <answer>...</answer> span first.
    """
    candidate = text
    if cot:
        spans = _ANSWER_SPAN_RE.findall(text)
        if not spans:
            return UNPARSABLE
        candidate = spans[-1]
    stripped = candidate.strip(_LEADING_JUNK).lower()
    if stripped.startswith("yes") and not stripped[3:4].isalpha():
        return YES
    if stripped.startswith("no") and not stripped[2:3].isalpha():
        return NO
    return UNPARSABLE


def _balanced_json_objects(text: str):
    """Yield each top-level {...} span in the text, tolerating junk around it."""
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def parse_plan_json(text: str, domain: Domain | None = None) -> list[tuple[str, tuple[str, ...]]] | None:
    """Parse a plan from model output; None when nothing parses.

    Accepts the first JSON object found (markdown fences are fine). Each plan
    entry carries ``action`` plus ``parameters`` as either an ordered list or
    a name-to-value map; map entries are reordered to the action schema's
    parameter order when the domain is supplied. ``explanation`` fields are
    ignored.
    """
    for span in _balanced_json_objects(text):
        try:
            data = json.loads(span)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict) or "plan" not in data:
            continue
        entries = data["plan"]
        if not isinstance(entries, list):
            continue
        plan: list[tuple[str, tuple[str, ...]]] = []
        ok = True
        for entry in entries:
            if not isinstance(entry, dict) or "action" not in entry:
                ok = False
                break
            name = str(entry["action"]).strip().lower()
            raw_params = entry.get("parameters", [])
            if isinstance(raw_params, dict):
                values = _ordered_map_values(name, raw_params, domain)
            elif isinstance(raw_params, list):
                values = [str(v).strip().lower() for v in raw_params]
            else:
                ok = False
                break
            plan.append((name, tuple(values)))
        if ok:
            return plan
    return None


def _ordered_map_values(action: str, params: dict, domain: Domain | None) -> list[str]:
    items = {str(k).strip().lower(): str(v).strip().lower() for k, v in params.items()}
    if domain is not None:
        for schema in domain.actions:
            if schema.name != action:
                continue
            # Keys may be the schema's variable names or, as the prompts
            # phrase them, the parameter type names.
            by_variable = [var.lstrip("?") for var, _ in schema.params]
            if set(by_variable) == set(items):
                return [items[key] for key in by_variable]
            by_type = [typ for _, typ in schema.params]
            if len(set(by_type)) == len(by_type) and set(by_type) == set(items):
                return [items[key] for key in by_type]
            break
    return list(items.values())  # insertion order as a fallback
