"""Prompt template loading and chat-message assembly.

Templates live as text files with <system>/<user> role markers and literal
placeholders ({image}, {goal_string}, {previous_actions}, {priviledged_info});
substitution is plain string replacement because the templates contain JSON
braces of their own.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

_ROLE_RE = re.compile(r"<(system|user)>\s*\n(.*?)\n\s*</\1>", re.DOTALL)


def load_prompt(setting: str, kind: str, cot: bool, base_dir: str | None = None) -> str:
    """Load a prompt template, from a directory override or the packaged set."""
    short = {"bw": "bw", "household": "hh", "probe": "hh"}[kind]
    name = f"{setting}_{short}{'_cot' if cot else ''}.txt"
    if base_dir is not None:
        from pathlib import Path

        return (Path(base_dir) / name).read_text()
    return resources.files("planloop.data.prompts").joinpath(name).read_text()


def split_roles(template: str) -> list[tuple[str, str]]:
    """Split a template into (role, text) message pairs."""
    messages = [(m.group(1), m.group(2)) for m in _ROLE_RE.finditer(template)]
    if not messages:
        raise ValueError("prompt template has no <system>/<user> sections")
    return messages


@dataclass(frozen=True)
class PromptMessage:
    role: str
    text: str
    image_ref: str | None = None  # set when the {image} slot carries an image


def fill_template(
    template: str,
    *,
    image_text: str,
    image_ref: str | None = None,
    goal_string: str = "",
    previous_actions: str = "",
    privileged_info: str = "",
    question: str | None = None,
) -> list[PromptMessage]:
    """Instantiate a template into chat messages.

    When no image attachment is available the scene description substitutes
    for the {image} slot. A question, when given, is appended to the final
    user message after the "Question:" keyword.
    """
    messages: list[PromptMessage] = []
    for role, text in split_roles(template):
        has_image = "{image}" in text
        text = text.replace("{image}", image_text)
        text = text.replace("{goal_string}", goal_string)
        text = text.replace("{previous_actions}", previous_actions or "None.")
        text = text.replace("{priviledged_info}", privileged_info or "None.")
        messages.append(PromptMessage(role, text, image_ref if has_image else None))
    if question is not None:
        last = messages[-1]
        messages[-1] = PromptMessage(last.role, f"{last.text}\n\nQuestion: {question}", last.image_ref)
    return messages


def previous_actions_text(history: list[tuple[str, bool]]) -> str:
    """Numbered feedback lines with per-action success notes."""
    if not history:
        return "None."
    lines = [
        f"{i + 1}. {action}: {'succeeded' if executed else 'failed'}"
        for i, (action, executed) in enumerate(history)
    ]
    return "\n".join(lines)
