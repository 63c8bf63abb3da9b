"""Human-readable rendering of object names for questions, goals and prompts."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping

BW_COLOR_WORDS = {
    "r": "red",
    "g": "green",
    "b": "blue",
    "y": "yellow",
    "p": "purple",
    "o": "orange",
}


def split_indexed(name: str) -> tuple[str, str | None]:
    """Split ``bowl_1`` into (``bowl``, ``1``); names without an index pass through."""
    base, _, index = name.rpartition("_")
    if base and index.isdigit():
        return base, index
    return name, None


def base_counts(names: Iterable[str]) -> dict[str, int]:
    return Counter(split_indexed(name)[0] for name in names)


def render_object(name: str, counts: Mapping[str, int] | None = None, article: str | None = "the") -> str:
    """Render an object name for prose.

    Single-instance indexed names drop their index and take the article
    ("the bowl", "a bowl"); names that share a base keep it ("bowl 2").
    """
    base, index = split_indexed(name)
    base_text = base.replace("_", " ")
    if index is not None and counts is not None and counts.get(base, 0) == 1:
        return f"{article} {base_text}" if article else base_text
    if index is not None:
        return f"{base_text} {index}"
    return f"{article} {base_text}" if article else base_text


def render_block(name: str) -> str:
    return BW_COLOR_WORDS.get(name, name)


def render_column(name: str) -> str:
    return name.upper()
