"""Versioned prompt templates, stored as package data and used byte-for-byte."""

from __future__ import annotations

import functools
import hashlib
from importlib import resources

PROMPT_VERSION = "1"

DESCRIBE_VARIANTS = {
    "default": "describe_system.txt",
    "50words": "describe_system_50words.txt",
    "200words": "describe_system_200words.txt",
    "rich": "describe_system_rich.txt",
    "24words_qa": "describe_system_24words_qa.txt",
}
# Plain captioning variants get the image only; the rest also see the QA pair.
VARIANTS_WITH_QA = frozenset({"default", "24words_qa"})

# "system" sends the Yes/No instruction as a system turn; "inline" folds it into the question.
RELEVANCE_PHRASINGS = {
    "system": ("relevance_system.txt", "relevance_user.txt"),
    "inline": (None, "relevance_user_short.txt"),
}


@functools.lru_cache(maxsize=None)
def load(name: str) -> str:
    return (resources.files("tpikit.llm") / "prompts" / name).read_bytes().decode("utf-8")


def fill(template: str, **values: str) -> str:
    """Substitute ``{key}`` placeholders without touching other braces."""
    for key, value in values.items():
        template = template.replace("{" + key + "}", value)
    return template


def asset_names() -> list[str]:
    names = set(DESCRIBE_VARIANTS.values()) | {"describe_user.txt", "augment_system.txt", "augment_user.txt"}
    for sys_name, user_name in RELEVANCE_PHRASINGS.values():
        names.update(n for n in (sys_name, user_name) if n)
    return sorted(names)


def fingerprints() -> dict[str, str]:
    """sha256 of every asset, for run metadata."""
    return {n: hashlib.sha256(load(n).encode("utf-8")).hexdigest() for n in asset_names()}
