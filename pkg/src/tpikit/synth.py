"""Seeded synthetic descriptions for benchmarks and property tests."""

from __future__ import annotations

import random

LOREM = (
    "lorem ipsum dolor sit amet consectetur adipiscing elit sed do eiusmod tempor incididunt ut "
    "labore et dolore magna aliqua enim ad minim veniam quis nostrud exercitation ullamco laboris "
    "nisi aliquip ex ea commodo consequat duis aute irure in reprehenderit voluptate velit esse "
    "cillum fugiat nulla pariatur excepteur sint occaecat cupidatat non proident sunt culpa qui "
    "officia deserunt mollit anim id est laborum image shows red blue chart table diagram label "
    "axis value scene person building window tree water sky left right top bottom center"
).split()


def lorem_text(rng: random.Random, min_words: int = 50, max_words: int = 150) -> str:
    n = rng.randint(min_words, max_words)
    words = []
    sentence_start = True
    for i in range(n):
        w = rng.choice(LOREM)
        if sentence_start:
            w = w.capitalize()
        sentence_start = False
        if i == n - 1:
            w += "."
        elif rng.random() < 0.08:
            w += "."
            sentence_start = True
        elif rng.random() < 0.06:
            w += ","
        words.append(w)
    return " ".join(words)


def lorem_corpus(n: int, seed: int = 0, min_words: int = 50, max_words: int = 150) -> list[tuple[str, str]]:
    """``n`` (id, text) pairs; identical for identical arguments."""
    rng = random.Random(seed)
    return [(f"s{i:06d}", lorem_text(rng, min_words, max_words)) for i in range(n)]
