"""Shared text helpers: NFC normalization, whitespace collapsing, diff offsets."""
from __future__ import annotations

import unicodedata


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def collapse_ws(text: str) -> str:
    """Collapse every whitespace run to a single space and trim both ends."""
    return " ".join(text.split())


def first_divergence(expected: str, actual: str) -> int:
    """Index of the first differing character (length of the common prefix)."""
    limit = min(len(expected), len(actual))
    for i in range(limit):
        if expected[i] != actual[i]:
            return i
    return limit
