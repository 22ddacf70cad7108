"""Rule-based sentence segmentation with abbreviation guards.

Pre-fills the automated alignment phase and backs the fallback path when
structured suggestions are rejected. Splitting is deterministic: a sentence
ends at a terminator character that is followed by a space in the
whitespace-collapsed text, unless the token ending at that terminator is a
listed abbreviation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from ._text import collapse_ws, first_divergence
from .errors import CoverageError, ValidationRejection
from .model import Paragraph, Sentence, Violation

# U+061F Arabic question mark, U+061B Arabic semicolon, U+2026 ellipsis.
# U+060C (Arabic comma) deliberately absent: it does not end sentences.
DEFAULT_TERMINATORS = frozenset({".", "!", "?", "؟", "؛", "…"})

# Matched case-sensitively against the token preceding a '.' terminator.
DEFAULT_ABBREVIATIONS = frozenset(
    {"Mr", "Mrs", "Dr", "Prof", "St", "etc", "e.g", "i.e", "vs"}
)


@dataclass(frozen=True)
class SegmenterConfig:
    terminators: frozenset[str] = DEFAULT_TERMINATORS
    abbreviation_list: frozenset[str] = DEFAULT_ABBREVIATIONS
    min_sentence_chars: int = 1

    def __post_init__(self) -> None:
        if not self.terminators:
            raise ValueError("terminators must be non-empty")
        for t in self.terminators:
            if len(t) != 1:
                raise ValueError(f"terminator {t!r} must be a single code point")
        if self.min_sentence_chars < 1:
            raise ValueError("min_sentence_chars must be >= 1")

    def to_dict(self) -> dict:
        return {
            "terminators": sorted(self.terminators),
            "abbreviation_list": sorted(self.abbreviation_list),
            "min_sentence_chars": self.min_sentence_chars,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SegmenterConfig":
        return cls(
            terminators=frozenset(data.get("terminators", DEFAULT_TERMINATORS)),
            abbreviation_list=frozenset(
                data.get("abbreviation_list", DEFAULT_ABBREVIATIONS)
            ),
            min_sentence_chars=int(data.get("min_sentence_chars", 1)),
        )


DEFAULT_CONFIG = SegmenterConfig()


def _abbreviation_guard(text: str, term_index: int, config: SegmenterConfig) -> bool:
    """True when the '.' at term_index closes an abbreviation, not a sentence.

    The guard applies only to '.' so real question/exclamation marks always
    split. The preceding token is the run of letters and dots bounded by any
    other character; surrounding dots are stripped so "e.g." matches "e.g".
    """
    if text[term_index] != ".":
        return False
    j = term_index - 1
    while j >= 0 and (text[j].isalpha() or text[j] == "."):
        j -= 1
    token = text[j + 1 : term_index].strip(".")
    return token in config.abbreviation_list


def segment_spans(
    raw_text: str, config: SegmenterConfig = DEFAULT_CONFIG
) -> list[tuple[int, int]]:
    """Half-open sentence spans into the whitespace-collapsed input.

    Spans are strictly increasing and non-overlapping; between consecutive
    spans there is exactly the single separating space.
    """
    text = collapse_ws(raw_text)
    n = len(text)
    spans: list[tuple[int, int]] = []
    start = 0
    i = 0
    while i < n:
        if (
            text[i] in config.terminators
            and i + 1 < n
            and text[i + 1] == " "
            and not _abbreviation_guard(text, i, config)
            and (i + 1 - start) >= config.min_sentence_chars
        ):
            spans.append((start, i + 1))
            start = i + 2
            i = start
            continue
        i += 1
    if start < n:
        spans.append((start, n))
    return spans


def segment(
    raw_text: str,
    language: str = "en",
    config: SegmenterConfig = DEFAULT_CONFIG,
) -> list[str]:
    """Split text into trimmed sentences; empty input gives an empty list.

    ``language`` is accepted for interface parity with the suggestion path;
    the rules themselves are language-independent (terminator sets carry the
    script-specific part and live in the config).
    """
    del language
    text = collapse_ws(raw_text)
    return [text[a:b] for a, b in segment_spans(raw_text, config)]


def attach_sentences(paragraph: Paragraph, texts: Sequence[str]) -> Paragraph:
    """Number sentence texts p<i>-s1..sk onto the paragraph.

    Texts are whitespace-collapsed before attachment so stored sentences are
    canonical. Raises when a text is empty or the texts do not tile the
    paragraph's collapsed raw text.
    """
    cleaned = [collapse_ws(t) for t in texts]
    for k, t in enumerate(cleaned):
        if not t:
            raise ValidationRejection(
                f"sentence {k + 1} of {paragraph.para_id} is empty after trimming",
                [
                    Violation(
                        "sentence-whitespace",
                        f"{paragraph.para_id}-s{k + 1}",
                        "sentence text is empty after trimming",
                    )
                ],
            )
    joined = " ".join(cleaned)
    expected = collapse_ws(paragraph.raw_text)
    if joined != expected:
        offset = first_divergence(expected, joined)
        raise CoverageError(
            f"sentences do not tile paragraph {paragraph.para_id}: "
            f"first divergence at offset {offset}",
            offset=offset,
        )
    sentences = tuple(
        Sentence(sent_id=f"{paragraph.para_id}-s{k + 1}", text=t)
        for k, t in enumerate(cleaned)
    )
    return replace(paragraph, sentences=sentences)
