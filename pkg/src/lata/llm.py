"""Prompt templating, provider calls, and strict suggestion validation.

The provider speaks a minimal chat-completion JSON shape. Responses are
validated against the structured suggestion schema; failures feed a bounded
repair-prompt retry loop, after which the deterministic segmenter+aligner
baseline is returned instead. A suggestion is never surfaced unvalidated.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence
from urllib.parse import urlparse

from ._text import collapse_ws, first_divergence
from .align import AlignerParams, DEFAULT_PARAMS, align
from .errors import (
    MalformedPlaceholderError,
    MissingBindingError,
    ProviderUnreachableError,
)
from .model import SENT_ID_RE, Paragraph, PromptTemplate
from .segmenter import DEFAULT_CONFIG, SegmenterConfig, segment

_PLACEHOLDER_RE = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")

DEFAULT_TEMPLATE = PromptTemplate(
    template_id="default",
    name="Segment and align",
    body=(
        "You segment and align parallel paragraphs.\n"
        "Split the {{language}} source paragraph and the {{target_language}} "
        "target paragraph into sentences, then align them. Sentences must "
        "reproduce each paragraph exactly, in order, apart from whitespace "
        "runs. Use sentence IDs of the form p1-s1, p1-s2, ...\n"
        "Source paragraph:\n{{paragraph}}\n"
        "Target paragraph:\n{{target_paragraph}}\n"
        'Respond with JSON only: {"source_sentences": [{"id", "text"}], '
        '"target_sentences": [{"id", "text"}], "links": [{"source_ids", '
        '"target_ids", "confidence"}]}'
    ),
    required_placeholders=frozenset({"language", "paragraph"}),
    description="Built-in combined segmentation and alignment prompt",
)


def template_placeholders(body: str) -> list[str]:
    """Placeholder names in order of appearance; rejects malformed ones.

    Every ``{{`` in the body must open a well-formed ``{{identifier}}``.
    """
    names: list[str] = []
    pos = 0
    while True:
        start = body.find("{{", pos)
        if start < 0:
            return names
        m = _PLACEHOLDER_RE.match(body, start)
        if m is None:
            snippet = body[start : start + 20]
            raise MalformedPlaceholderError(
                f"malformed placeholder at offset {start}: {snippet!r}"
            )
        names.append(m.group(1))
        pos = m.end()


def render(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Single-pass substitution; inserted values are never re-expanded."""
    names = template_placeholders(template.body)
    missing = sorted(set(n for n in names if n not in bindings))
    if missing:
        raise MissingBindingError(missing)
    out: list[str] = []
    pos = 0
    body = template.body
    while True:
        start = body.find("{{", pos)
        if start < 0:
            out.append(body[pos:])
            return "".join(out)
        m = _PLACEHOLDER_RE.match(body, start)
        assert m is not None  # template_placeholders validated above
        out.append(body[pos:start])
        out.append(bindings[m.group(1)])
        pos = m.end()


@dataclass(frozen=True)
class LlmProviderConfig:
    endpoint_url: str
    model_name: str
    api_key_env_var: str = ""
    timeout_seconds: int = 60
    max_retries: int = 2

    def __post_init__(self) -> None:
        parsed = urlparse(self.endpoint_url)
        if not (parsed.scheme in ("http", "https") and parsed.netloc):
            raise ValueError(f"endpoint_url must be absolute: {self.endpoint_url!r}")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LlmProviderConfig":
        return cls(
            endpoint_url=str(data["endpoint_url"]),
            model_name=str(data["model_name"]),
            api_key_env_var=str(data.get("api_key_env_var", "") or ""),
            timeout_seconds=int(data.get("timeout_seconds", 60)),
            max_retries=int(data.get("max_retries", 2)),
        )


@dataclass(frozen=True)
class PayloadSentence:
    id: str
    text: str

    def to_dict(self) -> dict[str, str]:
        return {"id": self.id, "text": self.text}


@dataclass(frozen=True)
class PayloadLink:
    source_ids: tuple[str, ...]
    target_ids: tuple[str, ...]
    confidence: float | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "source_ids": list(self.source_ids),
            "target_ids": list(self.target_ids),
        }
        if self.confidence is not None:
            out["confidence"] = self.confidence
        return out


@dataclass(frozen=True)
class SuggestionPayload:
    source_sentences: tuple[PayloadSentence, ...]
    target_sentences: tuple[PayloadSentence, ...]
    links: tuple[PayloadLink, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_sentences": [s.to_dict() for s in self.source_sentences],
            "target_sentences": [s.to_dict() for s in self.target_sentences],
            "links": [l.to_dict() for l in self.links],
        }


@dataclass(frozen=True)
class ValidationFailure:
    """First violated rule of a rejected payload, with its JSON path."""

    code: str
    path: str
    message: str
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "code": self.code,
            "path": self.path,
            "message": self.message,
            "details": self.details,
        }


@dataclass(frozen=True)
class SuggestResult:
    """Validated suggestion plus how it was obtained.

    origin is "llm" for an accepted provider payload and "baseline" for the
    segmenter+aligner fallback; reason is set only on fallback.
    """

    payload: SuggestionPayload
    origin: str
    retry_count: int = 0
    reason: str = ""
    failures: tuple[ValidationFailure, ...] = ()


_TOP_FIELDS = ("source_sentences", "target_sentences", "links")


def _check_sentences(items: Any, side: str) -> list[PayloadSentence] | ValidationFailure:
    path = f"$.{side}"
    if not isinstance(items, list):
        return ValidationFailure("wrong-type", path, f"{side} must be an array")
    out: list[PayloadSentence] = []
    seen: set[str] = set()
    for i, item in enumerate(items):
        ipath = f"{path}[{i}]"
        if not isinstance(item, dict):
            return ValidationFailure("wrong-type", ipath, "sentence must be an object")
        for key in ("id", "text"):
            if key not in item:
                return ValidationFailure(
                    "missing-field", f"{ipath}.{key}", f"sentence lacks {key!r}"
                )
        for key in sorted(item):
            if key not in ("id", "text"):
                return ValidationFailure(
                    "unknown-field", f"{ipath}.{key}", f"unexpected field {key!r}"
                )
        sid, text = item["id"], item["text"]
        if not isinstance(sid, str) or not SENT_ID_RE.match(sid):
            return ValidationFailure(
                "bad-id", f"{ipath}.id", f"id {sid!r} violates the p<i>-s<k> grammar"
            )
        if sid in seen:
            return ValidationFailure(
                "duplicate-id", f"{ipath}.id", f"id {sid!r} appears twice in {side}"
            )
        seen.add(sid)
        if not isinstance(text, str):
            return ValidationFailure("wrong-type", f"{ipath}.text", "text must be a string")
        if not collapse_ws(text):
            return ValidationFailure(
                "empty-text", f"{ipath}.text", "sentence text is empty after trimming"
            )
        out.append(PayloadSentence(sid, text))
    return out


def _check_coverage(
    sentences: Sequence[PayloadSentence], paragraph: Paragraph, side: str
) -> ValidationFailure | None:
    joined = " ".join(collapse_ws(s.text) for s in sentences)
    expected = collapse_ws(paragraph.raw_text)
    if joined != expected:
        offset = first_divergence(expected, joined)
        return ValidationFailure(
            "coverage",
            f"$.{side}",
            f"{side} do not tile paragraph {paragraph.para_id}: "
            f"first divergence at offset {offset}",
            {"offset": offset},
        )
    return None


def validate_payload(
    raw: str, src_paragraph: Paragraph, tgt_paragraph: Paragraph
) -> SuggestionPayload | ValidationFailure:
    """Parse and check a provider response; returns the first failure as data."""
    try:
        data = json.loads(raw)
    except ValueError as exc:
        return ValidationFailure("invalid-json", "$", f"not valid JSON: {exc}")
    if not isinstance(data, dict):
        return ValidationFailure("wrong-type", "$", "top level must be an object")
    for name in _TOP_FIELDS:
        if name not in data:
            return ValidationFailure("missing-field", f"$.{name}", f"missing {name!r}")
    for name in sorted(data):
        if name not in _TOP_FIELDS:
            return ValidationFailure(
                "unknown-field", f"$.{name}", f"unexpected field {name!r}"
            )

    src = _check_sentences(data["source_sentences"], "source_sentences")
    if isinstance(src, ValidationFailure):
        return src
    tgt = _check_sentences(data["target_sentences"], "target_sentences")
    if isinstance(tgt, ValidationFailure):
        return tgt

    raw_links = data["links"]
    if not isinstance(raw_links, list):
        return ValidationFailure("wrong-type", "$.links", "links must be an array")
    src_ids = {s.id for s in src}
    tgt_ids = {s.id for s in tgt}
    links: list[PayloadLink] = []
    for i, item in enumerate(raw_links):
        lpath = f"$.links[{i}]"
        if not isinstance(item, dict):
            return ValidationFailure("wrong-type", lpath, "link must be an object")
        for key in ("source_ids", "target_ids"):
            if key not in item:
                return ValidationFailure(
                    "missing-field", f"{lpath}.{key}", f"link lacks {key!r}"
                )
        for key in sorted(item):
            if key not in ("source_ids", "target_ids", "confidence"):
                return ValidationFailure(
                    "unknown-field", f"{lpath}.{key}", f"unexpected field {key!r}"
                )
        sides: dict[str, tuple[str, ...]] = {}
        for key, declared in (("source_ids", src_ids), ("target_ids", tgt_ids)):
            values = item[key]
            if not isinstance(values, list):
                return ValidationFailure(
                    "wrong-type", f"{lpath}.{key}", f"{key} must be an array"
                )
            seen: set[str] = set()
            for j, sid in enumerate(values):
                spath = f"{lpath}.{key}[{j}]"
                if not isinstance(sid, str) or not SENT_ID_RE.match(sid):
                    return ValidationFailure(
                        "bad-id", spath, f"id {sid!r} violates the p<i>-s<k> grammar"
                    )
                if sid in seen:
                    return ValidationFailure(
                        "duplicate-id", spath, f"id {sid!r} repeated within {key}"
                    )
                seen.add(sid)
                if sid not in declared:
                    return ValidationFailure(
                        "dangling-link-id",
                        spath,
                        f"dangling link id at links[{i}].{key}[{j}]: {sid!r} "
                        "is not a declared sentence",
                    )
            sides[key] = tuple(values)
        if not sides["source_ids"] and not sides["target_ids"]:
            return ValidationFailure(
                "empty-link", lpath, "source_ids and target_ids are both empty"
            )
        confidence = item.get("confidence")
        if confidence is not None:
            if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
                return ValidationFailure(
                    "wrong-type", f"{lpath}.confidence", "confidence must be a number"
                )
            if not (0.0 <= float(confidence) <= 1.0):
                return ValidationFailure(
                    "confidence-range",
                    f"{lpath}.confidence",
                    f"confidence {confidence!r} outside [0, 1]",
                )
            confidence = float(confidence)
        links.append(PayloadLink(sides["source_ids"], sides["target_ids"], confidence))

    for sentences, paragraph, side in (
        (src, src_paragraph, "source_sentences"),
        (tgt, tgt_paragraph, "target_sentences"),
    ):
        failure = _check_coverage(sentences, paragraph, side)
        if failure is not None:
            return failure
    return SuggestionPayload(tuple(src), tuple(tgt), tuple(links))


def baseline_payload(
    src_paragraph: Paragraph,
    tgt_paragraph: Paragraph,
    seg_config: SegmenterConfig = DEFAULT_CONFIG,
    aligner_params: AlignerParams = DEFAULT_PARAMS,
) -> SuggestionPayload:
    """Deterministic segmenter+aligner suggestion, shaped like a payload."""
    src_texts = segment(src_paragraph.raw_text, config=seg_config)
    tgt_texts = segment(tgt_paragraph.raw_text, config=seg_config)
    src_sents = tuple(
        PayloadSentence(f"{src_paragraph.para_id}-s{k + 1}", t)
        for k, t in enumerate(src_texts)
    )
    tgt_sents = tuple(
        PayloadSentence(f"{tgt_paragraph.para_id}-s{k + 1}", t)
        for k, t in enumerate(tgt_texts)
    )
    beads = align(src_texts, tgt_texts, aligner_params)
    links = tuple(
        PayloadLink(
            tuple(s.id for s in src_sents[b.source_span[0] : b.source_span[1]]),
            tuple(s.id for s in tgt_sents[b.target_span[0] : b.target_span[1]]),
            None,
        )
        for b in beads
    )
    return SuggestionPayload(src_sents, tgt_sents, links)


def _default_transport(
    provider: LlmProviderConfig, log: Callable[[str], None] | None
) -> Callable[[dict], str]:
    import httpx

    def post(body: dict) -> str:
        headers = {"content-type": "application/json"}
        key = os.environ.get(provider.api_key_env_var, "") if provider.api_key_env_var else ""
        if key:
            # The key goes on the wire only; it is never logged or persisted.
            headers["authorization"] = f"Bearer {key}"
        try:
            resp = httpx.post(
                provider.endpoint_url,
                json=body,
                headers=headers,
                timeout=provider.timeout_seconds,
            )
        except Exception as exc:
            raise ProviderUnreachableError(f"provider request failed: {exc}") from exc
        if resp.status_code >= 400:
            raise ProviderUnreachableError(
                f"provider returned HTTP {resp.status_code}"
            )
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except Exception as exc:
            raise ProviderUnreachableError("malformed provider envelope") from exc
        if not isinstance(content, str):
            raise ProviderUnreachableError("malformed provider envelope")
        return content

    return post


def suggest(
    paragraph_pair: tuple[Paragraph, Paragraph],
    template: PromptTemplate,
    provider: LlmProviderConfig,
    *,
    src_language: str = "en",
    tgt_language: str = "en",
    seg_config: SegmenterConfig = DEFAULT_CONFIG,
    aligner_params: AlignerParams = DEFAULT_PARAMS,
    transport: Callable[[dict], str] | None = None,
    log: Callable[[str], None] | None = None,
) -> SuggestResult:
    """Render, call, validate; repair-retry up to max_retries, then fall back.

    ``transport`` takes the request body and returns the assistant text;
    tests inject fakes here, the default posts JSON over HTTP.
    """
    src_par, tgt_par = paragraph_pair
    emit = log or (lambda message: None)
    prompt = render(
        template,
        {
            "language": src_language,
            "target_language": tgt_language,
            "paragraph": collapse_ws(src_par.raw_text),
            "target_paragraph": collapse_ws(tgt_par.raw_text),
        },
    )
    post = transport or _default_transport(provider, log)
    messages = [{"role": "user", "content": prompt}]
    failures: list[ValidationFailure] = []
    reason = ""
    for attempt in range(provider.max_retries + 1):
        emit(
            f"llm call attempt={attempt + 1} model={provider.model_name} "
            f"prompt_chars={len(messages[-1]['content'])}"
        )
        try:
            raw = post(
                {"model": provider.model_name, "messages": messages, "temperature": 0}
            )
        except ProviderUnreachableError as exc:
            emit(f"llm provider error: {exc.message}")
            reason = "provider-unreachable"
            continue
        result = validate_payload(raw, src_par, tgt_par)
        if isinstance(result, SuggestionPayload):
            emit(f"llm payload accepted after {attempt} retries")
            return SuggestResult(
                payload=result,
                origin="llm",
                retry_count=attempt,
                failures=tuple(failures),
            )
        failures.append(result)
        reason = "validation-failed"
        emit(f"llm payload rejected: {result.code} at {result.path}")
        messages.append({"role": "assistant", "content": raw})
        messages.append(
            {
                "role": "user",
                "content": (
                    "The previous response was rejected: "
                    f"{result.code} at {result.path}: {result.message}. "
                    "Return the corrected JSON object only."
                ),
            }
        )
    emit(f"llm suggestions exhausted, falling back to baseline ({reason})")
    return SuggestResult(
        payload=baseline_payload(src_par, tgt_par, seg_config, aligner_params),
        origin="baseline",
        retry_count=provider.max_retries,
        reason=reason or "provider-unreachable",
        failures=tuple(failures),
    )
