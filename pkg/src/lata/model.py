"""Core project data model: documents, segments, links, taxonomy, metadata.

All types are immutable value objects; edits go through the store's command
log. ``validate_project`` is the single authority on project invariants and
returns violations as data rather than raising.
"""
from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

PARA_ID_RE = re.compile(r"p[1-9][0-9]*\Z")
SENT_ID_RE = re.compile(r"p[1-9][0-9]*-s[1-9][0-9]*\Z")
BCP47_RE = re.compile(r"[A-Za-z]{2,3}(-[A-Za-z0-9]{1,8})*\Z")

DOC_ROLES = ("source", "target")
LINK_LEVELS = ("paragraph", "sentence")
LINK_ORIGINS = ("manual", "llm", "baseline")


@dataclass(frozen=True)
class DocumentMeta:
    """Bibliographic record attached to one side of a project."""

    title: str = ""
    author: str = ""
    genre: str = ""
    publication_date: str = ""
    publisher: str = ""
    domain: str = ""
    document_type: str = ""
    language: str = "en"
    source_url: str = ""

    def to_dict(self) -> dict[str, str]:
        return {
            "title": self.title,
            "author": self.author,
            "genre": self.genre,
            "publication_date": self.publication_date,
            "publisher": self.publisher,
            "domain": self.domain,
            "document_type": self.document_type,
            "language": self.language,
            "source_url": self.source_url,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DocumentMeta":
        fields = {k: str(data.get(k, "") or "") for k in cls().to_dict()}
        if not fields["language"]:
            fields["language"] = "en"
        return cls(**fields)


@dataclass(frozen=True)
class Sentence:
    sent_id: str
    text: str

    def to_dict(self) -> dict[str, str]:
        return {"sent_id": self.sent_id, "text": self.text}


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    raw_text: str
    sentences: tuple[Sentence, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "para_id": self.para_id,
            "raw_text": self.raw_text,
            "sentences": [s.to_dict() for s in self.sentences],
        }


@dataclass(frozen=True)
class Document:
    doc_id: str
    role: str
    meta: DocumentMeta
    paragraphs: tuple[Paragraph, ...] = ()

    def paragraph(self, para_id: str) -> Paragraph | None:
        for p in self.paragraphs:
            if p.para_id == para_id:
                return p
        return None

    def paragraph_ids(self) -> list[str]:
        return [p.para_id for p in self.paragraphs]

    def sentence_ids(self) -> list[str]:
        return [s.sent_id for p in self.paragraphs for s in p.sentences]

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "role": self.role,
            "meta": self.meta.to_dict(),
            "paragraphs": [p.to_dict() for p in self.paragraphs],
        }


@dataclass(frozen=True)
class AlignmentLink:
    """A many-to-many link between source and target segments at one level.

    ID sets are unordered; display and export order derive from document
    order. Null matches leave one side empty.
    """

    link_id: str
    level: str
    source_ids: frozenset[str] = frozenset()
    target_ids: frozenset[str] = frozenset()
    comment: str = ""
    techniques: frozenset[str] = frozenset()
    origin: str = "manual"
    confidence: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "link_id": self.link_id,
            "level": self.level,
            "source_ids": sorted(self.source_ids),
            "target_ids": sorted(self.target_ids),
            "comment": self.comment,
            "techniques": sorted(self.techniques),
            "origin": self.origin,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AlignmentLink":
        conf = data.get("confidence")
        return cls(
            link_id=str(data["link_id"]),
            level=str(data["level"]),
            source_ids=frozenset(str(x) for x in data.get("source_ids", ())),
            target_ids=frozenset(str(x) for x in data.get("target_ids", ())),
            comment=str(data.get("comment", "") or ""),
            techniques=frozenset(str(x) for x in data.get("techniques", ())),
            origin=str(data.get("origin", "manual")),
            confidence=None if conf is None else float(conf),
        )


@dataclass(frozen=True)
class Cardinality:
    m: int
    n: int

    def as_tuple(self) -> tuple[int, int]:
        return (self.m, self.n)


@dataclass(frozen=True)
class TechniqueDef:
    """One entry of the project's translation technique taxonomy."""

    name: str
    description: str = ""
    examples: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "examples": list(self.examples),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TechniqueDef":
        return cls(
            name=str(data["name"]),
            description=str(data.get("description", "") or ""),
            examples=tuple(str(x) for x in data.get("examples", ())),
        )


@dataclass(frozen=True)
class PromptTemplate:
    """Instruction template with ``{{identifier}}`` placeholders."""

    template_id: str
    name: str
    body: str
    required_placeholders: frozenset[str] = frozenset({"language", "paragraph"})
    description: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "template_id": self.template_id,
            "name": self.name,
            "body": self.body,
            "required_placeholders": sorted(self.required_placeholders),
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PromptTemplate":
        return cls(
            template_id=str(data["template_id"]),
            name=str(data.get("name", "") or ""),
            body=str(data.get("body", "") or ""),
            required_placeholders=frozenset(
                str(x) for x in data.get("required_placeholders", ("language", "paragraph"))
            ),
            description=str(data.get("description", "") or ""),
        )


@dataclass(frozen=True)
class Project:
    project_id: str
    name: str
    source_doc: Document
    target_doc: Document
    links: tuple[AlignmentLink, ...] = ()
    taxonomy: tuple[TechniqueDef, ...] = ()
    prompt_templates: tuple[PromptTemplate, ...] = ()
    created_at: str = ""
    updated_at: str = ""

    def document(self, role: str) -> Document:
        if role == "source":
            return self.source_doc
        if role == "target":
            return self.target_doc
        raise ValueError(f"unknown document role: {role!r}")

    def link(self, link_id: str) -> AlignmentLink | None:
        for l in self.links:
            if l.link_id == link_id:
                return l
        return None

    def technique(self, name: str) -> TechniqueDef | None:
        for t in self.taxonomy:
            if t.name == name:
                return t
        return None

    def template(self, template_id: str) -> PromptTemplate | None:
        for t in self.prompt_templates:
            if t.template_id == template_id:
                return t
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "project_id": self.project_id,
            "name": self.name,
            "source_doc": self.source_doc.to_dict(),
            "target_doc": self.target_doc.to_dict(),
            "links": [l.to_dict() for l in self.links],
            "taxonomy": [t.to_dict() for t in self.taxonomy],
            "prompt_templates": [t.to_dict() for t in self.prompt_templates],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


@dataclass(frozen=True)
class Violation:
    """One invariant breach, naming the offending ID and rule."""

    code: str
    subject: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"code": self.code, "subject": self.subject, "message": self.message}


def cardinality_of(link: AlignmentLink) -> Cardinality:
    """Bead shape of a link: (|source_ids|, |target_ids|). Never (0, 0)."""
    return Cardinality(len(link.source_ids), len(link.target_ids))


def link_sort_key(link: AlignmentLink, src_pos: dict[str, int], tgt_pos: dict[str, int]):
    """Deterministic ordering by document position (null side sorts last)."""
    src = tuple(sorted(src_pos.get(i, 1 << 30) for i in link.source_ids)) or ((1 << 30),)
    tgt = tuple(sorted(tgt_pos.get(i, 1 << 30) for i in link.target_ids)) or ((1 << 30),)
    return (
        src,
        tgt,
        link.origin,
        link.comment,
        tuple(sorted(link.techniques)),
        repr(link.confidence),
    )


def _collapse(text: str) -> str:
    return " ".join(text.split())


def _validate_meta(meta: DocumentMeta, subject: str, out: list[Violation]) -> None:
    if not meta.language or not BCP47_RE.match(meta.language):
        out.append(
            Violation("bad-language", subject, f"language tag {meta.language!r} is not a well-formed BCP-47 tag")
        )
    if meta.publication_date:
        try:
            datetime.date.fromisoformat(meta.publication_date)
        except ValueError:
            out.append(
                Violation("bad-date", subject, f"publication_date {meta.publication_date!r} is not a valid ISO date")
            )


def _validate_document(doc: Document, out: list[Violation]) -> None:
    subject = f"{doc.role}:{doc.doc_id}"
    if doc.role not in DOC_ROLES:
        out.append(Violation("bad-role", subject, f"role {doc.role!r} must be source or target"))
    _validate_meta(doc.meta, subject, out)
    for idx, para in enumerate(doc.paragraphs):
        expected = f"p{idx + 1}"
        if not PARA_ID_RE.match(para.para_id):
            out.append(Violation("bad-paragraph-id", f"{subject}/{para.para_id}", f"paragraph ID {para.para_id!r} violates the p<i> grammar"))
        elif para.para_id != expected:
            out.append(Violation("paragraph-sequence", f"{subject}/{para.para_id}", f"paragraph {idx + 1} has ID {para.para_id!r}, expected {expected!r}"))
        for k, sent in enumerate(para.sentences):
            expected_sid = f"{para.para_id}-s{k + 1}"
            sid_subject = f"{subject}/{sent.sent_id}"
            if not SENT_ID_RE.match(sent.sent_id):
                out.append(Violation("bad-sentence-id", sid_subject, f"sentence ID {sent.sent_id!r} violates the p<i>-s<k> grammar"))
            elif sent.sent_id != expected_sid:
                out.append(Violation("sentence-sequence", sid_subject, f"sentence {k + 1} of {para.para_id} has ID {sent.sent_id!r}, expected {expected_sid!r}"))
            if not sent.text.strip():
                out.append(Violation("sentence-whitespace", sid_subject, "sentence text is empty after trimming"))
            elif sent.text != sent.text.strip():
                out.append(Violation("sentence-whitespace", sid_subject, "sentence text carries leading or trailing whitespace"))
        if para.sentences:
            joined = _collapse(" ".join(s.text for s in para.sentences))
            expected_text = _collapse(para.raw_text)
            if joined != expected_text:
                out.append(Violation("coverage-mismatch", f"{subject}/{para.para_id}", "sentences do not tile the paragraph text (modulo whitespace runs)"))


def validate_project(project: Project) -> list[Violation]:
    """Check every model invariant; an empty result means the project is valid."""
    out: list[Violation] = []
    _validate_document(project.source_doc, out)
    _validate_document(project.target_doc, out)

    tax_names: list[str] = [t.name for t in project.taxonomy]
    seen_folded: dict[str, str] = {}
    for t in project.taxonomy:
        if not t.name:
            out.append(Violation("empty-technique-name", "taxonomy", "technique name must be non-empty"))
            continue
        if ";" in t.name:
            out.append(Violation("semicolon-in-technique", t.name, "technique names must not contain ';'"))
        folded = t.name.casefold()
        if folded in seen_folded:
            out.append(Violation("duplicate-technique", t.name, f"technique {t.name!r} duplicates {seen_folded[folded]!r} case-insensitively"))
        else:
            seen_folded[folded] = t.name

    src_para = set(project.source_doc.paragraph_ids())
    tgt_para = set(project.target_doc.paragraph_ids())
    src_sent = set(project.source_doc.sentence_ids())
    tgt_sent = set(project.target_doc.sentence_ids())
    known_techniques = set(tax_names)

    seen_links: set[str] = set()
    for link in project.links:
        subject = link.link_id
        if link.link_id in seen_links:
            out.append(Violation("duplicate-link-id", subject, f"link ID {link.link_id!r} is not unique"))
        seen_links.add(link.link_id)
        if link.level not in LINK_LEVELS:
            out.append(Violation("bad-level", subject, f"level {link.level!r} must be paragraph or sentence"))
            continue
        if link.origin not in LINK_ORIGINS:
            out.append(Violation("bad-origin", subject, f"origin {link.origin!r} must be manual, llm or baseline"))
        if not link.source_ids and not link.target_ids:
            out.append(Violation("empty-link", subject, "source_ids and target_ids are both empty"))
        if link.confidence is not None and not (0.0 <= link.confidence <= 1.0):
            out.append(Violation("confidence-range", subject, f"confidence {link.confidence!r} outside [0, 1]"))
        grammar = PARA_ID_RE if link.level == "paragraph" else SENT_ID_RE
        existing_src = src_para if link.level == "paragraph" else src_sent
        existing_tgt = tgt_para if link.level == "paragraph" else tgt_sent
        for side, ids, existing in (
            ("source", link.source_ids, existing_src),
            ("target", link.target_ids, existing_tgt),
        ):
            for sid in sorted(ids):
                if not grammar.match(sid):
                    out.append(Violation("level-mismatch", subject, f"{side} ID {sid!r} does not match the {link.level}-level grammar"))
                elif sid not in existing:
                    out.append(Violation("dangling-reference", subject, f"{side} ID {sid!r} does not exist in the {side} document"))
        for name in sorted(link.techniques):
            if name not in known_techniques:
                out.append(Violation("unknown-technique", subject, f"technique {name!r} is not in the project taxonomy"))
    return out


def new_document(role: str, meta: DocumentMeta, doc_id: str = "") -> Document:
    return Document(doc_id=doc_id or f"{role}-doc", role=role, meta=meta)


def build_paragraphs(raw_texts: Iterable[str]) -> tuple[Paragraph, ...]:
    """Number raw paragraph texts p1..pn; sentences attach later."""
    return tuple(
        Paragraph(para_id=f"p{i + 1}", raw_text=text) for i, text in enumerate(raw_texts)
    )


def with_links(project: Project, links: Iterable[AlignmentLink]) -> Project:
    return replace(project, links=tuple(links))


def with_document(project: Project, doc: Document) -> Project:
    if doc.role == "source":
        return replace(project, source_doc=doc)
    return replace(project, target_doc=doc)
