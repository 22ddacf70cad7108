"""SQLite-backed project store with an invertible, durable command log.

One database file per workspace. Every edit flows through ``apply`` as a
named command; the stored inverse steps make undo exact, and redo replays
the normalized payload (IDs assigned at first apply are baked in, so replay
is deterministic). A command that fails validation leaves no trace.
"""
from __future__ import annotations

import datetime
import json
import re
import sqlite3
import threading
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Iterable

from . import llm
from .errors import (
    DuplicateRoleImportError,
    EmptyRedoStackError,
    EmptyUndoStackError,
    StorageError,
    UnknownLinkError,
    UnknownParagraphError,
    UnknownProjectError,
    ValidationRejection,
)
from .model import (
    AlignmentLink,
    Document,
    DocumentMeta,
    Paragraph,
    Project,
    PromptTemplate,
    Sentence,
    TechniqueDef,
    Violation,
    validate_project,
)
from ._text import collapse_ws, nfc
from .segmenter import attach_sentences

SCHEMA_VERSION = 1
UNDO_CAP = 1000

COMMAND_KINDS = (
    "add_link",
    "remove_link",
    "modify_link",
    "set_comment",
    "tag_technique",
    "untag_technique",
    "set_metadata",
    "attach_sentences",
    "detach_sentences",
    "upsert_technique_def",
    "delete_technique_def",
    "upsert_template",
    "delete_template",
    "accept_suggestion",
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta(
  key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS projects(
  project_id TEXT PRIMARY KEY,
  name TEXT NOT NULL,
  revision INTEGER NOT NULL,
  next_link_seq INTEGER NOT NULL,
  next_command_seq INTEGER NOT NULL,
  config_json TEXT NOT NULL DEFAULT '{}',
  created_at TEXT NOT NULL,
  updated_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS documents(
  project_id TEXT NOT NULL, role TEXT NOT NULL,
  doc_id TEXT NOT NULL, meta_json TEXT NOT NULL,
  PRIMARY KEY(project_id, role));
CREATE TABLE IF NOT EXISTS paragraphs(
  project_id TEXT NOT NULL, role TEXT NOT NULL, idx INTEGER NOT NULL,
  para_id TEXT NOT NULL, raw_text TEXT NOT NULL,
  PRIMARY KEY(project_id, role, idx));
CREATE TABLE IF NOT EXISTS sentences(
  project_id TEXT NOT NULL, role TEXT NOT NULL,
  para_idx INTEGER NOT NULL, idx INTEGER NOT NULL,
  sent_id TEXT NOT NULL, text TEXT NOT NULL,
  PRIMARY KEY(project_id, role, para_idx, idx));
CREATE TABLE IF NOT EXISTS links(
  project_id TEXT NOT NULL, link_id TEXT NOT NULL,
  level TEXT NOT NULL, source_ids_json TEXT NOT NULL,
  target_ids_json TEXT NOT NULL, comment TEXT NOT NULL,
  origin TEXT NOT NULL, confidence REAL,
  PRIMARY KEY(project_id, link_id));
CREATE TABLE IF NOT EXISTS link_techniques(
  project_id TEXT NOT NULL, link_id TEXT NOT NULL, name TEXT NOT NULL,
  PRIMARY KEY(project_id, link_id, name));
CREATE TABLE IF NOT EXISTS techniques(
  project_id TEXT NOT NULL, name TEXT NOT NULL,
  description TEXT NOT NULL, examples_json TEXT NOT NULL,
  PRIMARY KEY(project_id, name));
CREATE TABLE IF NOT EXISTS templates(
  project_id TEXT NOT NULL, template_id TEXT NOT NULL,
  name TEXT NOT NULL, body TEXT NOT NULL,
  required_json TEXT NOT NULL, description TEXT NOT NULL,
  PRIMARY KEY(project_id, template_id));
CREATE TABLE IF NOT EXISTS commands(
  project_id TEXT NOT NULL, command_id INTEGER NOT NULL,
  kind TEXT NOT NULL, payload_json TEXT NOT NULL,
  inverse_json TEXT NOT NULL, state TEXT NOT NULL,
  created_at TEXT NOT NULL,
  PRIMARY KEY(project_id, command_id));
"""

_LINK_ID_RE = re.compile(r"([a-z]+)([0-9]+)\Z")


def _link_id_key(link_id: str) -> tuple:
    m = _LINK_ID_RE.match(link_id)
    if m:
        return (0, m.group(1), int(m.group(2)))
    return (1, link_id, 0)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _doc_canonical(doc: Document) -> dict[str, Any]:
    # doc_id is store plumbing, not project state. A segmented paragraph's
    # raw text is derived state (its sentences tile the collapsed raw), so
    # canonical form collapses it; original line wrapping is display-only.
    paragraphs = []
    for p in doc.paragraphs:
        d = p.to_dict()
        if p.sentences:
            d["raw_text"] = collapse_ws(p.raw_text)
        paragraphs.append(d)
    return {
        "role": doc.role,
        "meta": doc.meta.to_dict(),
        "paragraphs": paragraphs,
    }


def _link_canonical_key(link: AlignmentLink) -> tuple:
    return (
        link.level,
        tuple(sorted(link.source_ids)),
        tuple(sorted(link.target_ids)),
        link.origin,
        link.comment,
        tuple(sorted(link.techniques)),
        repr(link.confidence),
    )


def canonical_json(project: Project) -> str:
    """State-equality serialization: sorted keys and ID sets, LF newlines.

    Excludes identifiers and timestamps the engine assigns (project_id,
    doc_id, link_id, created_at, updated_at) so equality means equal
    annotation state, not equal bookkeeping.
    """
    links = []
    for link in sorted(project.links, key=_link_canonical_key):
        d = link.to_dict()
        d.pop("link_id")
        links.append(d)
    data = {
        "name": project.name,
        "source_doc": _doc_canonical(project.source_doc),
        "target_doc": _doc_canonical(project.target_doc),
        "links": links,
        "taxonomy": [
            t.to_dict()
            for t in sorted(project.taxonomy, key=lambda t: (t.name.casefold(), t.name))
        ],
        "prompt_templates": [
            t.to_dict()
            for t in sorted(project.prompt_templates, key=lambda t: t.template_id)
        ],
    }
    return json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def split_paragraphs(text: str) -> list[str]:
    """Blank-line paragraph blocks; internal line wrapping kept verbatim."""
    blocks: list[str] = []
    current: list[str] = []
    for line in text.split("\n"):
        if line.strip():
            current.append(line)
        elif current:
            blocks.append("\n".join(current))
            current = []
    if current:
        blocks.append("\n".join(current))
    return blocks


class _Ctx:
    """Per-apply context: hands out link IDs, records the allocation."""

    def __init__(self, next_link_seq: int):
        self.next_link_seq = next_link_seq

    def alloc_link_id(self) -> str:
        link_id = f"l{self.next_link_seq}"
        self.next_link_seq += 1
        return link_id


def _require_link(project: Project, link_id: str) -> AlignmentLink:
    link = project.link(link_id)
    if link is None:
        raise UnknownLinkError(f"link {link_id!r} does not exist")
    return link


def _require_paragraph(doc: Document, para_id: str) -> Paragraph:
    para = doc.paragraph(para_id)
    if para is None:
        raise UnknownParagraphError(
            f"paragraph {para_id!r} does not exist in the {doc.role} document"
        )
    return para


def _set_paragraph(project: Project, role: str, paragraph: Paragraph) -> Project:
    doc = project.document(role)
    paragraphs = tuple(
        paragraph if p.para_id == paragraph.para_id else p for p in doc.paragraphs
    )
    return _set_doc(project, replace(doc, paragraphs=paragraphs))


def _set_doc(project: Project, doc: Document) -> Project:
    if doc.role == "source":
        return replace(project, source_doc=doc)
    return replace(project, target_doc=doc)


def _link_from_payload(payload: dict[str, Any], link_id: str) -> AlignmentLink:
    return AlignmentLink(
        link_id=link_id,
        level=str(payload.get("level", "sentence")),
        source_ids=frozenset(str(x) for x in payload.get("source_ids", ())),
        target_ids=frozenset(str(x) for x in payload.get("target_ids", ())),
        comment=str(payload.get("comment", "") or ""),
        techniques=frozenset(str(x) for x in payload.get("techniques", ())),
        origin=str(payload.get("origin", "manual")),
        confidence=(
            None
            if payload.get("confidence") is None
            else float(payload["confidence"])
        ),
    )


def _sorted_links(links: Iterable[AlignmentLink]) -> tuple[AlignmentLink, ...]:
    return tuple(sorted(links, key=lambda l: _link_id_key(l.link_id)))


Handler = Callable[[Project, dict, _Ctx], tuple[Project, dict, list]]


def _h_add_link(project: Project, payload: dict, ctx: _Ctx):
    link_id = str(payload.get("link_id") or "") or ctx.alloc_link_id()
    if project.link(link_id) is not None:
        raise ValidationRejection(
            f"link id {link_id!r} already exists",
            [Violation("duplicate-link-id", link_id, "link id already exists")],
        )
    link = _link_from_payload(payload, link_id)
    normalized = link.to_dict()
    new = replace(project, links=_sorted_links(project.links + (link,)))
    return new, normalized, [("remove_link", {"link_id": link_id})]


def _h_remove_link(project: Project, payload: dict, ctx: _Ctx):
    link = _require_link(project, str(payload["link_id"]))
    new = replace(
        project, links=tuple(l for l in project.links if l.link_id != link.link_id)
    )
    return new, {"link_id": link.link_id}, [("add_link", link.to_dict())]


_MODIFIABLE = ("source_ids", "target_ids", "comment", "techniques", "origin", "confidence")


def _h_modify_link(project: Project, payload: dict, ctx: _Ctx):
    link = _require_link(project, str(payload["link_id"]))
    fields = payload.get("set", {})
    unknown = sorted(set(fields) - set(_MODIFIABLE))
    if unknown:
        raise ValidationRejection(
            f"link fields not modifiable: {', '.join(unknown)}",
            [Violation("bad-field", link.link_id, f"cannot modify {n!r}") for n in unknown],
        )
    prior = {name: link.to_dict()[name] for name in fields}
    kwargs: dict[str, Any] = {}
    for name, value in fields.items():
        if name in ("source_ids", "target_ids", "techniques"):
            kwargs[name] = frozenset(str(x) for x in value)
        elif name == "confidence":
            kwargs[name] = None if value is None else float(value)
        else:
            kwargs[name] = str(value or "")
    updated = replace(link, **kwargs)
    new = replace(
        project,
        links=tuple(updated if l.link_id == link.link_id else l for l in project.links),
    )
    normalized = {"link_id": link.link_id, "set": updated.to_dict()}
    normalized["set"] = {k: normalized["set"][k] for k in fields}
    return new, normalized, [("modify_link", {"link_id": link.link_id, "set": prior})]


def _h_set_comment(project: Project, payload: dict, ctx: _Ctx):
    link = _require_link(project, str(payload["link_id"]))
    comment = str(payload.get("comment", "") or "")
    updated = replace(link, comment=comment)
    new = replace(
        project,
        links=tuple(updated if l.link_id == link.link_id else l for l in project.links),
    )
    inverse = [("set_comment", {"link_id": link.link_id, "comment": link.comment})]
    return new, {"link_id": link.link_id, "comment": comment}, inverse


def _h_tag_technique(project: Project, payload: dict, ctx: _Ctx):
    link = _require_link(project, str(payload["link_id"]))
    name = str(payload["technique"])
    if name in link.techniques:
        raise ValidationRejection(
            f"link {link.link_id} already tagged {name!r}",
            [Violation("duplicate-technique-tag", link.link_id, f"already tagged {name!r}")],
        )
    updated = replace(link, techniques=link.techniques | {name})
    new = replace(
        project,
        links=tuple(updated if l.link_id == link.link_id else l for l in project.links),
    )
    inverse = [("untag_technique", {"link_id": link.link_id, "technique": name})]
    return new, {"link_id": link.link_id, "technique": name}, inverse


def _h_untag_technique(project: Project, payload: dict, ctx: _Ctx):
    link = _require_link(project, str(payload["link_id"]))
    name = str(payload["technique"])
    if name not in link.techniques:
        raise ValidationRejection(
            f"link {link.link_id} is not tagged {name!r}",
            [Violation("missing-technique-tag", link.link_id, f"not tagged {name!r}")],
        )
    updated = replace(link, techniques=link.techniques - {name})
    new = replace(
        project,
        links=tuple(updated if l.link_id == link.link_id else l for l in project.links),
    )
    inverse = [("tag_technique", {"link_id": link.link_id, "technique": name})]
    return new, {"link_id": link.link_id, "technique": name}, inverse


def _h_set_metadata(project: Project, payload: dict, ctx: _Ctx):
    role = str(payload["role"])
    doc = project.document(role)
    merged = doc.meta.to_dict()
    incoming = payload.get("meta", {})
    unknown = sorted(set(incoming) - set(merged))
    if unknown:
        raise ValidationRejection(
            f"unknown metadata fields: {', '.join(unknown)}",
            [Violation("bad-field", role, f"unknown metadata field {n!r}") for n in unknown],
        )
    merged.update({k: str(v or "") for k, v in incoming.items()})
    new = _set_doc(project, replace(doc, meta=DocumentMeta.from_dict(merged)))
    inverse = [("set_metadata", {"role": role, "meta": doc.meta.to_dict()})]
    return new, {"role": role, "meta": merged}, inverse


def _h_attach_sentences(project: Project, payload: dict, ctx: _Ctx):
    role = str(payload["role"])
    doc = project.document(role)
    para = _require_paragraph(doc, str(payload["para_id"]))
    texts = [str(t) for t in payload.get("texts", ())]
    updated = attach_sentences(para, texts)
    new = _set_paragraph(project, role, updated)
    if para.sentences:
        inverse = [
            (
                "attach_sentences",
                {
                    "role": role,
                    "para_id": para.para_id,
                    "texts": [s.text for s in para.sentences],
                },
            )
        ]
    else:
        inverse = [("detach_sentences", {"role": role, "para_id": para.para_id})]
    normalized = {"role": role, "para_id": para.para_id, "texts": texts}
    return new, normalized, inverse


def _h_detach_sentences(project: Project, payload: dict, ctx: _Ctx):
    role = str(payload["role"])
    doc = project.document(role)
    para = _require_paragraph(doc, str(payload["para_id"]))
    updated = replace(para, sentences=())
    new = _set_paragraph(project, role, updated)
    inverse = [
        (
            "attach_sentences",
            {
                "role": role,
                "para_id": para.para_id,
                "texts": [s.text for s in para.sentences],
            },
        )
    ]
    return new, {"role": role, "para_id": para.para_id}, inverse


def _h_upsert_technique_def(project: Project, payload: dict, ctx: _Ctx):
    data = payload["technique"]
    tech = TechniqueDef.from_dict(data)
    prior = project.technique(tech.name)
    others = tuple(t for t in project.taxonomy if t.name != tech.name)
    taxonomy = tuple(
        sorted(others + (tech,), key=lambda t: (t.name.casefold(), t.name))
    )
    new = replace(project, taxonomy=taxonomy)
    if prior is None:
        inverse = [("delete_technique_def", {"name": tech.name})]
    else:
        inverse = [("upsert_technique_def", {"technique": prior.to_dict()})]
    return new, {"technique": tech.to_dict()}, inverse


def _h_delete_technique_def(project: Project, payload: dict, ctx: _Ctx):
    name = str(payload["name"])
    prior = project.technique(name)
    if prior is None:
        raise ValidationRejection(
            f"technique {name!r} does not exist",
            [Violation("unknown-technique", name, "technique not in taxonomy")],
        )
    new = replace(project, taxonomy=tuple(t for t in project.taxonomy if t.name != name))
    inverse = [("upsert_technique_def", {"technique": prior.to_dict()})]
    return new, {"name": name}, inverse


def _h_upsert_template(project: Project, payload: dict, ctx: _Ctx):
    tpl = PromptTemplate.from_dict(payload["template"])
    if not tpl.template_id:
        raise ValidationRejection(
            "template_id must be non-empty",
            [Violation("bad-template", "", "template_id must be non-empty")],
        )
    names = set(llm.template_placeholders(tpl.body))
    missing = sorted(tpl.required_placeholders - names)
    if missing:
        raise ValidationRejection(
            f"required placeholders absent from body: {', '.join(missing)}",
            [
                Violation(
                    "template-required-placeholders",
                    tpl.template_id,
                    f"placeholder {{{{{n}}}}} not in body",
                )
                for n in missing
            ],
        )
    prior = project.template(tpl.template_id)
    others = tuple(t for t in project.prompt_templates if t.template_id != tpl.template_id)
    templates = tuple(sorted(others + (tpl,), key=lambda t: t.template_id))
    new = replace(project, prompt_templates=templates)
    if prior is None:
        inverse = [("delete_template", {"template_id": tpl.template_id})]
    else:
        inverse = [("upsert_template", {"template": prior.to_dict()})]
    return new, {"template": tpl.to_dict()}, inverse


def _h_delete_template(project: Project, payload: dict, ctx: _Ctx):
    template_id = str(payload["template_id"])
    prior = project.template(template_id)
    if prior is None:
        raise ValidationRejection(
            f"template {template_id!r} does not exist",
            [Violation("unknown-template", template_id, "template does not exist")],
        )
    new = replace(
        project,
        prompt_templates=tuple(
            t for t in project.prompt_templates if t.template_id != template_id
        ),
    )
    inverse = [("upsert_template", {"template": prior.to_dict()})]
    return new, {"template_id": template_id}, inverse


def _h_accept_suggestion(project: Project, payload: dict, ctx: _Ctx):
    """Apply a whole suggestion batch: re-segment both paragraphs, replace
    touched sentence-level links, add the suggested ones. One command, so a
    single undo reverts the batch."""
    src_para_id = str(payload["src_para_id"])
    tgt_para_id = str(payload["tgt_para_id"])
    src_para = _require_paragraph(project.source_doc, src_para_id)
    tgt_para = _require_paragraph(project.target_doc, tgt_para_id)
    origin = str(payload.get("origin", "llm"))
    source_texts = [str(t) for t in payload["source_texts"]]
    target_texts = [str(t) for t in payload["target_texts"]]

    src_prefix = f"{src_para_id}-s"
    tgt_prefix = f"{tgt_para_id}-s"
    removed = [
        l
        for l in project.links
        if l.level == "sentence"
        and (
            any(x.startswith(src_prefix) for x in l.source_ids)
            or any(x.startswith(tgt_prefix) for x in l.target_ids)
        )
    ]
    removed_ids = {l.link_id for l in removed}
    kept = tuple(l for l in project.links if l.link_id not in removed_ids)

    new = replace(project, links=kept)
    new = _set_paragraph(new, "source", attach_sentences(src_para, source_texts))
    new = _set_paragraph(new, "target", attach_sentences(tgt_para, target_texts))

    # Suggested link IDs are payload-local labels resolved positionally to
    # the renumbered sentences; the stored payload keeps the resolved form.
    src_ids = [f"{src_para_id}-s{k + 1}" for k in range(len(source_texts))]
    tgt_ids = [f"{tgt_para_id}-s{k + 1}" for k in range(len(target_texts))]
    src_map = {str(s["id"]): src_ids[k] for k, s in enumerate(payload.get("source_sentences", []))}
    tgt_map = {str(s["id"]): tgt_ids[k] for k, s in enumerate(payload.get("target_sentences", []))}

    added: list[AlignmentLink] = []
    normalized_links: list[dict[str, Any]] = []
    for item in payload.get("links", []):
        link_id = str(item.get("link_id") or "") or ctx.alloc_link_id()
        source_ids = frozenset(
            src_map.get(str(x), str(x)) for x in item.get("source_ids", ())
        )
        target_ids = frozenset(
            tgt_map.get(str(x), str(x)) for x in item.get("target_ids", ())
        )
        confidence = item.get("confidence")
        link = AlignmentLink(
            link_id=link_id,
            level="sentence",
            source_ids=source_ids,
            target_ids=target_ids,
            origin=origin,
            confidence=None if confidence is None else float(confidence),
        )
        added.append(link)
        normalized_links.append(
            {
                "link_id": link_id,
                "source_ids": sorted(source_ids),
                "target_ids": sorted(target_ids),
                "confidence": link.confidence,
            }
        )
    new = replace(new, links=_sorted_links(new.links + tuple(added)))

    normalized = {
        "src_para_id": src_para_id,
        "tgt_para_id": tgt_para_id,
        "origin": origin,
        "source_texts": source_texts,
        "target_texts": target_texts,
        "links": normalized_links,
    }
    inverse: list = [("remove_link", {"link_id": l.link_id}) for l in added]
    if src_para.sentences:
        inverse.append(
            (
                "attach_sentences",
                {
                    "role": "source",
                    "para_id": src_para_id,
                    "texts": [s.text for s in src_para.sentences],
                },
            )
        )
    else:
        inverse.append(("detach_sentences", {"role": "source", "para_id": src_para_id}))
    if tgt_para.sentences:
        inverse.append(
            (
                "attach_sentences",
                {
                    "role": "target",
                    "para_id": tgt_para_id,
                    "texts": [s.text for s in tgt_para.sentences],
                },
            )
        )
    else:
        inverse.append(("detach_sentences", {"role": "target", "para_id": tgt_para_id}))
    inverse.extend(("add_link", l.to_dict()) for l in removed)
    return new, normalized, inverse


_HANDLERS: dict[str, Handler] = {
    "add_link": _h_add_link,
    "remove_link": _h_remove_link,
    "modify_link": _h_modify_link,
    "set_comment": _h_set_comment,
    "tag_technique": _h_tag_technique,
    "untag_technique": _h_untag_technique,
    "set_metadata": _h_set_metadata,
    "attach_sentences": _h_attach_sentences,
    "detach_sentences": _h_detach_sentences,
    "upsert_technique_def": _h_upsert_technique_def,
    "delete_technique_def": _h_delete_technique_def,
    "upsert_template": _h_upsert_template,
    "delete_template": _h_delete_template,
    "accept_suggestion": _h_accept_suggestion,
}


class Store:
    """Single-file embedded store; one writer at a time, serialized reads.

    ``synchronous`` maps to the SQLite pragma: NORMAL (default) survives
    process crashes under WAL; FULL additionally survives power loss at a
    per-commit fsync cost.
    """

    def __init__(self, workspace: str | Path, synchronous: str = "NORMAL"):
        self.workspace = Path(workspace)
        self.workspace.mkdir(parents=True, exist_ok=True)
        self.db_path = self.workspace / "annotations.db"
        self.log_path = self.workspace / "project.log"
        if synchronous not in ("NORMAL", "FULL"):
            raise ValueError("synchronous must be NORMAL or FULL")
        self._lock = threading.RLock()
        # isolation_level=None: autocommit, transactions via explicit BEGIN.
        self._conn = sqlite3.connect(
            str(self.db_path), check_same_thread=False, isolation_level=None
        )
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute(f"PRAGMA synchronous={synchronous}")
        self._conn.execute("PRAGMA busy_timeout=10000")
        self._conn.executescript(_SCHEMA)
        with self._txn():
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key='schema_version'"
            ).fetchone()
            if row is None:
                self._conn.execute(
                    "INSERT INTO meta(key, value) VALUES('schema_version', ?)",
                    (str(SCHEMA_VERSION),),
                )
                self._conn.execute(
                    "INSERT INTO meta(key, value) VALUES('next_project_seq', '1')"
                )
            elif int(row[0]) != SCHEMA_VERSION:
                raise StorageError(
                    f"workspace schema version {row[0]} unsupported "
                    f"(expected {SCHEMA_VERSION})"
                )

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    @contextmanager
    def _txn(self):
        with self._lock:
            try:
                self._conn.execute("BEGIN IMMEDIATE")
                yield
                self._conn.commit()
            except BaseException:
                self._conn.rollback()
                raise

    def log(self, project_id: str, message: str) -> None:
        line = f"{_now()} [{project_id}] {message}\n"
        with self._lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line)

    # -- CRUD ---------------------------------------------------------------

    def create_project(
        self,
        name: str,
        source_meta: dict[str, Any] | None = None,
        target_meta: dict[str, Any] | None = None,
    ) -> str:
        src = DocumentMeta.from_dict(source_meta or {})
        tgt = DocumentMeta.from_dict(target_meta or {})
        with self._txn():
            seq = int(
                self._conn.execute(
                    "SELECT value FROM meta WHERE key='next_project_seq'"
                ).fetchone()[0]
            )
            project_id = f"prj{seq}"
            self._conn.execute(
                "UPDATE meta SET value=? WHERE key='next_project_seq'", (str(seq + 1),)
            )
            now = _now()
            self._conn.execute(
                "INSERT INTO projects VALUES(?,?,0,1,1,'{}',?,?)",
                (project_id, name, now, now),
            )
            for role in ("source", "target"):
                meta = src if role == "source" else tgt
                self._conn.execute(
                    "INSERT INTO documents VALUES(?,?,?,?)",
                    (project_id, role, f"{role}-doc", json.dumps(meta.to_dict())),
                )
            project = self._load_locked(project_id)
            violations = validate_project(project)
            if violations:
                raise ValidationRejection("project metadata invalid", violations)
        self.log(project_id, f"created project {name!r}")
        return project_id

    def resolve(self, ref: str) -> str:
        """Project reference to ID: exact ID first, then unique name."""
        with self._lock:
            row = self._conn.execute(
                "SELECT project_id FROM projects WHERE project_id=?", (ref,)
            ).fetchone()
            if row:
                return row[0]
            rows = self._conn.execute(
                "SELECT project_id FROM projects WHERE name=?", (ref,)
            ).fetchall()
            if len(rows) == 1:
                return rows[0][0]
            raise UnknownProjectError(
                f"no project with id or unique name {ref!r}"
            )

    def list_projects(self) -> list[dict[str, Any]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT project_id, name, revision, created_at, updated_at "
                "FROM projects ORDER BY project_id"
            ).fetchall()
            out = []
            for project_id, name, revision, created_at, updated_at in rows:
                counts = self._conn.execute(
                    "SELECT "
                    "(SELECT COUNT(*) FROM links WHERE project_id=?),"
                    "(SELECT COUNT(*) FROM commands WHERE project_id=? AND state='applied'),"
                    "(SELECT COUNT(*) FROM commands WHERE project_id=? AND state='undone')",
                    (project_id, project_id, project_id),
                ).fetchone()
                out.append(
                    {
                        "project_id": project_id,
                        "name": name,
                        "revision": revision,
                        "created_at": created_at,
                        "updated_at": updated_at,
                        "link_count": counts[0],
                        "undo_depth": counts[1],
                        "redo_depth": counts[2],
                    }
                )
            return out

    def _project_row(self, project_id: str) -> tuple:
        row = self._conn.execute(
            "SELECT project_id, name, revision, next_link_seq, next_command_seq, "
            "config_json, created_at, updated_at FROM projects WHERE project_id=?",
            (project_id,),
        ).fetchone()
        if row is None:
            raise UnknownProjectError(f"project {project_id!r} does not exist")
        return row

    def revision(self, project_id: str) -> int:
        with self._lock:
            return int(self._project_row(project_id)[2])

    def undo_depth(self, project_id: str) -> int:
        with self._lock:
            self._project_row(project_id)
            return self._conn.execute(
                "SELECT COUNT(*) FROM commands WHERE project_id=? AND state='applied'",
                (project_id,),
            ).fetchone()[0]

    def redo_depth(self, project_id: str) -> int:
        with self._lock:
            self._project_row(project_id)
            return self._conn.execute(
                "SELECT COUNT(*) FROM commands WHERE project_id=? AND state='undone'",
                (project_id,),
            ).fetchone()[0]

    def get_config(self, project_id: str) -> dict[str, Any]:
        with self._lock:
            return json.loads(self._project_row(project_id)[5])

    def set_config(self, project_id: str, config: dict[str, Any]) -> None:
        with self._txn():
            self._project_row(project_id)
            self._conn.execute(
                "UPDATE projects SET config_json=?, updated_at=? WHERE project_id=?",
                (json.dumps(config, sort_keys=True), _now(), project_id),
            )

    def _load_doc_locked(self, project_id: str, role: str) -> Document:
        doc_id, meta_json = self._conn.execute(
            "SELECT doc_id, meta_json FROM documents WHERE project_id=? AND role=?",
            (project_id, role),
        ).fetchone()
        paragraphs = []
        for idx, para_id, raw_text in self._conn.execute(
            "SELECT idx, para_id, raw_text FROM paragraphs "
            "WHERE project_id=? AND role=? ORDER BY idx",
            (project_id, role),
        ):
            sentences = tuple(
                Sentence(sent_id, text)
                for sent_id, text in self._conn.execute(
                    "SELECT sent_id, text FROM sentences "
                    "WHERE project_id=? AND role=? AND para_idx=? ORDER BY idx",
                    (project_id, role, idx),
                )
            )
            paragraphs.append(Paragraph(para_id, raw_text, sentences))
        return Document(
            doc_id=doc_id,
            role=role,
            meta=DocumentMeta.from_dict(json.loads(meta_json)),
            paragraphs=tuple(paragraphs),
        )

    def _load_locked(self, project_id: str) -> Project:
        row = self._project_row(project_id)
        links = []
        for link_id, level, src_json, tgt_json, comment, origin, confidence in self._conn.execute(
            "SELECT link_id, level, source_ids_json, target_ids_json, comment, "
            "origin, confidence FROM links WHERE project_id=?",
            (project_id,),
        ):
            techniques = frozenset(
                name
                for (name,) in self._conn.execute(
                    "SELECT name FROM link_techniques WHERE project_id=? AND link_id=?",
                    (project_id, link_id),
                )
            )
            links.append(
                AlignmentLink(
                    link_id=link_id,
                    level=level,
                    source_ids=frozenset(json.loads(src_json)),
                    target_ids=frozenset(json.loads(tgt_json)),
                    comment=comment,
                    techniques=techniques,
                    origin=origin,
                    confidence=confidence,
                )
            )
        taxonomy = tuple(
            TechniqueDef(name, description, tuple(json.loads(examples)))
            for name, description, examples in self._conn.execute(
                "SELECT name, description, examples_json FROM techniques "
                "WHERE project_id=?",
                (project_id,),
            )
        )
        taxonomy = tuple(sorted(taxonomy, key=lambda t: (t.name.casefold(), t.name)))
        templates = tuple(
            PromptTemplate(
                template_id=template_id,
                name=name,
                body=body,
                required_placeholders=frozenset(json.loads(required)),
                description=description,
            )
            for template_id, name, body, required, description in self._conn.execute(
                "SELECT template_id, name, body, required_json, description "
                "FROM templates WHERE project_id=? ORDER BY template_id",
                (project_id,),
            )
        )
        return Project(
            project_id=project_id,
            name=row[1],
            source_doc=self._load_doc_locked(project_id, "source"),
            target_doc=self._load_doc_locked(project_id, "target"),
            links=_sorted_links(links),
            taxonomy=taxonomy,
            prompt_templates=templates,
            created_at=row[6],
            updated_at=row[7],
        )

    def load_project(self, project_id: str) -> Project:
        with self._lock:
            return self._load_locked(project_id)

    def import_document(
        self,
        project_id: str,
        role: str,
        text: str,
        meta: dict[str, Any] | None = None,
        replace_existing: bool = False,
    ) -> Document:
        if role not in ("source", "target"):
            raise ValidationRejection(
                f"role must be source or target, not {role!r}",
                [Violation("bad-role", role, "role must be source or target")],
            )
        with self._txn():
            project = self._load_locked(project_id)
            doc = project.document(role)
            if doc.paragraphs and not replace_existing:
                raise DuplicateRoleImportError(
                    f"{role} document already imported; pass replace to overwrite"
                )
            blocks = split_paragraphs(nfc(text))
            paragraphs = tuple(
                Paragraph(para_id=f"p{i + 1}", raw_text=block)
                for i, block in enumerate(blocks)
            )
            merged = doc.meta.to_dict()
            if meta:
                unknown = sorted(set(meta) - set(merged))
                if unknown:
                    raise ValidationRejection(
                        f"unknown metadata fields: {', '.join(unknown)}",
                        [
                            Violation("bad-field", role, f"unknown metadata field {n!r}")
                            for n in unknown
                        ],
                    )
                merged.update({k: str(v or "") for k, v in meta.items()})
            new_doc = Document(
                doc_id=doc.doc_id,
                role=role,
                meta=DocumentMeta.from_dict(merged),
                paragraphs=paragraphs,
            )
            new_project = _set_doc(project, new_doc)
            if replace_existing:
                # Re-import restarts the content: links into the old
                # document and the command history cannot stay valid.
                new_project = replace(new_project, links=())
                self._conn.execute(
                    "DELETE FROM commands WHERE project_id=?", (project_id,)
                )
            violations = validate_project(new_project)
            if violations:
                raise ValidationRejection("imported document invalid", violations)
            self._write_project_locked(project_id, new_project)
            self._bump_revision_locked(project_id)
        self.log(
            project_id,
            f"imported {role} document: {len(paragraphs)} paragraphs"
            + (" (replaced)" if replace_existing else ""),
        )
        return new_doc

    # -- persistence of a project snapshot ----------------------------------

    def _write_project_locked(self, project_id: str, project: Project) -> None:
        c = self._conn
        for table in ("paragraphs", "sentences", "links", "link_techniques", "techniques", "templates"):
            c.execute(f"DELETE FROM {table} WHERE project_id=?", (project_id,))
        c.execute("UPDATE projects SET name=? WHERE project_id=?", (project.name, project_id))
        for doc in (project.source_doc, project.target_doc):
            c.execute(
                "UPDATE documents SET doc_id=?, meta_json=? WHERE project_id=? AND role=?",
                (doc.doc_id, json.dumps(doc.meta.to_dict()), project_id, doc.role),
            )
            for idx, para in enumerate(doc.paragraphs):
                c.execute(
                    "INSERT INTO paragraphs VALUES(?,?,?,?,?)",
                    (project_id, doc.role, idx, para.para_id, para.raw_text),
                )
                for k, sent in enumerate(para.sentences):
                    c.execute(
                        "INSERT INTO sentences VALUES(?,?,?,?,?,?)",
                        (project_id, doc.role, idx, k, sent.sent_id, sent.text),
                    )
        for link in project.links:
            c.execute(
                "INSERT INTO links VALUES(?,?,?,?,?,?,?,?)",
                (
                    project_id,
                    link.link_id,
                    link.level,
                    json.dumps(sorted(link.source_ids)),
                    json.dumps(sorted(link.target_ids)),
                    link.comment,
                    link.origin,
                    link.confidence,
                ),
            )
            for name in sorted(link.techniques):
                c.execute(
                    "INSERT INTO link_techniques VALUES(?,?,?)",
                    (project_id, link.link_id, name),
                )
        for tech in project.taxonomy:
            c.execute(
                "INSERT INTO techniques VALUES(?,?,?,?)",
                (project_id, tech.name, tech.description, json.dumps(list(tech.examples))),
            )
        for tpl in project.prompt_templates:
            c.execute(
                "INSERT INTO templates VALUES(?,?,?,?,?,?)",
                (
                    project_id,
                    tpl.template_id,
                    tpl.name,
                    tpl.body,
                    json.dumps(sorted(tpl.required_placeholders)),
                    tpl.description,
                ),
            )

    def _bump_revision_locked(self, project_id: str) -> int:
        self._conn.execute(
            "UPDATE projects SET revision=revision+1, updated_at=? WHERE project_id=?",
            (_now(), project_id),
        )
        return int(
            self._conn.execute(
                "SELECT revision FROM projects WHERE project_id=?", (project_id,)
            ).fetchone()[0]
        )

    # -- the command log ----------------------------------------------------

    def _run_steps(self, project: Project, steps, ctx: _Ctx) -> Project:
        for kind, payload in steps:
            handler = _HANDLERS[kind]
            project, _, _ = handler(project, payload, ctx)
        return project

    def apply(self, project_id: str, kind: str, payload: dict[str, Any]) -> tuple[Project, int]:
        """Validate, persist, and record one command; atomic and durable."""
        if kind not in _HANDLERS:
            raise ValidationRejection(
                f"unknown command kind {kind!r}",
                [Violation("bad-command-kind", kind, "unknown command kind")],
            )
        with self._txn():
            row = self._project_row(project_id)
            ctx = _Ctx(next_link_seq=int(row[3]))
            project = self._load_locked(project_id)
            new_project, normalized, inverse = _HANDLERS[kind](project, payload, ctx)
            violations = validate_project(new_project)
            if violations:
                raise ValidationRejection(
                    f"command {kind} leaves the project invalid", violations
                )
            self._write_project_locked(project_id, new_project)
            command_id = int(row[4])
            self._conn.execute(
                "DELETE FROM commands WHERE project_id=? AND state='undone'",
                (project_id,),
            )
            self._conn.execute(
                "INSERT INTO commands VALUES(?,?,?,?,?,?,?)",
                (
                    project_id,
                    command_id,
                    kind,
                    json.dumps(normalized, sort_keys=True),
                    json.dumps(inverse, sort_keys=True),
                    "applied",
                    _now(),
                ),
            )
            applied = self._conn.execute(
                "SELECT COUNT(*) FROM commands WHERE project_id=? AND state='applied'",
                (project_id,),
            ).fetchone()[0]
            if applied > UNDO_CAP:
                self._conn.execute(
                    "DELETE FROM commands WHERE project_id=? AND state='applied' "
                    "AND command_id IN (SELECT command_id FROM commands "
                    "WHERE project_id=? AND state='applied' ORDER BY command_id "
                    "LIMIT ?)",
                    (project_id, project_id, applied - UNDO_CAP),
                )
            self._conn.execute(
                "UPDATE projects SET next_link_seq=?, next_command_seq=? "
                "WHERE project_id=?",
                (ctx.next_link_seq, command_id + 1, project_id),
            )
            revision = self._bump_revision_locked(project_id)
            result = self._load_locked(project_id)
        self.log(project_id, f"applied command {command_id} {kind}")
        return result, revision

    def command_log(self, project_id: str) -> list[dict[str, Any]]:
        """Command history oldest-first (applied entries, then undone)."""
        with self._lock:
            self._project_row(project_id)
            rows = self._conn.execute(
                "SELECT command_id, kind, payload_json, state, created_at "
                "FROM commands WHERE project_id=? ORDER BY command_id",
                (project_id,),
            ).fetchall()
        return [
            {
                "command_id": command_id,
                "kind": kind,
                "payload": json.loads(payload_json),
                "state": state,
                "created_at": created_at,
            }
            for command_id, kind, payload_json, state, created_at in rows
        ]

    def undo(self, project_id: str) -> tuple[Project, int]:
        with self._txn():
            row = self._project_row(project_id)
            last = self._conn.execute(
                "SELECT command_id, inverse_json FROM commands "
                "WHERE project_id=? AND state='applied' "
                "ORDER BY command_id DESC LIMIT 1",
                (project_id,),
            ).fetchone()
            if last is None:
                raise EmptyUndoStackError("nothing to undo")
            command_id, inverse_json = last
            ctx = _Ctx(next_link_seq=int(row[3]))
            project = self._load_locked(project_id)
            restored = self._run_steps(project, json.loads(inverse_json), ctx)
            violations = validate_project(restored)
            if violations:
                raise StorageError(
                    f"undo of command {command_id} produced an invalid project"
                )
            self._write_project_locked(project_id, restored)
            self._conn.execute(
                "UPDATE commands SET state='undone' WHERE project_id=? AND command_id=?",
                (project_id, command_id),
            )
            self._conn.execute(
                "UPDATE projects SET next_link_seq=? WHERE project_id=?",
                (ctx.next_link_seq, project_id),
            )
            revision = self._bump_revision_locked(project_id)
            result = self._load_locked(project_id)
        self.log(project_id, f"undid command {command_id}")
        return result, revision

    def redo(self, project_id: str) -> tuple[Project, int]:
        with self._txn():
            row = self._project_row(project_id)
            first = self._conn.execute(
                "SELECT command_id, kind, payload_json FROM commands "
                "WHERE project_id=? AND state='undone' "
                "ORDER BY command_id ASC LIMIT 1",
                (project_id,),
            ).fetchone()
            if first is None:
                raise EmptyRedoStackError("nothing to redo")
            command_id, kind, payload_json = first
            ctx = _Ctx(next_link_seq=int(row[3]))
            project = self._load_locked(project_id)
            redone, _, _ = _HANDLERS[kind](project, json.loads(payload_json), ctx)
            violations = validate_project(redone)
            if violations:
                raise StorageError(
                    f"redo of command {command_id} produced an invalid project"
                )
            self._write_project_locked(project_id, redone)
            self._conn.execute(
                "UPDATE commands SET state='applied' WHERE project_id=? AND command_id=?",
                (project_id, command_id),
            )
            self._conn.execute(
                "UPDATE projects SET next_link_seq=? WHERE project_id=?",
                (ctx.next_link_seq, project_id),
            )
            revision = self._bump_revision_locked(project_id)
            result = self._load_locked(project_id)
        self.log(project_id, f"redid command {command_id}")
        return result, revision
