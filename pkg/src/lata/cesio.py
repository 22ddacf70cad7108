"""Byte-deterministic zipped stand-off XML export and lossless re-import.

A bundle is exactly three members at the archive root: source.xml,
target.xml, alignment.xml. Document files carry header metadata plus
``<p id>``/``<s id>`` bodies; the alignment file carries two ``<linkGrp>``
elements whose ``<link>`` rows point at segment IDs via
``xtargets="<src ids> ; <tgt ids>"``. Emission is hand-rolled so equal
projects always serialize to identical archives (fixed zip timestamps,
fixed attribute and member order, LF endings, 2-space indent).
"""
from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass
from pathlib import Path
from xml.etree import ElementTree as ET

from .errors import (
    BundleValidationError,
    DanglingIdError,
    InvalidXmlTextError,
    MalformedXmlError,
    ValidationRejection,
    WrongMemberSetError,
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
    link_sort_key,
    validate_project,
)

MEMBERS = ("source.xml", "target.xml", "alignment.xml")

_XML_NS = "{http://www.w3.org/XML/1998/namespace}"

# (XML element tag, DocumentMeta field) pairs, in emission order.
_BIBL_FIELDS = (
    ("author", "author"),
    ("genre", "genre"),
    ("date", "publication_date"),
    ("publisher", "publisher"),
    ("domain", "domain"),
    ("docType", "document_type"),
    ("sourceUrl", "source_url"),
)


def _check_chars(text: str) -> str:
    for ch in text:
        o = ord(ch)
        if o < 0x20 and ch not in "\t\n\r":
            raise InvalidXmlTextError(
                f"code point U+{o:04X} cannot be carried by XML 1.0, even escaped"
            )
    return text


def _esc_content(text: str) -> str:
    return (
        _check_chars(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
        .replace("'", "&apos;")
        .replace("\r", "&#13;")
    )


def _esc_attr(text: str) -> str:
    # Tab and newline must be numeric or attribute-value normalization
    # would fold them into spaces on re-parse.
    return (
        _esc_content(text).replace("\n", "&#10;").replace("\t", "&#9;")
    )


def _leaf(indent: int, tag: str, text: str) -> str:
    pad = " " * indent
    if text == "":
        return f"{pad}<{tag}/>"
    return f"{pad}<{tag}>{_esc_content(text)}</{tag}>"


def project_slug(name: str) -> str:
    slug = "".join(c.lower() if c.isalnum() else "-" for c in name)
    return slug or "project"


def default_bundle_name(project: Project) -> str:
    return project_slug(project.name) + ".zip"


def emit_document_xml(doc: Document) -> str:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(f'<cesDoc version="1.0" xml:lang="{_esc_attr(doc.meta.language)}">')
    lines.append("  <cesHeader>")
    lines.append("    <fileDesc>")
    lines.append("      <titleStmt>")
    lines.append(_leaf(8, "title", doc.meta.title))
    lines.append("      </titleStmt>")
    meta = doc.meta.to_dict()
    bibl = [(tag, meta[field]) for tag, field in _BIBL_FIELDS if meta[field]]
    if bibl:
        lines.append("      <bibl>")
        for tag, value in bibl:
            lines.append(_leaf(8, tag, value))
        lines.append("      </bibl>")
    lines.append("    </fileDesc>")
    lines.append("  </cesHeader>")
    if not doc.paragraphs:
        lines.append("  <body/>")
    else:
        lines.append("  <body>")
        for para in doc.paragraphs:
            pid = _esc_attr(para.para_id)
            if para.sentences:
                lines.append(f'    <p id="{pid}">')
                for sent in para.sentences:
                    lines.append(
                        f'      <s id="{_esc_attr(sent.sent_id)}">'
                        f"{_esc_content(sent.text)}</s>"
                    )
                lines.append("    </p>")
            elif para.raw_text == "":
                lines.append(f'    <p id="{pid}"/>')
            else:
                lines.append(f'    <p id="{pid}">{_esc_content(para.raw_text)}</p>')
        lines.append("  </body>")
    lines.append("</cesDoc>")
    return "\n".join(lines) + "\n"


def _position_maps(project: Project, level: str) -> tuple[dict[str, int], dict[str, int]]:
    if level == "paragraph":
        src = project.source_doc.paragraph_ids()
        tgt = project.target_doc.paragraph_ids()
    else:
        src = project.source_doc.sentence_ids()
        tgt = project.target_doc.sentence_ids()
    return (
        {sid: i for i, sid in enumerate(src)},
        {sid: i for i, sid in enumerate(tgt)},
    )


def _emit_link(link: AlignmentLink, link_id: str, src_pos: dict, tgt_pos: dict) -> str:
    src = " ".join(sorted(link.source_ids, key=lambda i: src_pos.get(i, 1 << 30)))
    tgt = " ".join(sorted(link.target_ids, key=lambda i: tgt_pos.get(i, 1 << 30)))
    parts = [f'id="{_esc_attr(link_id)}"', f'xtargets="{_esc_attr(src)} ; {_esc_attr(tgt)}"']
    if link.techniques:
        parts.append(f'techniques="{_esc_attr(";".join(sorted(link.techniques)))}"')
    if link.comment:
        parts.append(f'comment="{_esc_attr(link.comment)}"')
    parts.append(f'origin="{_esc_attr(link.origin)}"')
    if link.confidence is not None:
        parts.append(f'confidence="{repr(link.confidence)}"')
    return "      <link " + " ".join(parts) + "/>"


def emit_alignment_xml(project: Project) -> str:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append('<cesAlign version="1.0">')
    lines.append("  <cesHeader>")
    lines.append(_leaf(4, "title", project.name))
    lines.append("    <translations>")
    for doc in (project.source_doc, project.target_doc):
        lines.append(
            f'      <translation role="{doc.role}" '
            f'xml:lang="{_esc_attr(doc.meta.language)}"/>'
        )
    lines.append("    </translations>")
    if project.taxonomy:
        lines.append("    <techniqueList>")
        for tech in project.taxonomy:
            head = f'      <technique name="{_esc_attr(tech.name)}"'
            if not tech.description and not tech.examples:
                lines.append(head + "/>")
                continue
            lines.append(head + ">")
            if tech.description:
                lines.append(_leaf(8, "description", tech.description))
            for example in tech.examples:
                lines.append(_leaf(8, "example", example))
            lines.append("      </technique>")
        lines.append("    </techniqueList>")
    if project.prompt_templates:
        lines.append("    <templateList>")
        for tpl in project.prompt_templates:
            lines.append(
                f'      <template id="{_esc_attr(tpl.template_id)}" '
                f'name="{_esc_attr(tpl.name)}">'
            )
            lines.append(_leaf(8, "body", tpl.body))
            for name in sorted(tpl.required_placeholders):
                lines.append(_leaf(8, "required", name))
            if tpl.description:
                lines.append(_leaf(8, "description", tpl.description))
            lines.append("      </template>")
        lines.append("    </templateList>")
    lines.append("  </cesHeader>")
    lines.append("  <linkList>")
    for level, prefix in (("paragraph", "lp"), ("sentence", "ls")):
        src_pos, tgt_pos = _position_maps(project, level)
        group = sorted(
            (l for l in project.links if l.level == level),
            key=lambda l: link_sort_key(l, src_pos, tgt_pos),
        )
        if not group:
            lines.append(f'    <linkGrp type="{level}"/>')
            continue
        lines.append(f'    <linkGrp type="{level}">')
        for k, link in enumerate(group):
            lines.append(_emit_link(link, f"{prefix}{k + 1}", src_pos, tgt_pos))
        lines.append("    </linkGrp>")
    lines.append("  </linkList>")
    lines.append("</cesAlign>")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExportBundle:
    path: Path
    members: tuple[str, ...] = MEMBERS


def export_bytes(project: Project) -> bytes:
    violations = validate_project(project)
    if violations:
        raise ValidationRejection("cannot export an invalid project", violations)
    members = {
        "source.xml": emit_document_xml(project.source_doc),
        "target.xml": emit_document_xml(project.target_doc),
        "alignment.xml": emit_alignment_xml(project),
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
        for name in MEMBERS:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.create_system = 3
            info.external_attr = 0o644 << 16
            info.compress_type = zipfile.ZIP_STORED
            zf.writestr(info, members[name].encode("utf-8"))
    return buf.getvalue()


def export(project: Project, out_path: str | Path) -> ExportBundle:
    out = Path(out_path)
    out.write_bytes(export_bytes(project))
    return ExportBundle(path=out)


def _parse_member(name: str, data: bytes) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedXmlError(
            f"{name}: {exc.msg}", line=line, column=column
        ) from exc


def _text(elem: ET.Element | None) -> str:
    if elem is None or elem.text is None:
        return ""
    return elem.text


def _doc_from_xml(root: ET.Element, role: str, member: str) -> Document:
    if root.tag != "cesDoc":
        raise BundleValidationError(f"{member}: root element must be cesDoc")
    language = root.get(f"{_XML_NS}lang", "")
    title = _text(root.find("cesHeader/fileDesc/titleStmt/title"))
    fields = {"title": title, "language": language}
    bibl = root.find("cesHeader/fileDesc/bibl")
    for tag, field in _BIBL_FIELDS:
        fields[field] = _text(bibl.find(tag)) if bibl is not None else ""
    body = root.find("body")
    if body is None:
        raise BundleValidationError(f"{member}: body element missing")
    paragraphs = []
    for p in body:
        if p.tag != "p":
            raise BundleValidationError(f"{member}: unexpected element <{p.tag}> in body")
        para_id = p.get("id", "")
        children = list(p)
        if children:
            sentences = []
            for s in children:
                if s.tag != "s":
                    raise BundleValidationError(
                        f"{member}: unexpected element <{s.tag}> in paragraph {para_id}"
                    )
                sentences.append(Sentence(sent_id=s.get("id", ""), text=s.text or ""))
            raw_text = " ".join(x.text for x in sentences)
            paragraphs.append(Paragraph(para_id, raw_text, tuple(sentences)))
        else:
            paragraphs.append(Paragraph(para_id, p.text or "", ()))
    return Document(
        doc_id=f"{role}-doc",
        role=role,
        meta=DocumentMeta.from_dict(fields),
        paragraphs=tuple(paragraphs),
    )


def _links_from_grp(grp: ET.Element, level: str) -> list[AlignmentLink]:
    links = []
    for link in grp:
        if link.tag != "link":
            raise BundleValidationError(f"unexpected element <{link.tag}> in linkGrp")
        link_id = link.get("id", "")
        xtargets = link.get("xtargets")
        if xtargets is None:
            raise BundleValidationError(f"link {link_id!r} lacks xtargets")
        halves = xtargets.split(" ; ")
        if len(halves) != 2:
            raise BundleValidationError(
                f"link {link_id!r} has malformed xtargets {xtargets!r} "
                '(expected "<src ids> ; <tgt ids>")'
            )
        techniques = link.get("techniques", "")
        confidence = link.get("confidence")
        links.append(
            AlignmentLink(
                link_id=link_id,
                level=level,
                source_ids=frozenset(halves[0].split()),
                target_ids=frozenset(halves[1].split()),
                comment=link.get("comment", ""),
                techniques=frozenset(techniques.split(";")) if techniques else frozenset(),
                origin=link.get("origin", "manual"),
                confidence=None if confidence is None else float(confidence),
            )
        )
    return links


def _alignment_from_xml(root: ET.Element, src_doc: Document, tgt_doc: Document) -> Project:
    if root.tag != "cesAlign":
        raise BundleValidationError("alignment.xml: root element must be cesAlign")
    name = _text(root.find("cesHeader/title"))
    taxonomy = []
    tech_list = root.find("cesHeader/techniqueList")
    if tech_list is not None:
        for tech in tech_list:
            taxonomy.append(
                TechniqueDef(
                    name=tech.get("name", ""),
                    description=_text(tech.find("description")),
                    examples=tuple(_text(e) for e in tech.findall("example")),
                )
            )
    templates = []
    tpl_list = root.find("cesHeader/templateList")
    if tpl_list is not None:
        for tpl in tpl_list:
            templates.append(
                PromptTemplate(
                    template_id=tpl.get("id", ""),
                    name=tpl.get("name", ""),
                    body=_text(tpl.find("body")),
                    required_placeholders=frozenset(
                        _text(r) for r in tpl.findall("required")
                    ),
                    description=_text(tpl.find("description")),
                )
            )
    link_list = root.find("linkList")
    if link_list is None:
        raise BundleValidationError("alignment.xml: linkList element missing")
    groups = {grp.get("type", ""): grp for grp in link_list}
    if set(groups) != {"paragraph", "sentence"} or len(list(link_list)) != 2:
        raise BundleValidationError(
            "alignment.xml: linkList must hold exactly one paragraph and one "
            "sentence linkGrp"
        )
    links = _links_from_grp(groups["paragraph"], "paragraph") + _links_from_grp(
        groups["sentence"], "sentence"
    )
    return Project(
        project_id="",
        name=name,
        source_doc=src_doc,
        target_doc=tgt_doc,
        links=tuple(links),
        taxonomy=tuple(taxonomy),
        prompt_templates=tuple(templates),
    )


def import_bundle(source: str | Path | bytes) -> Project:
    """Reconstruct a project such that re-export is byte-identical."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = Path(source).read_bytes()
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise BundleValidationError(f"not a zip archive: {exc}") from exc
    names = zf.namelist()
    if sorted(names) != sorted(MEMBERS):
        missing = sorted(set(MEMBERS) - set(names))
        extra = sorted(set(names) - set(MEMBERS))
        raise WrongMemberSetError(
            "archive must contain exactly source.xml, target.xml, alignment.xml"
            + (f"; missing: {', '.join(missing)}" if missing else "")
            + (f"; unexpected: {', '.join(extra)}" if extra else ""),
            {"missing": missing, "extra": extra},
        )
    roots = {name: _parse_member(name, zf.read(name)) for name in MEMBERS}
    src_doc = _doc_from_xml(roots["source.xml"], "source", "source.xml")
    tgt_doc = _doc_from_xml(roots["target.xml"], "target", "target.xml")
    project = _alignment_from_xml(roots["alignment.xml"], src_doc, tgt_doc)
    violations = validate_project(project)
    dangling = [v for v in violations if v.code == "dangling-reference"]
    if dangling:
        raise DanglingIdError(
            f"link {dangling[0].subject}: {dangling[0].message}",
            {"violations": [v.to_dict() for v in dangling]},
        )
    if violations:
        raise BundleValidationError(
            "bundle violates project invariants: "
            + "; ".join(f"{v.code}({v.subject})" for v in violations[:5]),
            {"violations": [v.to_dict() for v in violations]},
        )
    return project


def validate_bundle(source: str | Path | bytes) -> dict:
    """Structural validation report; never raises on invalid bundles."""
    try:
        project = import_bundle(source)
    except (BundleValidationError, WrongMemberSetError, MalformedXmlError, DanglingIdError) as exc:
        return {
            "ok": False,
            "code": exc.code,
            "message": exc.message,
            "details": exc.details,
        }
    return {
        "ok": True,
        "name": project.name,
        "paragraph_links": sum(1 for l in project.links if l.level == "paragraph"),
        "sentence_links": sum(1 for l in project.links if l.level == "sentence"),
    }
