"""Batch entry point for the full pipeline.

Every subcommand wraps one engine operation; exit codes are 0 success,
1 validation failure, 2 usage error, 3 I/O error. ``--json`` switches all
output to a single machine-readable object on stdout. The ``--rules`` and
``--baseline`` paths are fully offline; ``--llm`` needs ``provider.json``
in the workspace and falls back to the offline path with a warning when
it is absent.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any

from . import __version__, llm
from .align import align, beads_to_links
from .cesio import export as export_bundle
from .cesio import validate_bundle
from .errors import LataError, NotSegmentedError, StorageError
from .model import Project, validate_project
from .segmenter import segment
from .store import Store
from ._text import collapse_ws

_PIPE_ORIGINS = ("llm", "baseline")


def _workspace(args: argparse.Namespace) -> Path:
    return Path(args.workspace or os.environ.get("LATA_WORKSPACE") or ".")


def _store(args: argparse.Namespace) -> Store:
    return Store(_workspace(args))


def _emit(args: argparse.Namespace, payload: dict[str, Any], text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    elif text:
        print(text)


def _seg_config(store: Store, project_id: str):
    from .segmenter import DEFAULT_CONFIG, SegmenterConfig

    raw = store.get_config(project_id).get("segmenter")
    return SegmenterConfig.from_dict(raw) if raw else DEFAULT_CONFIG


def _aligner_params(store: Store, project_id: str):
    from .align import DEFAULT_PARAMS, AlignerParams

    raw = store.get_config(project_id).get("aligner")
    return AlignerParams.from_dict(raw) if raw else DEFAULT_PARAMS


def _provider(args: argparse.Namespace) -> llm.LlmProviderConfig | None:
    path = _workspace(args) / "provider.json"
    if not path.is_file():
        return None
    return llm.LlmProviderConfig.from_dict(json.loads(path.read_text("utf-8")))


def _warn(args: argparse.Namespace, message: str) -> None:
    if not args.json:
        print(f"warning: {message}", file=sys.stderr)


def _paragraph_pairs(project: Project) -> list[tuple[str, str]]:
    """Source/target paragraph pairs: 1:1 paragraph links if any, else
    positional zip."""
    pairs = []
    src_pos = {p: i for i, p in enumerate(project.source_doc.paragraph_ids())}
    for link in project.links:
        if link.level != "paragraph":
            continue
        if len(link.source_ids) == 1 and len(link.target_ids) == 1:
            pairs.append((next(iter(link.source_ids)), next(iter(link.target_ids))))
    if pairs:
        return sorted(pairs, key=lambda pr: src_pos.get(pr[0], 1 << 30))
    src = project.source_doc.paragraph_ids()
    tgt = project.target_doc.paragraph_ids()
    return list(zip(src, tgt))


def cmd_init(args: argparse.Namespace) -> int:
    store = _store(args)
    project_id = store.create_project(
        args.name,
        {"language": args.src_lang},
        {"language": args.tgt_lang},
    )
    _emit(
        args,
        {"project_id": project_id, "name": args.name},
        f"created project {project_id} ({args.name})",
    )
    return 0


def cmd_import(args: argparse.Namespace) -> int:
    store = _store(args)
    project_id = store.resolve(args.project)
    text = Path(args.file).read_text("utf-8")
    meta = None
    if args.meta:
        meta = json.loads(Path(args.meta).read_text("utf-8"))
        if not isinstance(meta, dict):
            raise LataError("metadata file must hold a JSON object")
    doc = store.import_document(
        project_id, args.role, text, meta=meta, replace_existing=args.replace
    )
    _emit(
        args,
        {
            "project_id": project_id,
            "role": args.role,
            "paragraphs": len(doc.paragraphs),
            "revision": store.revision(project_id),
        },
        f"imported {len(doc.paragraphs)} paragraphs into {args.role} of {project_id}",
    )
    return 0


def _segment_rules(store: Store, project_id: str, project: Project) -> tuple[int, int]:
    config = _seg_config(store, project_id)
    done = skipped = 0
    for doc in (project.source_doc, project.target_doc):
        for para in doc.paragraphs:
            texts = segment(para.raw_text, doc.meta.language, config)
            if [s.text for s in para.sentences] == texts:
                skipped += 1
                continue
            store.apply(
                project_id,
                "attach_sentences",
                {"role": doc.role, "para_id": para.para_id, "texts": texts},
            )
            done += 1
    return done, skipped


def cmd_segment(args: argparse.Namespace) -> int:
    store = _store(args)
    project_id = store.resolve(args.project)
    project = store.load_project(project_id)
    mode = "llm" if args.llm else "rules"
    provider = _provider(args) if mode == "llm" else None
    if mode == "llm" and provider is None:
        _warn(args, "provider.json not found in workspace; using rule segmentation")
        mode = "rules"

    if mode == "rules":
        done, skipped = _segment_rules(store, project_id, project)
        _emit(
            args,
            {
                "project_id": project_id,
                "mode": "rules",
                "segmented": done,
                "skipped": skipped,
                "revision": store.revision(project_id),
            },
            f"segmented {done} paragraphs ({skipped} already current)",
        )
        return 0

    seg = _seg_config(store, project_id)
    params = _aligner_params(store, project_id)
    done = 0
    for src_id, tgt_id in _paragraph_pairs(project):
        project = store.load_project(project_id)
        src_para = project.source_doc.paragraph(src_id)
        tgt_para = project.target_doc.paragraph(tgt_id)
        result = llm.suggest(
            (src_para, tgt_para),
            llm.DEFAULT_TEMPLATE,
            provider,
            src_language=project.source_doc.meta.language,
            tgt_language=project.target_doc.meta.language,
            seg_config=seg,
            aligner_params=params,
            log=lambda msg: store.log(project_id, msg),
        )
        for role, para, sentences in (
            ("source", src_para, result.payload.source_sentences),
            ("target", tgt_para, result.payload.target_sentences),
        ):
            texts = [s.text for s in sentences]
            if [s.text for s in para.sentences] != texts:
                store.apply(
                    project_id,
                    "attach_sentences",
                    {"role": role, "para_id": para.para_id, "texts": texts},
                )
                done += 1
    _emit(
        args,
        {
            "project_id": project_id,
            "mode": "llm",
            "segmented": done,
            "revision": store.revision(project_id),
        },
        f"segmented {done} paragraphs via provider",
    )
    return 0


def _align_paragraphs(store: Store, project_id: str, project: Project) -> int:
    params = _aligner_params(store, project_id)
    src = [collapse_ws(p.raw_text) for p in project.source_doc.paragraphs]
    tgt = [collapse_ws(p.raw_text) for p in project.target_doc.paragraphs]
    beads = align(src, tgt, params)
    links = beads_to_links(beads, "paragraph", project.source_doc, project.target_doc)
    for link in links:
        payload = link.to_dict()
        payload.pop("link_id")
        store.apply(project_id, "add_link", payload)
    return len(links)


def _align_sentences_baseline(store: Store, project_id: str, project: Project) -> int:
    unsegmented = [
        p.para_id
        for doc in (project.source_doc, project.target_doc)
        for p in doc.paragraphs
        if not p.sentences
    ]
    if unsegmented:
        raise NotSegmentedError(
            "paragraphs lack sentences (run `lata segment` first): "
            + ", ".join(unsegmented[:5])
        )
    params = _aligner_params(store, project_id)
    src_sents = [s for p in project.source_doc.paragraphs for s in p.sentences]
    tgt_sents = [s for p in project.target_doc.paragraphs for s in p.sentences]
    beads = align([s.text for s in src_sents], [s.text for s in tgt_sents], params)
    links = beads_to_links(beads, "sentence", project.source_doc, project.target_doc)
    for link in links:
        payload = link.to_dict()
        payload.pop("link_id")
        store.apply(project_id, "add_link", payload)
    return len(links)


def cmd_align(args: argparse.Namespace) -> int:
    store = _store(args)
    project_id = store.resolve(args.project)
    project = store.load_project(project_id)
    mode = "llm" if args.llm else "baseline"
    provider = _provider(args) if mode == "llm" else None
    if mode == "llm" and provider is None:
        _warn(args, "provider.json not found in workspace; using baseline aligner")
        mode = "baseline"
    if mode == "llm" and args.level == "paragraph":
        _warn(args, "provider suggestions are sentence-level; using baseline for paragraphs")
        mode = "baseline"

    if mode == "baseline":
        if args.level == "paragraph":
            added = _align_paragraphs(store, project_id, project)
        else:
            added = _align_sentences_baseline(store, project_id, project)
        _emit(
            args,
            {
                "project_id": project_id,
                "level": args.level,
                "mode": "baseline",
                "links_added": added,
                "revision": store.revision(project_id),
            },
            f"added {added} {args.level} links (baseline)",
        )
        return 0

    seg = _seg_config(store, project_id)
    params = _aligner_params(store, project_id)
    added = 0
    origins: dict[str, int] = {o: 0 for o in _PIPE_ORIGINS}
    for src_id, tgt_id in _paragraph_pairs(project):
        fresh = store.load_project(project_id)
        src_para = fresh.source_doc.paragraph(src_id)
        tgt_para = fresh.target_doc.paragraph(tgt_id)
        result = llm.suggest(
            (src_para, tgt_para),
            llm.DEFAULT_TEMPLATE,
            provider,
            src_language=fresh.source_doc.meta.language,
            tgt_language=fresh.target_doc.meta.language,
            seg_config=seg,
            aligner_params=params,
            log=lambda msg: store.log(project_id, msg),
        )
        payload = result.payload
        store.apply(
            project_id,
            "accept_suggestion",
            {
                "src_para_id": src_id,
                "tgt_para_id": tgt_id,
                "origin": result.origin,
                "source_texts": [s.text for s in payload.source_sentences],
                "target_texts": [s.text for s in payload.target_sentences],
                "source_sentences": [s.to_dict() for s in payload.source_sentences],
                "target_sentences": [s.to_dict() for s in payload.target_sentences],
                "links": [l.to_dict() for l in payload.links],
            },
        )
        origins[result.origin] += 1
        added += len(payload.links)
    _emit(
        args,
        {
            "project_id": project_id,
            "level": "sentence",
            "mode": "llm",
            "links_added": added,
            "pair_origins": origins,
            "revision": store.revision(project_id),
        },
        f"added {added} sentence links "
        f"({origins['llm']} pairs from provider, {origins['baseline']} fallback)",
    )
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    store = _store(args)
    project_id = store.resolve(args.project)
    project = store.load_project(project_id)
    bundle = export_bundle(project, args.out)
    _emit(
        args,
        {
            "project_id": project_id,
            "out": str(bundle.path),
            "members": list(bundle.members),
        },
        f"wrote {bundle.path} ({', '.join(bundle.members)})",
    )
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    target = args.target
    if Path(target).is_file() or target.endswith(".zip"):
        report = validate_bundle(target)
        ok = report["ok"]
        text = "bundle is valid" if ok else f"invalid bundle: {report['message']}"
        _emit(args, report, text)
        return 0 if ok else 1
    store = _store(args)
    project = store.load_project(store.resolve(target))
    violations = validate_project(project)
    report = {"ok": not violations, "violations": [v.to_dict() for v in violations]}
    if violations:
        lines = "\n".join(f"  {v.code} [{v.subject}]: {v.message}" for v in violations)
        _emit(args, report, f"project has {len(violations)} violations:\n{lines}")
        return 1
    _emit(args, report, "project is valid")
    return 0


def cmd_techniques(args: argparse.Namespace) -> int:
    store = _store(args)
    project_id = store.resolve(args.project)
    if args.action == "list":
        project = store.load_project(project_id)
        taxonomy = [t.to_dict() for t in project.taxonomy]
        _emit(
            args,
            {"project_id": project_id, "taxonomy": taxonomy},
            "\n".join(f"{t['name']}: {t['description']}" for t in taxonomy) or "(empty)",
        )
        return 0
    technique = {
        "name": args.name,
        "description": args.desc,
        "examples": args.example or [],
    }
    _, revision = store.apply(project_id, "upsert_technique_def", {"technique": technique})
    _emit(
        args,
        {"project_id": project_id, "technique": technique, "revision": revision},
        f"technique {args.name!r} saved",
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    # Imported here so batch commands never pay the web stack import cost.
    from .api import serve as _serve

    _serve(_workspace(args), port=args.port)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", help="project store directory (default: $LATA_WORKSPACE or .)")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(
        prog="lata", description="parallel-corpus alignment and annotation engine"
    )
    parser.add_argument("--version", action="version", version=f"lata {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="create a project")
    p.add_argument("name")
    p.add_argument("--src-lang", required=True, help="source language tag")
    p.add_argument("--tgt-lang", required=True, help="target language tag")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("import", parents=[common], help="import a document")
    p.add_argument("project")
    p.add_argument("--role", required=True, choices=("source", "target"))
    p.add_argument("--file", required=True)
    p.add_argument("--meta", help="JSON file with document metadata fields")
    p.add_argument("--replace", action="store_true", help="overwrite an existing import")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("segment", parents=[common], help="split paragraphs into sentences")
    p.add_argument("project")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--llm", action="store_true", help="use the configured provider")
    g.add_argument("--rules", action="store_true", help="offline rule segmentation (default)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("align", parents=[common], help="create alignment links")
    p.add_argument("project")
    p.add_argument("--level", required=True, choices=("paragraph", "sentence"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--llm", action="store_true", help="use the configured provider")
    g.add_argument("--baseline", action="store_true", help="offline length-based aligner (default)")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("export", parents=[common], help="write the zipped XML bundle")
    p.add_argument("project")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate", parents=[common], help="validate a bundle or project")
    p.add_argument("target", help="path to a .zip bundle, or a project id/name")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("techniques", parents=[common], help="manage the technique taxonomy")
    action = p.add_subparsers(dest="action", required=True)
    a = action.add_parser("add", parents=[common], help="add or update a technique")
    a.add_argument("project")
    a.add_argument("--name", required=True)
    a.add_argument("--desc", required=True)
    a.add_argument("--example", action="append")
    a.set_defaults(func=cmd_techniques)
    a = action.add_parser("list", parents=[common], help="list techniques")
    a.add_argument("project")
    a.set_defaults(func=cmd_techniques)

    p = sub.add_parser("serve", parents=[common], help="run the local HTTP service")
    p.add_argument("--port", type=int, default=7341)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version and 2 for usage errors
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except StorageError as exc:
        _fail(args, exc.code, exc.message, exc.details)
        return 3
    except LataError as exc:
        _fail(args, exc.code, exc.message, exc.details)
        return 1
    except OSError as exc:
        _fail(args, "io-error", str(exc), {})
        return 3
    except json.JSONDecodeError as exc:
        _fail(args, "invalid-json", str(exc), {})
        return 1
    except KeyboardInterrupt:
        return 0


def _fail(args: argparse.Namespace, code: str, message: str, details: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps({"error": {"code": code, "message": message, "details": details}}))
    else:
        print(f"error: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
