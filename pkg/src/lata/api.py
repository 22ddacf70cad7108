"""Local HTTP/JSON service over the project store.

Thin atomic wrappers: each route calls exactly one engine operation and
returns the new revision on mutations. Concurrency control is a pair of
client-supplied values: a required ``X-Request-Token`` header makes retried
mutations apply once (the first 2xx response is replayed verbatim), and an
optional expected revision (``X-Expected-Revision`` header or
``expected_revision`` body field) turns lost-update races into 409
``stale-revision`` answers instead of silent overwrites.

The replay cache is in-process only; it protects client retries against a
live server, not across restarts.
"""
from __future__ import annotations

import json
import os
import threading
from collections import OrderedDict
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import llm
from .align import AlignerParams, DEFAULT_PARAMS
from .cesio import default_bundle_name, export_bytes
from .errors import (
    AmbiguousLinkError,
    LataError,
    MissingTokenError,
    StaleRevisionError,
    UnknownLinkError,
    UnknownParagraphError,
    ValidationRejection,
)
from .model import Violation, validate_project
from .segmenter import DEFAULT_CONFIG, SegmenterConfig
from .store import Store

TOKEN_HEADER = "X-Request-Token"
REVISION_HEADER = "X-Expected-Revision"

_REPLAY_CAP = 4096


class _ReplayCache:
    """Remembers the first successful response per request token."""

    def __init__(self, cap: int = _REPLAY_CAP):
        self._cap = cap
        self._lock = threading.Lock()
        self._entries: OrderedDict[str, tuple[int, bytes]] = OrderedDict()

    def get(self, token: str) -> tuple[int, bytes] | None:
        with self._lock:
            return self._entries.get(token)

    def put(self, token: str, status: int, body: bytes) -> None:
        with self._lock:
            self._entries[token] = (status, body)
            while len(self._entries) > self._cap:
                self._entries.popitem(last=False)


def _json_body(raw: bytes) -> dict[str, Any]:
    if not raw:
        return {}
    try:
        body = json.loads(raw)
    except ValueError:
        raise ValidationRejection("request body is not valid JSON")
    if not isinstance(body, dict):
        raise ValidationRejection("request body must be a JSON object")
    return body


def _require_paragraph(doc, para_id: str):
    para = doc.paragraph(para_id)
    if para is None:
        raise UnknownParagraphError(
            f"paragraph {para_id!r} not in {doc.role} document"
        )
    return para


def _seg_config(config: dict[str, Any]) -> SegmenterConfig:
    raw = config.get("segmenter")
    return SegmenterConfig.from_dict(raw) if raw else DEFAULT_CONFIG


def _aligner_params(config: dict[str, Any]) -> AlignerParams:
    raw = config.get("aligner")
    return AlignerParams.from_dict(raw) if raw else DEFAULT_PARAMS


def create_app(
    workspace: str | Path | None = None,
    *,
    store: Store | None = None,
    static_dir: str | Path | None = None,
    transport: Callable[[dict], str] | None = None,
) -> FastAPI:
    """Build the service. ``transport`` lets tests stub the LLM wire call."""
    if store is None:
        workspace = Path(workspace or os.environ.get("LATA_WORKSPACE") or ".")
        store = Store(workspace)
    app = FastAPI(title="lata", docs_url="/docs")
    app.state.store = store
    replays = _ReplayCache()

    @app.exception_handler(LataError)
    async def _lata_error(request: Request, exc: LataError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    def _check_revision(project_id: str, request: Request, body: dict[str, Any]) -> None:
        raw = request.headers.get(REVISION_HEADER)
        if raw is None:
            raw = body.get("expected_revision")
        if raw is None:
            return
        try:
            expected = int(raw)
        except (TypeError, ValueError):
            raise ValidationRejection(f"expected_revision {raw!r} is not an integer")
        current = store.revision(project_id)
        if expected != current:
            raise StaleRevisionError(
                f"expected revision {expected} but project is at {current}",
                {"expected": expected, "current": current},
            )

    async def _mutate(
        request: Request,
        project_id: str | None,
        fn: Callable[[dict[str, Any]], tuple[dict[str, Any], int]],
    ) -> Response:
        """Token-gated mutation: replay a stored 2xx, else run fn once."""
        token = request.headers.get(TOKEN_HEADER)
        if not token:
            raise MissingTokenError(
                f"mutations require the {TOKEN_HEADER} header"
            )
        cached = replays.get(token)
        if cached is not None:
            status, body = cached
            return Response(
                content=body,
                status_code=status,
                media_type="application/json",
                headers={"X-Replayed": "1"},
            )
        body = _json_body(await request.body())
        if project_id is not None:
            _check_revision(project_id, request, body)
        payload, status = fn(body)
        encoded = json.dumps(payload).encode("utf-8")
        replays.put(token, status, encoded)
        return Response(content=encoded, status_code=status, media_type="application/json")

    def _depths(project_id: str) -> dict[str, int]:
        return {
            "revision": store.revision(project_id),
            "undo_depth": store.undo_depth(project_id),
            "redo_depth": store.redo_depth(project_id),
        }

    def _find_link_project(link_id: str) -> str:
        owners = []
        for summary in store.list_projects():
            project = store.load_project(summary["project_id"])
            if project.link(link_id) is not None:
                owners.append(summary["project_id"])
        if not owners:
            raise UnknownLinkError(f"no project holds link {link_id!r}")
        if len(owners) > 1:
            raise AmbiguousLinkError(
                f"link id {link_id!r} exists in several projects; "
                "use /projects/{id}/links/{link_id}",
                {"project_ids": owners},
            )
        return owners[0]

    @app.get("/health")
    async def health() -> dict[str, Any]:
        from . import __version__

        return {"status": "ok", "service": "lata", "version": __version__}

    @app.get("/projects")
    async def list_projects() -> dict[str, Any]:
        return {"projects": store.list_projects()}

    @app.post("/projects")
    async def create_project(request: Request) -> Response:
        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            name = str(body.get("name", "")).strip()
            if not name:
                raise ValidationRejection("project name must be non-empty")
            source_meta = dict(body.get("source_meta") or {})
            target_meta = dict(body.get("target_meta") or {})
            if body.get("src_lang"):
                source_meta.setdefault("language", str(body["src_lang"]))
            if body.get("tgt_lang"):
                target_meta.setdefault("language", str(body["tgt_lang"]))
            project_id = store.create_project(name, source_meta, target_meta)
            return {"project_id": project_id, "name": name, "revision": 0}, 201

        return await _mutate(request, None, run)

    @app.get("/projects/{ref}")
    async def get_project(ref: str) -> dict[str, Any]:
        project_id = store.resolve(ref)
        project = store.load_project(project_id)
        return {"project": project.to_dict(), **_depths(project_id)}

    @app.get("/projects/{ref}/validate")
    async def validate(ref: str) -> dict[str, Any]:
        project = store.load_project(store.resolve(ref))
        violations = validate_project(project)
        return {"ok": not violations, "violations": [v.to_dict() for v in violations]}

    @app.put("/projects/{ref}/documents/{role}")
    async def import_document(ref: str, role: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            doc = store.import_document(
                project_id,
                role,
                str(body.get("text", "")),
                meta=body.get("meta"),
                replace_existing=bool(body.get("replace_existing", False)),
            )
            return (
                {
                    "revision": store.revision(project_id),
                    "paragraph_count": len(doc.paragraphs),
                    "document": doc.to_dict(),
                },
                200,
            )

        return await _mutate(request, project_id, run)

    @app.put("/projects/{ref}/metadata/{role}")
    async def set_metadata(ref: str, role: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            fields = body.get("meta")
            if not isinstance(fields, dict):
                raise ValidationRejection('body must carry a "meta" object')
            project, revision = store.apply(
                project_id, "set_metadata", {"role": role, "meta": fields}
            )
            return (
                {"revision": revision, "meta": project.document(role).meta.to_dict()},
                200,
            )

        return await _mutate(request, project_id, run)

    def _apply_link_command(
        project_id: str, kind: str, payload: dict[str, Any], status: int
    ) -> tuple[dict[str, Any], int]:
        project, revision = store.apply(project_id, kind, payload)
        out: dict[str, Any] = {"revision": revision}
        link_id = payload.get("link_id")
        if link_id is None and kind == "add_link":
            # add_link allocates; recover the id from the newest command log row.
            link_id = _last_added_link_id(project_id)
        if link_id:
            link = project.link(str(link_id))
            if link is not None:
                out["link"] = link.to_dict()
        return out, status

    def _last_added_link_id(project_id: str) -> str | None:
        for entry in reversed(store.command_log(project_id)):
            if entry["kind"] == "add_link" and entry["state"] == "applied":
                return entry["payload"].get("link_id")
        return None

    @app.post("/projects/{ref}/links")
    async def add_link(ref: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            body.pop("expected_revision", None)
            return _apply_link_command(project_id, "add_link", body, 201)

        return await _mutate(request, project_id, run)

    async def _patch_link(request: Request, project_id: str, link_id: str) -> Response:
        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            body.pop("expected_revision", None)
            payload = {"link_id": link_id, "set": body}
            project, revision = store.apply(project_id, "modify_link", payload)
            link = project.link(link_id)
            return (
                {"revision": revision, "link": link.to_dict() if link else None},
                200,
            )

        return await _mutate(request, project_id, run)

    async def _delete_link(request: Request, project_id: str, link_id: str) -> Response:
        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            _, revision = store.apply(project_id, "remove_link", {"link_id": link_id})
            return {"revision": revision}, 200

        return await _mutate(request, project_id, run)

    @app.patch("/links/{link_id}")
    async def patch_link(link_id: str, request: Request) -> Response:
        return await _patch_link(request, _find_link_project(link_id), link_id)

    @app.delete("/links/{link_id}")
    async def delete_link(link_id: str, request: Request) -> Response:
        return await _delete_link(request, _find_link_project(link_id), link_id)

    @app.patch("/projects/{ref}/links/{link_id}")
    async def patch_project_link(ref: str, link_id: str, request: Request) -> Response:
        return await _patch_link(request, store.resolve(ref), link_id)

    @app.delete("/projects/{ref}/links/{link_id}")
    async def delete_project_link(ref: str, link_id: str, request: Request) -> Response:
        return await _delete_link(request, store.resolve(ref), link_id)

    @app.post("/projects/{ref}/undo")
    async def undo(ref: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            store.undo(project_id)
            return _depths(project_id), 200

        return await _mutate(request, project_id, run)

    @app.post("/projects/{ref}/redo")
    async def redo(ref: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            store.redo(project_id)
            return _depths(project_id), 200

        return await _mutate(request, project_id, run)

    @app.post("/projects/{ref}/paragraph-pairs/{src}/{tgt}/suggest")
    async def suggest(ref: str, src: str, tgt: str, request: Request) -> dict[str, Any]:
        project_id = store.resolve(ref)
        project = store.load_project(project_id)
        body = _json_body(await request.body())
        src_para = _require_paragraph(project.source_doc, src)
        tgt_para = _require_paragraph(project.target_doc, tgt)
        config = store.get_config(project_id)
        seg = _seg_config(config)
        params = _aligner_params(config)

        template = llm.DEFAULT_TEMPLATE
        template_id = body.get("template_id") or config.get("template")
        if template_id:
            found = project.template(str(template_id))
            if found is None:
                raise ValidationRejection(
                    f"template {template_id!r} does not exist",
                    [Violation("unknown-template", str(template_id), "no such template")],
                )
            template = found

        provider_raw = config.get("provider")
        if provider_raw:
            provider = llm.LlmProviderConfig.from_dict(provider_raw)
            result = llm.suggest(
                (src_para, tgt_para),
                template,
                provider,
                src_language=project.source_doc.meta.language,
                tgt_language=project.target_doc.meta.language,
                seg_config=seg,
                aligner_params=params,
                transport=transport,
                log=lambda msg: store.log(project_id, msg),
            )
        else:
            store.log(project_id, "suggest: no provider configured, using baseline")
            result = llm.SuggestResult(
                payload=llm.baseline_payload(src_para, tgt_para, seg, params),
                origin="baseline",
                reason="provider-not-configured",
            )
        return {
            "src_para_id": src,
            "tgt_para_id": tgt,
            "origin": result.origin,
            "retry_count": result.retry_count,
            "reason": result.reason,
            "failures": [f.to_dict() for f in result.failures],
            "payload": result.payload.to_dict(),
        }

    @app.post("/projects/{ref}/paragraph-pairs/{src}/{tgt}/accept")
    async def accept(ref: str, src: str, tgt: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            payload = body.get("payload")
            if not isinstance(payload, dict):
                raise ValidationRejection('body must carry a "payload" object')
            command = {
                "src_para_id": src,
                "tgt_para_id": tgt,
                "origin": str(body.get("origin", "llm")),
                "source_texts": [
                    str(s.get("text", "")) for s in payload.get("source_sentences", [])
                ],
                "target_texts": [
                    str(s.get("text", "")) for s in payload.get("target_sentences", [])
                ],
                "source_sentences": payload.get("source_sentences", []),
                "target_sentences": payload.get("target_sentences", []),
                "links": payload.get("links", []),
            }
            project, revision = store.apply(project_id, "accept_suggestion", command)
            links = [
                l.to_dict()
                for l in project.links
                if l.level == "sentence"
                and (
                    any(x.startswith(f"{src}-s") for x in l.source_ids)
                    or any(x.startswith(f"{tgt}-s") for x in l.target_ids)
                )
            ]
            return {"revision": revision, "links": links}, 200

        return await _mutate(request, project_id, run)

    @app.get("/projects/{ref}/techniques")
    async def get_techniques(ref: str) -> dict[str, Any]:
        project = store.load_project(store.resolve(ref))
        return {"taxonomy": [t.to_dict() for t in project.taxonomy]}

    @app.put("/projects/{ref}/techniques")
    async def put_techniques(ref: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            incoming = body.get("taxonomy")
            if not isinstance(incoming, list):
                raise ValidationRejection('body must carry a "taxonomy" list')
            project = store.load_project(project_id)
            current = {t.name: t for t in project.taxonomy}
            wanted = {str(item.get("name", "")): item for item in incoming}
            for name in sorted(set(current) - set(wanted)):
                project, _ = store.apply(project_id, "delete_technique_def", {"name": name})
            for name, item in wanted.items():
                prior = current.get(name)
                if prior is None or prior.to_dict() != {
                    "name": name,
                    "description": str(item.get("description", "")),
                    "examples": [str(e) for e in item.get("examples", [])],
                }:
                    project, _ = store.apply(
                        project_id, "upsert_technique_def", {"technique": item}
                    )
            return (
                {
                    "revision": store.revision(project_id),
                    "taxonomy": [t.to_dict() for t in project.taxonomy],
                },
                200,
            )

        return await _mutate(request, project_id, run)

    @app.get("/projects/{ref}/templates")
    async def get_templates(ref: str) -> dict[str, Any]:
        project = store.load_project(store.resolve(ref))
        return {"templates": [t.to_dict() for t in project.prompt_templates]}

    @app.put("/projects/{ref}/templates")
    async def put_templates(ref: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            incoming = body.get("templates")
            if not isinstance(incoming, list):
                raise ValidationRejection('body must carry a "templates" list')
            project = store.load_project(project_id)
            current = {t.template_id: t for t in project.prompt_templates}
            wanted = {str(item.get("template_id", "")): item for item in incoming}
            for template_id in sorted(set(current) - set(wanted)):
                project, _ = store.apply(
                    project_id, "delete_template", {"template_id": template_id}
                )
            for template_id, item in wanted.items():
                prior = current.get(template_id)
                if prior is None or prior.to_dict() != item:
                    project, _ = store.apply(
                        project_id, "upsert_template", {"template": item}
                    )
            return (
                {
                    "revision": store.revision(project_id),
                    "templates": [t.to_dict() for t in project.prompt_templates],
                },
                200,
            )

        return await _mutate(request, project_id, run)

    @app.get("/projects/{ref}/config")
    async def get_config(ref: str) -> dict[str, Any]:
        return {"config": store.get_config(store.resolve(ref))}

    @app.put("/projects/{ref}/config")
    async def put_config(ref: str, request: Request) -> Response:
        project_id = store.resolve(ref)

        def run(body: dict[str, Any]) -> tuple[dict[str, Any], int]:
            config = body.get("config")
            if not isinstance(config, dict):
                raise ValidationRejection('body must carry a "config" object')
            # Engine settings sit outside the undo history on purpose.
            store.set_config(project_id, config)
            return {"config": config, "revision": store.revision(project_id)}, 200

        return await _mutate(request, project_id, run)

    @app.post("/projects/{ref}/export")
    async def export(ref: str) -> Response:
        project = store.load_project(store.resolve(ref))
        data = export_bytes(project)
        return Response(
            content=data,
            media_type="application/zip",
            headers={
                "Content-Disposition": f'attachment; filename="{default_bundle_name(project)}"'
            },
        )

    if static_dir is None:
        static_dir = os.environ.get("LATA_UI_DIR") or Path(__file__).parent / "ui"
    static_dir = Path(static_dir)
    if static_dir.is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/")
        async def index() -> dict[str, str]:
            return {"service": "lata", "docs": "/docs", "api": "/projects"}

    return app


def serve(
    workspace: str | Path | None = None,
    *,
    host: str = "127.0.0.1",
    port: int = 7341,
    static_dir: str | Path | None = None,
) -> None:
    """Run the service on loopback until interrupted."""
    import uvicorn

    app = create_app(workspace, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
