"""Command-line pipeline: exit codes, --json output, offline fallbacks."""
import io
import json
import zipfile

import pytest

from lata.cesio import import_bundle
from lata.cli import main
from lata.store import Store, canonical_json

SRC_TEXT = "One two. Three four.\n\nSecond block here. It continues.\n"
TGT_TEXT = "Un deux. Trois quatre.\n\nDeuxieme bloc ici. Il continue.\n"


@pytest.fixture
def ws(tmp_path):
    (tmp_path / "source.txt").write_text(SRC_TEXT, encoding="utf-8")
    (tmp_path / "target.txt").write_text(TGT_TEXT, encoding="utf-8")
    return tmp_path


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def run_json(capsys, *argv):
    rc, out, err = run(capsys, *argv, "--json")
    payload = json.loads(out.strip()) if out.strip() else {}
    return rc, payload, err


def bootstrap(capsys, ws, name="demo") -> str:
    rc, body, _ = run_json(
        capsys, "init", name, "--src-lang", "en", "--tgt-lang", "fr",
        "--workspace", str(ws),
    )
    assert rc == 0
    pid = body["project_id"]
    for role in ("source", "target"):
        rc, _, _ = run_json(
            capsys, "import", pid, "--role", role,
            "--file", str(ws / f"{role}.txt"), "--workspace", str(ws),
        )
        assert rc == 0
    return pid


# --- exit code table ----------------------------------------------------------


def test_version_and_help_exit_zero(capsys):
    assert main(["--version"]) == 0
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_usage_errors_exit_two(capsys, ws):
    assert main([]) == 2
    assert main(["align", "p", "--workspace", str(ws)]) == 2  # missing --level
    assert main(["import", "p", "--role", "sideways", "--file", "x",
                 "--workspace", str(ws)]) == 2
    assert main(["no-such-command"]) == 2
    capsys.readouterr()


def test_validation_failures_exit_one(capsys, ws):
    rc, body, _ = run_json(
        capsys, "init", "bad", "--src-lang", "not a tag!", "--tgt-lang", "fr",
        "--workspace", str(ws),
    )
    assert rc == 1
    assert body["error"]["code"] == "validation-rejected"


def test_io_failures_exit_three(capsys, ws):
    pid = bootstrap(capsys, ws)
    rc, body, _ = run_json(
        capsys, "import", pid, "--role", "source",
        "--file", str(ws / "missing.txt"), "--replace", "--workspace", str(ws),
    )
    assert rc == 3
    assert body["error"]["code"] == "io-error"
    rc, _, _ = run_json(capsys, "validate", str(ws / "ghost.zip"),
                        "--workspace", str(ws))
    assert rc == 3


def test_unknown_project_exits_one(capsys, ws):
    rc, body, _ = run_json(capsys, "validate", "prj404", "--workspace", str(ws))
    assert rc == 1
    assert body["error"]["code"] == "unknown-project"


# --- happy pipeline -------------------------------------------------------------


def test_full_offline_pipeline(capsys, ws):
    pid = bootstrap(capsys, ws)

    rc, body, _ = run_json(capsys, "segment", pid, "--rules", "--workspace", str(ws))
    assert rc == 0
    assert body["mode"] == "rules"
    assert body["segmented"] == 4

    rc, body, _ = run_json(
        capsys, "align", pid, "--level", "paragraph", "--workspace", str(ws)
    )
    assert rc == 0
    assert body["links_added"] == 2

    rc, body, _ = run_json(
        capsys, "align", pid, "--level", "sentence", "--workspace", str(ws)
    )
    assert rc == 0
    assert body["links_added"] >= 3
    assert body["mode"] == "baseline"

    out_zip = ws / "out.zip"
    rc, body, _ = run_json(
        capsys, "export", pid, "--out", str(out_zip), "--workspace", str(ws)
    )
    assert rc == 0
    assert body["members"] == ["source.xml", "target.xml", "alignment.xml"]

    rc, report, _ = run_json(capsys, "validate", str(out_zip), "--workspace", str(ws))
    assert rc == 0
    assert report["ok"] is True
    assert report["paragraph_links"] == 2

    rc, report, _ = run_json(capsys, "validate", pid, "--workspace", str(ws))
    assert rc == 0
    assert report == {"ok": True, "violations": []}

    store = Store(ws)
    try:
        assert canonical_json(import_bundle(out_zip)) == canonical_json(
            store.load_project(pid)
        )
    finally:
        store.close()


def test_human_readable_output(capsys, ws):
    rc, out, err = run(
        capsys, "init", "plain", "--src-lang", "en", "--tgt-lang", "fr",
        "--workspace", str(ws),
    )
    assert rc == 0
    assert "created project prj1 (plain)" in out
    assert err == ""
    rc, out, err = run(capsys, "validate", "prj404", "--workspace", str(ws))
    assert rc == 1
    assert out == ""
    assert "error:" in err


def test_segment_is_idempotent(capsys, ws):
    pid = bootstrap(capsys, ws)
    run_json(capsys, "segment", pid, "--workspace", str(ws))
    rc, body, _ = run_json(capsys, "segment", pid, "--workspace", str(ws))
    assert rc == 0
    assert body["segmented"] == 0
    assert body["skipped"] == 4


def test_align_sentence_requires_segmented_paragraphs(capsys, ws):
    pid = bootstrap(capsys, ws)
    rc, body, _ = run_json(
        capsys, "align", pid, "--level", "sentence", "--workspace", str(ws)
    )
    assert rc == 1
    assert body["error"]["code"] == "not-segmented"
    assert "p1" in body["error"]["message"]


def test_import_meta_file(capsys, ws):
    pid = bootstrap(capsys, ws)
    meta = ws / "meta.json"
    meta.write_text('{"author": "V. Woolf"}', encoding="utf-8")
    rc, body, _ = run_json(
        capsys, "import", pid, "--role", "source", "--file", str(ws / "source.txt"),
        "--meta", str(meta), "--replace", "--workspace", str(ws),
    )
    assert rc == 0
    meta.write_text("{broken", encoding="utf-8")
    rc, body, _ = run_json(
        capsys, "import", pid, "--role", "source", "--file", str(ws / "source.txt"),
        "--meta", str(meta), "--replace", "--workspace", str(ws),
    )
    assert rc == 1
    assert body["error"]["code"] == "invalid-json"


def test_validate_corrupted_bundle_names_missing_member(capsys, ws):
    pid = bootstrap(capsys, ws)
    out_zip = ws / "full.zip"
    run_json(capsys, "export", pid, "--out", str(out_zip), "--workspace", str(ws))
    with zipfile.ZipFile(out_zip) as zf:
        members = {n: zf.read(n) for n in zf.namelist()}
    del members["alignment.xml"]
    broken = ws / "broken.zip"
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for name, data in members.items():
            zf.writestr(name, data)
    broken.write_bytes(buf.getvalue())

    rc, report, _ = run_json(capsys, "validate", str(broken), "--workspace", str(ws))
    assert rc == 1
    assert report["ok"] is False
    assert report["code"] == "wrong-member-set"
    assert report["details"]["missing"] == ["alignment.xml"]
    rc, out, err = run(capsys, "validate", str(broken), "--workspace", str(ws))
    assert rc == 1
    assert "invalid bundle" in out


# --- taxonomy round trip ---------------------------------------------------------


def test_techniques_add_list_and_export(capsys, ws):
    pid = bootstrap(capsys, ws)
    rc, _, _ = run_json(
        capsys, "techniques", "add", pid, "--name", "calque",
        "--desc", "loan translation", "--example", "pied-a-terre",
        "--workspace", str(ws),
    )
    assert rc == 0
    rc, _, _ = run_json(
        capsys, "techniques", "add", pid, "--name", "modulation",
        "--desc", "viewpoint shift", "--workspace", str(ws),
    )
    assert rc == 0
    rc, body, _ = run_json(capsys, "techniques", "list", pid, "--workspace", str(ws))
    assert rc == 0
    assert [t["name"] for t in body["taxonomy"]] == ["calque", "modulation"]
    assert body["taxonomy"][0]["examples"] == ["pied-a-terre"]

    out_zip = ws / "tax.zip"
    run_json(capsys, "export", pid, "--out", str(out_zip), "--workspace", str(ws))
    back = import_bundle(out_zip)
    assert [t.name for t in back.taxonomy] == ["calque", "modulation"]


# --- provider fallbacks -----------------------------------------------------------


def test_segment_llm_without_provider_falls_back(capsys, ws):
    pid = bootstrap(capsys, ws)
    rc, out, err = run(capsys, "segment", pid, "--llm", "--workspace", str(ws))
    assert rc == 0
    assert "provider.json not found" in err
    assert "segmented 4 paragraphs" in out
    store = Store(ws)
    try:
        project = store.load_project(pid)
        assert all(
            p.sentences
            for doc in (project.source_doc, project.target_doc)
            for p in doc.paragraphs
        )
    finally:
        store.close()


def test_align_llm_paragraph_level_uses_baseline(capsys, ws):
    pid = bootstrap(capsys, ws)
    (ws / "provider.json").write_text(json.dumps({
        "endpoint_url": "http://127.0.0.1:9/v1/chat",
        "model_name": "m",
        "timeout_seconds": 1,
        "max_retries": 0,
    }), encoding="utf-8")
    rc, out, err = run(
        capsys, "align", pid, "--level", "paragraph", "--llm", "--workspace", str(ws)
    )
    assert rc == 0
    assert "sentence-level" in err
    assert "baseline" in out


def test_align_llm_unreachable_provider_accepts_baseline(capsys, ws):
    pid = bootstrap(capsys, ws)
    # Nothing listens on this port: every call fails fast and the offline
    # path must land the links with origin "baseline".
    (ws / "provider.json").write_text(json.dumps({
        "endpoint_url": "http://127.0.0.1:9/v1/chat",
        "model_name": "m",
        "timeout_seconds": 1,
        "max_retries": 0,
    }), encoding="utf-8")
    rc, body, _ = run_json(
        capsys, "align", pid, "--level", "sentence", "--llm", "--workspace", str(ws)
    )
    assert rc == 0
    assert body["mode"] == "llm"
    assert body["pair_origins"] == {"llm": 0, "baseline": 2}
    assert body["links_added"] >= 3
    store = Store(ws)
    try:
        project = store.load_project(pid)
        sentence_links = [l for l in project.links if l.level == "sentence"]
        assert sentence_links
        assert all(l.origin == "baseline" for l in sentence_links)
    finally:
        store.close()


def test_workspace_env_var_honored(capsys, ws, monkeypatch):
    monkeypatch.setenv("LATA_WORKSPACE", str(ws))
    rc, body, _ = run_json(capsys, "init", "envy", "--src-lang", "en",
                           "--tgt-lang", "fr")
    assert rc == 0
    assert (ws / "annotations.db").is_file()
