"""Acceptance gates: one test per shipped guarantee.

Each test is a single pass/fail line under ``pytest -v``. Where a guarantee
includes a runtime budget the test measures wall-clock time and fails when
the budget is exceeded, so a speed regression trips the same gate as a
behavior regression. Everything here runs offline; the provider check uses
an unreachable loopback port on purpose.
"""
import json
import os
import random
import subprocess
import sys
import time
import zipfile

import pytest
from fastapi.testclient import TestClient

from corpus_llm import MUTATIONS, SRC_RAW, TGT_RAW, VALID_FIXTURES
from helpers_gen import (
    ARABIC_WORDS,
    LATIN_WORDS,
    apply_random_commands,
    oracle_align,
    rand_project,
    seed_store_project,
)
from lata import llm
from lata._text import collapse_ws
from lata.align import align, align_lengths
from lata.api import REVISION_HEADER, TOKEN_HEADER, create_app
from lata.cesio import export_bytes, import_bundle
from lata.model import Paragraph
from lata.segmenter import segment
from lata.store import Store, canonical_json


def test_bundle_roundtrip_is_byte_identical_for_100_random_projects():
    started = time.perf_counter()
    for seed in range(100):
        project = rand_project(seed)
        first = export_bytes(project)
        second = export_bytes(import_bundle(first))
        assert second == first, f"seed {seed}: re-export differs"
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"100 round-trips took {elapsed:.1f}s"


def test_dp_aligner_matches_exhaustive_oracle_on_all_small_shapes():
    started = time.perf_counter()
    rng = random.Random(31415)
    shapes = [(n, m) for n in range(9) for m in range(9) if 1 <= n + m <= 8]
    assert len(shapes) == 44
    for n, m in shapes:
        for _ in range(200):
            src = [rng.randint(1, 200) for _ in range(n)]
            tgt = [rng.randint(1, 200) for _ in range(m)]
            beads, total = align_lengths(src, tgt)
            oracle_beads, oracle_total = oracle_align(src, tgt)
            assert total == oracle_total, f"cost mismatch on {src} / {tgt}"
            assert beads == oracle_beads, f"bead mismatch on {src} / {tgt}"
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"{len(shapes) * 200} alignments took {elapsed:.1f}s"


_WORKED = [
    ("", []),
    (
        "Hello world. How are you؟ Fine.",
        ["Hello world.", "How are you؟", "Fine."],
    ),
    ("Dr. Smith arrived. He left.", ["Dr. Smith arrived.", "He left."]),
]

_CHAR_POOL = "abcdefg hij.!? " + "كتب مدن؟؛، " + "‏‎" + ".?!…  \n\t"
_ABBREVS = ("Dr.", "Mr.", "etc.", "p.")
_TERMINATORS = ".?!…؟"
_GAPS = (" ", "  ", "\n", "\t", " \n ", "\n\n")


def _fuzz_text(rng: random.Random) -> str:
    if rng.random() < 0.2:
        return "".join(rng.choice(_CHAR_POOL) for _ in range(rng.randint(0, 80)))
    pieces = []
    for _ in range(rng.randint(0, 6)):
        words = [
            rng.choice(LATIN_WORDS if rng.random() < 0.5 else ARABIC_WORDS)
            for _ in range(rng.randint(1, 6))
        ]
        if rng.random() < 0.15:
            words.insert(0, rng.choice(_ABBREVS))
        pieces.append(" ".join(words) + rng.choice(_TERMINATORS))
        pieces.append(rng.choice(_GAPS))
    if rng.random() < 0.2:
        pieces.append(rng.choice(("trailing tail", "ذيل أخير")))
    return "".join(pieces)


def test_segmenter_is_non_lossy_and_idempotent_on_1000_fuzz_texts():
    for raw, expected in _WORKED:
        assert segment(raw) == expected
    rng = random.Random(27182)
    for case in range(1000):
        text = _fuzz_text(rng)
        parts = segment(text)
        assert all(p and p == p.strip() for p in parts), f"case {case}"
        joined = " ".join(parts)
        assert collapse_ws(joined) == collapse_ws(text), f"case {case} lost text"
        assert segment(joined) == parts, f"case {case} not idempotent"


def test_undo_redo_inverts_100_random_command_sequences_and_survives_restart(
    tmp_path,
):
    workspace = tmp_path / "ws"
    store = Store(workspace)
    rng = random.Random(97)
    finals: dict[str, str] = {}
    for _ in range(100):
        project_id = seed_store_project(store, rng)
        base_depth = store.undo_depth(project_id)
        initial = canonical_json(store.load_project(project_id))
        applied = apply_random_commands(
            store, project_id, rng, rng.randint(1, 50)
        )
        final = canonical_json(store.load_project(project_id))
        for _ in applied:
            store.undo(project_id)
        assert store.undo_depth(project_id) == base_depth
        assert canonical_json(store.load_project(project_id)) == initial
        for _ in applied:
            store.redo(project_id)
        assert canonical_json(store.load_project(project_id)) == final
        finals[project_id] = final
    store.close()
    # Durability: a fresh process must read back every final state verbatim.
    script = (
        "import json, sys\n"
        "from lata.store import Store, canonical_json\n"
        "store = Store(sys.argv[1])\n"
        "out = {p: canonical_json(store.load_project(p)) for p in sys.argv[2:]}\n"
        "print(json.dumps(out))\n"
    )
    proc = subprocess.run(
        [sys.executable, "-c", script, str(workspace), *finals],
        capture_output=True,
        text=True,
        encoding="utf-8",
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout) == finals


def test_response_validator_corpus_and_unreachable_provider_fallback():
    src_par = Paragraph("p1", SRC_RAW, ())
    tgt_par = Paragraph("p1", TGT_RAW, ())
    for name, code, factory in MUTATIONS:
        result = llm.validate_payload(factory(), src_par, tgt_par)
        assert isinstance(result, llm.ValidationFailure), f"{name} was accepted"
        assert result.code == code, f"{name}: {result.code} != {code}"
    assert len(MUTATIONS) == 30
    for fixture in VALID_FIXTURES:
        result = llm.validate_payload(
            json.dumps(fixture["payload"]),
            Paragraph("p1", fixture["src"], ()),
            Paragraph("p1", fixture["tgt"], ()),
        )
        assert isinstance(result, llm.SuggestionPayload), fixture["name"]
    assert len(VALID_FIXTURES) == 10

    # Dead endpoint, real HTTP transport: must fall back to the offline path.
    provider = llm.LlmProviderConfig(
        endpoint_url="http://127.0.0.1:9/v1/chat",
        model_name="gate",
        timeout_seconds=2.0,
        max_retries=1,
    )
    outcome = llm.suggest(
        (src_par, tgt_par),
        llm.DEFAULT_TEMPLATE,
        provider,
        src_language="en",
        tgt_language="fr",
    )
    assert outcome.origin == "baseline"
    assert outcome.reason == "provider-unreachable"
    src_texts = segment(SRC_RAW)
    tgt_texts = segment(TGT_RAW)
    payload = outcome.payload
    assert [s.text for s in payload.source_sentences] == src_texts
    assert [s.text for s in payload.target_sentences] == tgt_texts
    expected_links = [
        (
            tuple(f"p1-s{k + 1}" for k in range(*bead.source_span)),
            tuple(f"p1-s{k + 1}" for k in range(*bead.target_span)),
        )
        for bead in align(src_texts, tgt_texts)
    ]
    assert [
        (link.source_ids, link.target_ids) for link in payload.links
    ] == expected_links
    assert all(link.confidence is None for link in payload.links)


def test_cli_pipeline_end_to_end_under_five_seconds(tmp_path):
    (tmp_path / "source.txt").write_text(
        "One two three. Four five six.\n\nSeven eight nine ten.",
        encoding="utf-8",
    )
    (tmp_path / "target.txt").write_text(
        "Un deux trois. Quatre cinq six.\n\nSept huit neuf dix.",
        encoding="utf-8",
    )

    def run(*argv: str) -> subprocess.CompletedProcess:
        return subprocess.run(
            [sys.executable, "-m", "lata", *argv],
            cwd=tmp_path,
            capture_output=True,
            text=True,
            encoding="utf-8",
        )

    started = time.perf_counter()
    steps = [
        ("init", "demo", "--src-lang", "en", "--tgt-lang", "fr"),
        ("import", "demo", "--role", "source", "--file", "source.txt"),
        ("import", "demo", "--role", "target", "--file", "target.txt"),
        ("segment", "demo", "--rules"),
        ("align", "demo", "--level", "paragraph", "--baseline"),
        ("align", "demo", "--level", "sentence", "--baseline"),
        ("export", "demo", "--out", "bundle.zip"),
        ("validate", "bundle.zip"),
    ]
    for argv in steps:
        proc = run(*argv)
        assert proc.returncode == 0, f"{argv}: rc={proc.returncode} {proc.stderr}"
    with zipfile.ZipFile(tmp_path / "bundle.zip") as zf:
        assert set(zf.namelist()) == {"source.xml", "target.xml", "alignment.xml"}
    blob = (tmp_path / "bundle.zip").read_bytes()
    (tmp_path / "broken.zip").write_bytes(blob[: len(blob) // 2])
    proc = run("validate", "broken.zip")
    assert proc.returncode == 1, proc.stdout + proc.stderr
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"pipeline took {elapsed:.1f}s"


def test_api_revision_guard_and_token_replay(tmp_path):
    store = Store(tmp_path / "ws")
    app = create_app(store=store)
    with TestClient(app) as client:

        def mutate(method, url, body, token, revision=None):
            headers = {TOKEN_HEADER: token}
            if revision is not None:
                headers[REVISION_HEADER] = str(revision)
            return client.request(method, url, json=body, headers=headers)

        r = mutate(
            "POST",
            "/projects",
            {"name": "gate", "src_lang": "en", "tgt_lang": "fr"},
            "tok-gate-0",
        )
        assert r.status_code == 201
        pid = r.json()["project_id"]
        for role in ("source", "target"):
            r = mutate(
                "PUT",
                f"/projects/{pid}/documents/{role}",
                {"text": "One two. Three four.\n\nFive six."},
                f"tok-gate-{role}",
            )
            assert r.status_code == 200

        link_body = {
            "level": "paragraph",
            "source_ids": ["p1"],
            "target_ids": ["p1"],
        }
        current = store.revision(pid)
        r = mutate(
            "POST",
            f"/projects/{pid}/links",
            link_body,
            "tok-gate-stale",
            revision=current - 1,
        )
        assert r.status_code == 409
        body = r.json()
        assert body["code"] == "stale-revision"
        assert body["details"] == {"expected": current - 1, "current": current}
        assert store.revision(pid) == current
        assert not store.load_project(pid).links

        first = mutate(
            "POST", f"/projects/{pid}/links", link_body, "tok-gate-retry"
        )
        second = mutate(
            "POST", f"/projects/{pid}/links", link_body, "tok-gate-retry"
        )
        assert first.status_code == 201
        assert second.status_code == 201
        assert "X-Replayed" not in first.headers
        assert second.headers.get("X-Replayed") == "1"
        assert first.json() == second.json()
        assert len(store.load_project(pid).links) == 1
    store.close()
