"""Shared suggestion-payload fixtures: valid examples and single-fault mutants.

Pure data, no package imports, so both the unit tests and the acceptance
gate can load it. Every mutant starts from the same valid payload and
introduces exactly one fault; the expected rule code is recorded next to it.
"""
import json

SRC_RAW = "One two. Three four."
TGT_RAW = "Un deux. Trois quatre."


def base_payload() -> dict:
    return {
        "source_sentences": [
            {"id": "p1-s1", "text": "One two."},
            {"id": "p1-s2", "text": "Three four."},
        ],
        "target_sentences": [
            {"id": "p1-s1", "text": "Un deux."},
            {"id": "p1-s2", "text": "Trois quatre."},
        ],
        "links": [
            {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"]},
            {"source_ids": ["p1-s2"], "target_ids": ["p1-s2"], "confidence": 0.9},
        ],
    }


def _raw(fn):
    """Build a factory that mutates a fresh payload copy and serializes it."""

    def factory() -> str:
        data = base_payload()
        out = fn(data)
        return out if isinstance(out, str) else json.dumps(data)

    return factory


def _del(data, *path):
    node = data
    for key in path[:-1]:
        node = node[key]
    del node[path[-1]]


def _set(data, *path_and_value):
    *path, value = path_and_value
    node = data
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value


# (name, expected rule code, raw-response factory); exactly 30 entries.
MUTATIONS = [
    ("invalid-json-prefix", "invalid-json", _raw(lambda d: "{not json")),
    ("top-level-array", "wrong-type", _raw(lambda d: "[1, 2]")),
    ("missing-source-sentences", "missing-field", _raw(lambda d: _del(d, "source_sentences"))),
    ("missing-target-sentences", "missing-field", _raw(lambda d: _del(d, "target_sentences"))),
    ("missing-links", "missing-field", _raw(lambda d: _del(d, "links"))),
    ("extra-top-field", "unknown-field", _raw(lambda d: _set(d, "notes", "hi"))),
    ("sentences-not-array", "wrong-type", _raw(lambda d: _set(d, "source_sentences", {"id": "p1-s1"}))),
    ("sentence-not-object", "wrong-type", _raw(lambda d: _set(d, "source_sentences", 0, "One two."))),
    ("sentence-missing-id", "missing-field", _raw(lambda d: _del(d, "source_sentences", 0, "id"))),
    ("sentence-missing-text", "missing-field", _raw(lambda d: _del(d, "source_sentences", 0, "text"))),
    ("sentence-extra-field", "unknown-field", _raw(lambda d: _set(d, "source_sentences", 0, "note", "x"))),
    ("sentence-bad-id", "bad-id", _raw(lambda d: _set(d, "source_sentences", 0, "id", "s1"))),
    ("sentence-duplicate-id", "duplicate-id", _raw(lambda d: _set(d, "source_sentences", 1, "id", "p1-s1"))),
    ("sentence-text-number", "wrong-type", _raw(lambda d: _set(d, "source_sentences", 0, "text", 42))),
    ("sentence-text-blank", "empty-text", _raw(lambda d: _set(d, "target_sentences", 0, "text", "   "))),
    ("links-not-array", "wrong-type", _raw(lambda d: _set(d, "links", "p1-s1"))),
    ("link-not-object", "wrong-type", _raw(lambda d: _set(d, "links", 0, "x"))),
    ("link-missing-source-ids", "missing-field", _raw(lambda d: _del(d, "links", 0, "source_ids"))),
    ("link-missing-target-ids", "missing-field", _raw(lambda d: _del(d, "links", 1, "target_ids"))),
    ("link-extra-field", "unknown-field", _raw(lambda d: _set(d, "links", 0, "weight", 1))),
    ("link-ids-not-array", "wrong-type", _raw(lambda d: _set(d, "links", 0, "source_ids", "p1-s1"))),
    ("link-bad-id", "bad-id", _raw(lambda d: _set(d, "links", 0, "source_ids", ["p1s1"]))),
    ("link-duplicate-id", "duplicate-id", _raw(lambda d: _set(d, "links", 0, "target_ids", ["p1-s1", "p1-s1"]))),
    ("link-dangling-id", "dangling-link-id", _raw(lambda d: _set(d, "links", 0, "source_ids", ["p1-s9"]))),
    (
        "link-both-sides-empty",
        "empty-link",
        _raw(lambda d: (_set(d, "links", 0, "source_ids", []), _set(d, "links", 0, "target_ids", []))[0]),
    ),
    ("confidence-string", "wrong-type", _raw(lambda d: _set(d, "links", 1, "confidence", "high"))),
    ("confidence-bool", "wrong-type", _raw(lambda d: _set(d, "links", 1, "confidence", True))),
    ("confidence-above-one", "confidence-range", _raw(lambda d: _set(d, "links", 1, "confidence", 1.5))),
    ("confidence-negative", "confidence-range", _raw(lambda d: _set(d, "links", 1, "confidence", -0.2))),
    ("source-coverage-drop", "coverage", _raw(lambda d: _set(d, "source_sentences", 0, "text", "One."))),
]

# Valid payloads over their own paragraph pairs; every one must be accepted.
VALID_FIXTURES = [
    {
        "name": "base",
        "src": SRC_RAW,
        "tgt": TGT_RAW,
        "payload": base_payload(),
    },
    {
        "name": "confidence-boundaries",
        "src": SRC_RAW,
        "tgt": TGT_RAW,
        "payload": {
            "source_sentences": [
                {"id": "p1-s1", "text": "One two."},
                {"id": "p1-s2", "text": "Three four."},
            ],
            "target_sentences": [
                {"id": "p1-s1", "text": "Un deux."},
                {"id": "p1-s2", "text": "Trois quatre."},
            ],
            "links": [
                {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"], "confidence": 0.0},
                {"source_ids": ["p1-s2"], "target_ids": ["p1-s2"], "confidence": 1.0},
            ],
        },
    },
    {
        "name": "deletion-link",
        "src": "Alpha one. Beta two.",
        "tgt": "Gamma three.",
        "payload": {
            "source_sentences": [
                {"id": "p1-s1", "text": "Alpha one."},
                {"id": "p1-s2", "text": "Beta two."},
            ],
            "target_sentences": [{"id": "p1-s1", "text": "Gamma three."}],
            "links": [
                {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"]},
                {"source_ids": ["p1-s2"], "target_ids": []},
            ],
        },
    },
    {
        "name": "many-to-many",
        "src": "First part. Second part.",
        "tgt": "Erste Zeile. Zweite Zeile.",
        "payload": {
            "source_sentences": [
                {"id": "p1-s1", "text": "First part."},
                {"id": "p1-s2", "text": "Second part."},
            ],
            "target_sentences": [
                {"id": "p1-s1", "text": "Erste Zeile."},
                {"id": "p1-s2", "text": "Zweite Zeile."},
            ],
            "links": [
                {
                    "source_ids": ["p1-s1", "p1-s2"],
                    "target_ids": ["p1-s1", "p1-s2"],
                    "confidence": 0.5,
                }
            ],
        },
    },
    {
        "name": "arabic",
        "src": "سافر الرجل؟ ثم عاد.",
        "tgt": "هو سافر؟ ثم عاد بسرعة.",
        "payload": {
            "source_sentences": [
                {"id": "p1-s1", "text": "سافر الرجل؟"},
                {"id": "p1-s2", "text": "ثم عاد."},
            ],
            "target_sentences": [
                {"id": "p1-s1", "text": "هو سافر؟"},
                {"id": "p1-s2", "text": "ثم عاد بسرعة."},
            ],
            "links": [
                {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"]},
                {"source_ids": ["p1-s2"], "target_ids": ["p1-s2"]},
            ],
        },
    },
    {
        "name": "single-pair-integer-confidence",
        "src": "Only one here.",
        "tgt": "Nur eine hier.",
        "payload": {
            "source_sentences": [{"id": "p1-s1", "text": "Only one here."}],
            "target_sentences": [{"id": "p1-s1", "text": "Nur eine hier."}],
            "links": [
                {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"], "confidence": 1}
            ],
        },
    },
    {
        "name": "loose-whitespace",
        "src": "One two.\nThree four.",
        "tgt": "Un deux.\tTrois quatre.",
        "payload": {
            "source_sentences": [
                {"id": "p1-s1", "text": "  One   two. "},
                {"id": "p1-s2", "text": "Three four."},
            ],
            "target_sentences": [
                {"id": "p1-s1", "text": "Un deux."},
                {"id": "p1-s2", "text": " Trois\tquatre. "},
            ],
            "links": [
                {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"]},
                {"source_ids": ["p1-s2"], "target_ids": ["p1-s2"]},
            ],
        },
    },
    {
        "name": "no-links",
        "src": "Standalone.",
        "tgt": "Seul.",
        "payload": {
            "source_sentences": [{"id": "p1-s1", "text": "Standalone."}],
            "target_sentences": [{"id": "p1-s1", "text": "Seul."}],
            "links": [],
        },
    },
    {
        "name": "label-order-free",
        "src": "Left first. Right second.",
        "tgt": "Gauche. Droite.",
        "payload": {
            "source_sentences": [
                {"id": "p1-s7", "text": "Left first."},
                {"id": "p1-s2", "text": "Right second."},
            ],
            "target_sentences": [
                {"id": "p1-s1", "text": "Gauche."},
                {"id": "p1-s9", "text": "Droite."},
            ],
            "links": [
                {"source_ids": ["p1-s7"], "target_ids": ["p1-s1"]},
                {"source_ids": ["p1-s2"], "target_ids": ["p1-s9"]},
            ],
        },
    },
    {
        "name": "markupish-text",
        "src": 'He said "a<b & c>d". Done now.',
        "tgt": "Il a dit \"a<b & c>d\". C'est fini.",
        "payload": {
            "source_sentences": [
                {"id": "p1-s1", "text": 'He said "a<b & c>d".'},
                {"id": "p1-s2", "text": "Done now."},
            ],
            "target_sentences": [
                {"id": "p1-s1", "text": 'Il a dit "a<b & c>d".'},
                {"id": "p1-s2", "text": "C'est fini."},
            ],
            "links": [
                {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"]},
                {"source_ids": ["p1-s2"], "target_ids": ["p1-s2"]},
            ],
        },
    },
]
