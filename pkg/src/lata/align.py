"""Deterministic length-based sentence/paragraph alignment.

Classic bitext DP over six bead kinds (1:1, 1:0, 0:1, 2:1, 1:2, 2:2) with a
normal-deviate length-ratio cost. Produces baseline suggestions, cross-checks
structured suggestions, and is exhaustively verifiable on small inputs.

Backend selection: numba when importable, plain Python otherwise or when the
``LATA_NO_NUMBA`` environment variable is set to a non-empty value.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._kernels import KIND_ORDER, KIND_SPANS, Backend, make_backend
from ._text import nfc
from .errors import SpanBoundsError
from .model import AlignmentLink, Document

DEFAULT_PENALTIES = {
    "1:1": 0,
    "1:0": 450,
    "0:1": 450,
    "2:1": 230,
    "1:2": 230,
    "2:2": 440,
}


@dataclass(frozen=True)
class AlignerParams:
    mean_ratio: float = 1.0
    variance: float = 6.8
    bead_penalties: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_PENALTIES)
    )

    def __post_init__(self) -> None:
        if not (self.mean_ratio > 0.0):
            raise ValueError("mean_ratio must be positive")
        if not (self.variance > 0.0):
            raise ValueError("variance must be positive")
        if set(self.bead_penalties) != set(KIND_ORDER):
            raise ValueError(f"bead_penalties must cover exactly {set(KIND_ORDER)}")
        for kind, pen in self.bead_penalties.items():
            if pen < 0 or pen != pen or pen in (float("inf"), float("-inf")):
                raise ValueError(f"penalty for {kind} must be finite and >= 0")

    def penalties_array(self) -> np.ndarray:
        return np.array(
            [float(self.bead_penalties[k]) for k in KIND_ORDER], dtype=np.float64
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_ratio": self.mean_ratio,
            "variance": self.variance,
            "bead_penalties": dict(self.bead_penalties),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AlignerParams":
        return cls(
            mean_ratio=float(data.get("mean_ratio", 1.0)),
            variance=float(data.get("variance", 6.8)),
            bead_penalties={
                str(k): int(v)
                for k, v in data.get("bead_penalties", DEFAULT_PENALTIES).items()
            },
        )


DEFAULT_PARAMS = AlignerParams()


@dataclass(frozen=True)
class Bead:
    kind: str
    source_span: tuple[int, int]
    target_span: tuple[int, int]


_BACKENDS: dict[str, Backend] = {}
_FALLBACK_REASON = ""


def get_backend(name: str) -> Backend:
    """Backend by name ("numba" or "pure"); instances are cached."""
    if name not in _BACKENDS:
        _BACKENDS[name] = make_backend(use_numba=(name == "numba"))
    return _BACKENDS[name]


def default_backend() -> Backend:
    global _FALLBACK_REASON
    if os.environ.get("LATA_NO_NUMBA"):
        return get_backend("pure")
    try:
        return get_backend("numba")
    except ImportError as exc:
        _FALLBACK_REASON = str(exc)
        return get_backend("pure")


def active_backend_name() -> str:
    return default_backend().name


def segment_length(text: str) -> int:
    """Length unit of the cost model: NFC code-point count."""
    return len(nfc(text))


def bead_cost(
    src_len: int,
    tgt_len: int,
    kind: str,
    params: AlignerParams = DEFAULT_PARAMS,
    backend: Backend | None = None,
) -> float:
    if kind not in KIND_ORDER:
        raise ValueError(f"unknown bead kind {kind!r}")
    if backend is None:
        backend = default_backend()
    return float(
        backend.bead_cost(
            float(src_len),
            float(tgt_len),
            float(params.bead_penalties[kind]),
            params.mean_ratio,
            params.variance,
        )
    )


def align_lengths(
    src_lengths: Sequence[int],
    tgt_lengths: Sequence[int],
    params: AlignerParams = DEFAULT_PARAMS,
    backend: Backend | None = None,
) -> tuple[list[Bead], float]:
    """Minimal-cost bead cover of both length vectors, plus its total cost."""
    if backend is None:
        backend = default_backend()
    a = np.asarray([float(x) for x in src_lengths], dtype=np.float64)
    b = np.asarray([float(x) for x in tgt_lengths], dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    if n == 0 and m == 0:
        return [], 0.0
    cost, back = backend.dp_fill(a, b, params.penalties_array(), params.mean_ratio, params.variance)
    kinds: list[int] = []
    i, j = n, m
    while i != 0 or j != 0:
        t = int(back[i, j])
        if t < 0:
            raise RuntimeError(f"unreachable DP cell ({i}, {j})")
        kinds.append(t)
        di, dj = KIND_SPANS[t]
        i -= di
        j -= dj
    kinds.reverse()
    beads: list[Bead] = []
    i = j = 0
    for t in kinds:
        di, dj = KIND_SPANS[t]
        beads.append(Bead(KIND_ORDER[t], (i, i + di), (j, j + dj)))
        i += di
        j += dj
    return beads, float(cost[n, m])


def align(
    src: Sequence[str],
    tgt: Sequence[str],
    params: AlignerParams = DEFAULT_PARAMS,
    backend: Backend | None = None,
) -> list[Bead]:
    beads, _ = align_lengths(
        [segment_length(t) for t in src],
        [segment_length(t) for t in tgt],
        params,
        backend,
    )
    return beads


def beads_to_links(
    beads: Sequence[Bead],
    level: str,
    src_doc: Document,
    tgt_doc: Document,
    id_prefix: str = "bl",
) -> list[AlignmentLink]:
    """Convert beads to baseline-origin links over document segment IDs.

    Null beads (1:0 / 0:1) become null-match links with one empty side. IDs
    here are provisional; the store assigns final IDs on apply.
    """
    if level == "paragraph":
        src_ids = src_doc.paragraph_ids()
        tgt_ids = tgt_doc.paragraph_ids()
    elif level == "sentence":
        src_ids = src_doc.sentence_ids()
        tgt_ids = tgt_doc.sentence_ids()
    else:
        raise ValueError(f"unknown link level {level!r}")
    links: list[AlignmentLink] = []
    for k, bead in enumerate(beads):
        sa, sb = bead.source_span
        ta, tb = bead.target_span
        if sa < 0 or sb > len(src_ids) or ta < 0 or tb > len(tgt_ids):
            raise SpanBoundsError(
                f"bead {bead.kind} span out of bounds for {level} lists "
                f"of sizes {len(src_ids)}/{len(tgt_ids)}"
            )
        links.append(
            AlignmentLink(
                link_id=f"{id_prefix}{k + 1}",
                level=level,
                source_ids=frozenset(src_ids[sa:sb]),
                target_ids=frozenset(tgt_ids[ta:tb]),
                origin="baseline",
            )
        )
    return links
