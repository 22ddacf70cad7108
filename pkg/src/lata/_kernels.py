"""Length-based DP alignment kernels, numba-compiled when available.

The plain-Python definitions below are the single source of truth. The
accelerated backend wraps the same top-level function objects with njit
(cache=True works because nothing closes over other dispatchers). The
bead-cost expression is inlined inside the DP loop and must stay textually
identical to ``bead_cost_scalar`` so both backends and the exhaustive test
oracle agree bit-for-bit.
"""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

# Candidate order doubles as the tie-break preference at each DP cell.
KIND_ORDER = ("1:1", "1:2", "2:1", "2:2", "0:1", "1:0")
KIND_SPANS = ((1, 1), (1, 2), (2, 1), (2, 2), (0, 1), (1, 0))


def bead_cost_scalar(
    src_len: float, tgt_len: float, penalty: float, c: float, s2: float
) -> float:
    s = src_len
    if s < 1.0:
        s = 1.0
    delta = (tgt_len - s * c) / math.sqrt(s * s2)
    if delta < 0.0:
        delta = -delta
    tail = math.erfc(delta / math.sqrt(2.0))
    if tail < 1e-12:
        tail = 1e-12
    return penalty + 100.0 * (-math.log2(tail))


def dp_fill(
    a: np.ndarray, b: np.ndarray, pens: np.ndarray, c: float, s2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Fill prefix-pair cost and backpointer tables.

    ``back[i, j]`` holds the KIND_ORDER index of the bead ending at (i, j);
    the first strictly smaller candidate wins, so equal-cost candidates
    resolve to the earliest kind in preference order.
    """
    n = a.shape[0]
    m = b.shape[0]
    cost = np.empty((n + 1, m + 1), dtype=np.float64)
    back = np.empty((n + 1, m + 1), dtype=np.int64)
    for i in range(n + 1):
        for j in range(m + 1):
            cost[i, j] = np.inf
            back[i, j] = -1
    cost[0, 0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            best = np.inf
            arg = -1
            for t in range(6):
                if t == 0:
                    di = 1
                    dj = 1
                elif t == 1:
                    di = 1
                    dj = 2
                elif t == 2:
                    di = 2
                    dj = 1
                elif t == 3:
                    di = 2
                    dj = 2
                elif t == 4:
                    di = 0
                    dj = 1
                else:
                    di = 1
                    dj = 0
                if i < di or j < dj:
                    continue
                prev = cost[i - di, j - dj]
                if prev == np.inf:
                    continue
                src_len = 0.0
                for k in range(i - di, i):
                    src_len += a[k]
                tgt_len = 0.0
                for k in range(j - dj, j):
                    tgt_len += b[k]
                # Inline copy of bead_cost_scalar; keep textually identical.
                s = src_len
                if s < 1.0:
                    s = 1.0
                delta = (tgt_len - s * c) / math.sqrt(s * s2)
                if delta < 0.0:
                    delta = -delta
                tail = math.erfc(delta / math.sqrt(2.0))
                if tail < 1e-12:
                    tail = 1e-12
                total = prev + (pens[t] + 100.0 * (-math.log2(tail)))
                if total < best:
                    best = total
                    arg = t
            cost[i, j] = best
            back[i, j] = arg
    return cost, back


class Backend(NamedTuple):
    name: str
    bead_cost: Callable
    dp_fill: Callable


def make_backend(use_numba: bool) -> Backend:
    if use_numba:
        import numba

        return Backend(
            "numba",
            numba.njit(cache=True)(bead_cost_scalar),
            numba.njit(cache=True)(dp_fill),
        )
    return Backend("pure", bead_cost_scalar, dp_fill)
