"""Viterbi recurrence kernel and the full-table decoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .hmm import Hmm, ImpossibleSequenceError, check_symbols
from .trace import MemoryTrace, default_stride


@dataclass(frozen=True, eq=False)
class TrellisColumn:
    """Scores ``P(i, .)`` and back pointers ``B(i, .)`` at 1-based ``position``."""

    position: int
    scores: np.ndarray
    backptrs: np.ndarray | None = None


class Decoding(NamedTuple):
    path: np.ndarray
    log_prob: float
    trace: MemoryTrace
    forward_steps: int
    tree_ops: dict | None = None


def backptr_dtype(m):
    """Narrowest unsigned type that holds a state index."""
    if m <= 1 << 8:
        return np.uint8
    if m <= 1 << 16:
        return np.uint16
    return np.uint32


class Kernel:
    """Contiguous log tables laid out for the inner loop.

    ``trans_t[j, k]`` is log t_k(j) and ``emit_t[x, j]`` is log e_j(x).
    """

    __slots__ = ("hmm", "trans_t", "emit_t", "bp_dtype")

    def __init__(self, hmm: Hmm):
        self.hmm = hmm
        self.trans_t = np.ascontiguousarray(hmm.log_transitions.T)
        self.emit_t = np.ascontiguousarray(hmm.log_emissions.T)
        self.bp_dtype = backptr_dtype(hmm.m)


@njit(cache=True)
def _step(prev, trans_t, emit_col, out, bp):
    # strict '>' keeps the smallest maximising predecessor
    m = prev.shape[0]
    alive = False
    for j in range(m):
        best = -np.inf
        arg = 0
        row = trans_t[j]
        for k in range(m):
            v = prev[k] + row[k]
            if v > best:
                best = v
                arg = k
        s = best + emit_col[j]
        out[j] = s
        bp[j] = arg
        if s > -np.inf:
            alive = True
    return alive


@njit(cache=True)
def _sweep(scores, symbols, trans_t, emit_t, bp_out, store):
    """Advance ``scores`` over ``symbols`` in place.

    Back pointers for ``symbols[r]`` go to ``bp_out[r]`` when ``store`` is
    set, else to ``bp_out[0]``. Returns the index of the first symbol that
    leaves no reachable state, or -1.
    """
    tmp = np.empty_like(scores)
    for r in range(symbols.shape[0]):
        row = bp_out[r] if store else bp_out[0]
        if not _step(scores, trans_t, emit_t[symbols[r]], tmp, row):
            return r
        scores[:] = tmp
    return -1


@njit(cache=True)
def _argmax(scores):
    best = -np.inf
    arg = -1
    for j in range(scores.shape[0]):
        if scores[j] > best:
            best = scores[j]
            arg = j
    return arg


@njit(cache=True)
def _backtrace(bp, last_state, path):
    n = path.shape[0]
    s = last_state
    for i in range(n - 1, -1, -1):
        path[i] = s
        if i > 0:
            s = bp[i, s]


def initial_column(hmm: Hmm, symbol) -> TrellisColumn:
    symbol = int(check_symbols(hmm, [symbol])[0])
    scores = hmm.log_initial + hmm.log_emissions[:, symbol]
    if not np.any(scores > -np.inf):
        raise ImpossibleSequenceError(1)
    return TrellisColumn(1, scores)


def forward_step(hmm: Hmm, prev: TrellisColumn, symbol, kernel: Kernel | None = None) -> TrellisColumn:
    """One column of the recurrence: max over predecessors plus emission."""
    symbol = int(check_symbols(hmm, [symbol])[0])
    k = kernel or Kernel(hmm)
    out = np.empty(hmm.m)
    bp = np.empty(hmm.m, dtype=k.bp_dtype)
    if not _step(np.asarray(prev.scores, dtype=np.float64), k.trans_t, k.emit_t[symbol], out, bp):
        raise ImpossibleSequenceError(prev.position + 1)
    return TrellisColumn(prev.position + 1, out, bp)


def final_state(scores) -> int:
    j = int(_argmax(np.asarray(scores, dtype=np.float64)))
    if j < 0:
        raise ImpossibleSequenceError(-1, "no reachable final state")
    return j


def prepare(hmm: Hmm, seq):
    seq = check_symbols(hmm, seq)
    if seq.size == 0:
        raise ValueError("empty sequence")
    return seq, Kernel(hmm)


def viterbi_full(hmm: Hmm, seq, stride=None) -> Decoding:
    """Classical Viterbi holding the whole ``n x m`` back-pointer table.

    The trace reports ``i`` retained columns at position ``i``.
    """
    seq, k = prepare(hmm, seq)
    n = seq.size
    scores = initial_column(hmm, seq[0]).scores.copy()
    bp = np.zeros((n, hmm.m), dtype=k.bp_dtype)
    bad = _sweep(scores, seq[1:], k.trans_t, k.emit_t, bp[1:], True)
    if bad >= 0:
        raise ImpossibleSequenceError(bad + 2)
    last = final_state(scores)
    path = np.empty(n, dtype=np.int64)
    _backtrace(bp, last, path)
    trace = MemoryTrace(stride=default_stride(n) if stride is None else stride)
    trace.extend(np.arange(1, n + 1))
    return Decoding(path, float(scores[last]), trace, n)
