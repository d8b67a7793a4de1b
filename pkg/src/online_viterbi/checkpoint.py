"""Two-level checkpointing Viterbi: square-root memory for a second pass."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .hmm import Hmm, ImpossibleSequenceError
from .trace import MemoryTrace, default_stride
from .trellis import Decoding, _argmax, _step, initial_column, prepare


@dataclass(frozen=True)
class CheckpointPlan:
    """Partition of positions ``1..n`` into blocks of ``block_len`` symbols."""

    n: int
    block_len: int
    checkpoints: tuple

    @classmethod
    def make(cls, n, block_len=None):
        if n < 1:
            raise ValueError("empty sequence")
        if block_len is None:
            block_len = math.isqrt(n - 1) + 1 if n > 1 else 1
        if block_len < 1:
            raise ValueError("block_len must be >= 1")
        return cls(n, int(block_len), tuple(range(1, n + 1, block_len)))

    @property
    def n_blocks(self):
        return len(self.checkpoints)

    def blocks(self):
        """Inclusive 1-based ``(first, last)`` for every block."""
        return [(c, min(c + self.block_len - 1, self.n)) for c in self.checkpoints]

    def column_bound(self):
        return self.n_blocks + self.block_len + 1


@njit(cache=True)
def _checkpoint_decode(seq, scores, trans_t, emit_t, L, buf, path, retained):
    # Returns (forward steps, final score, 0-based failing index or -1).
    # buf holds one block of back pointers: row r is position start + r + 1.
    n = seq.shape[0]
    m = scores.shape[0]
    n_blocks = (n + L - 1) // L
    ck = np.empty((n_blocks, m))
    tmp = np.empty(m)
    ck[0] = scores
    n_ck = 1
    steps = 0
    retained[steps] = 1
    steps += 1
    last_start = (n_blocks - 1) * L

    for p in range(1, n):
        held = p - last_start if p > last_start else 0
        row = buf[held - 1] if held > 0 else buf[0]
        if not _step(scores, trans_t, emit_t[seq[p]], tmp, row):
            return steps, -np.inf, p
        scores[:] = tmp
        if p % L == 0:
            ck[n_ck] = scores
            n_ck += 1
        retained[steps] = n_ck + held
        steps += 1

    s = _argmax(scores)
    best = scores[s]
    path[n - 1] = s
    for p in range(n - 1, last_start, -1):
        path[p - 1] = buf[p - last_start - 1, path[p]]

    for b in range(n_blocks - 2, -1, -1):
        start = b * L
        end = start + L
        scores[:] = ck[b]
        for p in range(start + 1, end + 1):
            _step(scores, trans_t, emit_t[seq[p]], tmp, buf[p - start - 1])
            scores[:] = tmp
            retained[steps] = n_ck + p - start
            steps += 1
        for p in range(end, start, -1):
            path[p - 1] = buf[p - start - 1, path[p]]
    return steps, best, -1


def viterbi_checkpoint(hmm: Hmm, seq, block_len=None, stride=None) -> Decoding:
    """Checkpointing Viterbi with blocks of ``block_len`` (default ``ceil(sqrt(n))``).

    The forward pass keeps only the first score column of every block plus
    the back pointers of the final block. The backward pass recomputes each
    earlier block from its checkpoint, one block of back pointers at a time.
    Output is identical to :func:`viterbi_full`; the trace counts retained
    score and back-pointer columns after every column computation.
    """
    seq, k = prepare(hmm, seq)
    plan = CheckpointPlan.make(seq.size, block_len)
    L = min(plan.block_len, seq.size)
    scores = initial_column(hmm, seq[0]).scores.copy()
    buf = np.zeros((L, hmm.m), dtype=k.bp_dtype)
    path = np.empty(seq.size, dtype=np.int64)
    retained = np.empty(2 * seq.size, dtype=np.int64)
    steps, best, bad = _checkpoint_decode(seq, scores, k.trans_t, k.emit_t, L, buf, path, retained)
    if bad >= 0:
        raise ImpossibleSequenceError(bad + 1)
    trace = MemoryTrace(stride=default_stride(steps) if stride is None else stride)
    trace.extend(retained[:steps])
    return Decoding(path, float(best), trace, int(steps))


def forward_step_count(run: Decoding) -> int:
    """Number of score columns computed during ``run``, initial column included."""
    return run.forward_steps
