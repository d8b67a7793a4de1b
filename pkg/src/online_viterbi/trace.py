"""Per-position retained-window bookkeeping shared by the decoders."""

from __future__ import annotations

import numpy as np


class MemoryTrace:
    """Running record of how many columns a decoder holds.

    Parameters
    ----------
    stride : int or None
        Keep every ``stride``-th sample (positions 1, 1+stride, ...).
        ``None`` keeps summaries only, so memory stays constant.
    marks : iterable of int, optional
        Prefix lengths at which the running peak is snapshotted, e.g.
        powers of ten for prefix-maximum curves.

    Peak and mean are always exact, whatever the stride.
    """

    def __init__(self, stride=1, marks=()):
        if stride is not None and stride < 1:
            raise ValueError("stride must be >= 1 or None")
        self.stride = stride
        self.n = 0
        self.peak = 0
        self.total = 0
        self._chunks = []
        self._marks = sorted({int(x) for x in marks if x >= 1})
        self.prefix_peaks = {}

    def record(self, window_len):
        if window_len < 1:
            raise ValueError("window length must be >= 1")
        self.n += 1
        self.total += window_len
        if window_len > self.peak:
            self.peak = window_len
        if self.stride is not None and (self.n - 1) % self.stride == 0:
            self._chunks.append(np.array([window_len], dtype=np.int64))
        if self._marks and self._marks[0] == self.n:
            self.prefix_peaks[self._marks.pop(0)] = self.peak
        return self

    def extend(self, window_lens):
        """Vectorised :meth:`record` for a block of consecutive positions."""
        w = np.asarray(window_lens, dtype=np.int64)
        if w.size == 0:
            return self
        if w.min() < 1:
            raise ValueError("window length must be >= 1")
        start = self.n
        if self._marks:
            running = np.maximum.accumulate(w)
            np.maximum(running, self.peak, out=running)
            while self._marks and self._marks[0] <= start + w.size:
                mark = self._marks.pop(0)
                self.prefix_peaks[mark] = int(running[mark - start - 1])
        if self.stride is not None:
            first = (-start) % self.stride
            self._chunks.append(w[first :: self.stride].copy())
        self.n += w.size
        self.total += int(w.sum())
        self.peak = max(self.peak, int(w.max()))
        return self

    @property
    def samples(self):
        if not self._chunks:
            return np.zeros(0, dtype=np.int64)
        if len(self._chunks) > 1:
            self._chunks = [np.concatenate(self._chunks)]
        return self._chunks[0]

    @property
    def mean(self):
        if self.n == 0:
            raise ValueError("empty trace has no mean")
        return self.total / self.n

    def summary(self):
        if self.n == 0:
            raise ValueError("empty trace has no summary")
        return {"n": self.n, "peak": self.peak, "mean": self.mean}

    def __repr__(self):
        if self.n == 0:
            return "MemoryTrace(empty)"
        return f"MemoryTrace(n={self.n}, peak={self.peak}, mean={self.mean:.3f})"


def record(trace: MemoryTrace, window_len) -> MemoryTrace:
    return trace.record(window_len)


def default_stride(n):
    return max(1, n // 10_000)
