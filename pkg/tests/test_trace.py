import numpy as np
import pytest
from hypothesis import given, strategies as st

from online_viterbi.trace import MemoryTrace, default_stride, record


def test_basic():
    t = MemoryTrace()
    for w in (1, 2, 3):
        record(t, w)
    assert t.peak == 3 and t.mean == 2
    assert t.samples.tolist() == [1, 2, 3]


def test_stride():
    t = MemoryTrace(stride=10)
    for w in range(1, 101):
        t.record(w % 37 + 1)
    assert t.samples.size == 10 and t.peak == 37


def test_empty():
    t = MemoryTrace()
    with pytest.raises(ValueError):
        t.summary()
    with pytest.raises(ValueError):
        t.mean
    with pytest.raises(ValueError):
        t.record(0)


def test_summary_only():
    t = MemoryTrace(stride=None)
    t.extend(np.arange(1, 1001))
    assert t.samples.size == 0 and t.summary() == {"n": 1000, "peak": 1000, "mean": 500.5}


@given(st.lists(st.integers(1, 50), min_size=1, max_size=300), st.integers(1, 7),
       st.integers(1, 299))
def test_extend_matches_record(ws, stride, cut):
    marks = (1, 10, 100)
    a, b = MemoryTrace(stride, marks), MemoryTrace(stride, marks)
    for w in ws:
        a.record(w)
    b.extend(ws[:cut]).extend(ws[cut:])
    assert (a.n, a.peak, a.total) == (b.n, b.peak, b.total)
    assert a.samples.tolist() == b.samples.tolist()
    assert a.prefix_peaks == b.prefix_peaks


def test_default_stride():
    assert default_stride(5) == 1 and default_stride(10**6) == 100
