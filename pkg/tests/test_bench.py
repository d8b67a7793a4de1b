import math

import numpy as np
import pytest

from online_viterbi.bench import (CURVE_COLUMNS, REPORT_COLUMNS, fit_log_slope, prefix_marks,
                                  read_csv, run_benchmark, to_csv)
from online_viterbi.hmm import symmetric_two_state
from online_viterbi.seqgen import GenSpec

UNIFORM = (0.5, 0.5)


def bench(n=1000, trials=2, seed=1, **kw):
    h = symmetric_two_state(1 / 17, 0.2)
    return run_benchmark(h, GenSpec("iid", n, seed, distribution=UNIFORM), trials=trials, **kw)


def test_reports():
    res = bench()
    assert len(res.reports) == 6
    by = {(r.decoder, r.seed): r for r in res.reports}
    assert by["full", 1].peak_window == 1000
    assert by["checkpoint", 1].peak_window <= math.ceil(1000 / 32) + 32 + 1
    assert by["online", 1].peak_window <= 1000
    for s in (1, 2):
        assert len({by[d, s].log_prob for d in ("full", "checkpoint", "online")}) == 1
    assert by["online", 1].tree_created is not None and by["full", 1].tree_created is None


def test_reproducible_without_wall_time():
    cols = [c for c in REPORT_COLUMNS if c != "wall_time_s"]
    a, b = bench(stride=7), bench(stride=7)
    assert to_csv(a.reports, cols) == to_csv(b.reports, cols)
    assert to_csv(a.curve, CURVE_COLUMNS) == to_csv(b.curve, CURVE_COLUMNS)


def test_curve():
    res = bench(n=10_000, trials=3)
    assert [r["n_prefix"] for r in res.curve] == [10, 100, 1000, 10_000]
    means = [r["mean_max"] for r in res.curve]
    assert means == sorted(means)
    assert all(r["trials"] == 3 for r in res.curve)


def test_bad_args():
    with pytest.raises(ValueError):
        bench(trials=0)
    with pytest.raises(ValueError):
        bench(decoders=("full", "fast"))
    h = symmetric_two_state(0.1, 0.2)
    with pytest.raises(ValueError):
        run_benchmark(h, GenSpec("iid", 10, 1, distribution=(0.3, 0.3, 0.4)))


def test_prefix_marks():
    assert prefix_marks(5) == [] and prefix_marks(12_345) == [10, 100, 1000, 10_000]


def test_fit_exact_line():
    pts = [(n, 2.5 * math.log(n) + 1.25) for n in (10, 100, 1000, 10**4)]
    a, b, res = fit_log_slope(pts)
    assert a == pytest.approx(2.5) and b == pytest.approx(1.25) and res < 1e-9


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_log_slope([(10, 1.0), (100, 2.0)])
    with pytest.raises(ValueError):
        fit_log_slope([(10, 1.0), (10, 2.0), (100, 2.0)])


def test_csv_roundtrip():
    res = bench(n=100, trials=1)
    text = to_csv(res.reports, REPORT_COLUMNS, config={"seed": 1})
    assert text.startswith("# seed=1\n")
    rows = read_csv(text)
    assert [r["decoder"] for r in rows] == ["full", "checkpoint", "online"]
    assert float(rows[0]["log_prob"]) == res.reports[0].log_prob
    assert rows[0]["tree_created"] == ""
