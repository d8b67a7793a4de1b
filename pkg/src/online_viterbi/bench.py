"""Benchmark harness: decode generated inputs and collect memory/time reports."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .checkpoint import viterbi_checkpoint
from .hmm import Hmm
from .online import viterbi_online
from .seqgen import RNG_ALGORITHM, GenSpec, generate
from .trellis import backptr_dtype, viterbi_full

DECODERS = ("full", "checkpoint", "online")

REPORT_COLUMNS = (
    "decoder", "model", "n", "seed", "wall_time_s", "forward_steps", "peak_window",
    "mean_window", "peak_bytes", "log_prob", "tree_created", "tree_deleted",
    "tree_relink_hops", "rng",
)
CURVE_COLUMNS = ("decoder", "n_prefix", "mean_max", "stderr", "trials")


class BenchError(RuntimeError):
    pass


@dataclass
class BenchReport:
    decoder: str
    model: str
    n: int
    seed: int
    wall_time_s: float
    forward_steps: int
    peak_window: int
    mean_window: float
    peak_bytes: int
    log_prob: float
    tree_created: int | None = None
    tree_deleted: int | None = None
    tree_relink_hops: int | None = None
    rng: str = RNG_ALGORITHM

    def tree_ops_total(self):
        return self.tree_created + self.tree_deleted + self.tree_relink_hops


@dataclass
class BenchResult:
    reports: list
    curve: list
    prefix_peaks: dict


def prefix_marks(n):
    """Powers of ten up to ``n``."""
    return [10**k for k in range(1, int(math.log10(n)) + 1) if 10**k <= n] if n >= 10 else []


def decode_with(decoder, hmm, seq, block_len=None, stride=None, marks=()):
    if decoder == "full":
        return viterbi_full(hmm, seq, stride=stride)
    if decoder == "checkpoint":
        return viterbi_checkpoint(hmm, seq, block_len=block_len, stride=stride)
    if decoder == "online":
        return viterbi_online(hmm, seq, stride=stride, marks=marks)
    raise ValueError(f"unknown decoder {decoder!r}")


def run_benchmark(hmm: Hmm, genspec: GenSpec, decoders=DECODERS, trials=1, seeds=None,
                  model_id="model", block_len=None, stride=None, marks=None):
    """Decode ``trials`` generated sequences with every decoder.

    Seeds default to ``genspec.seed + i``. For the online decoder the running
    peak window is also sampled at each prefix length in ``marks`` (powers
    of ten by default) and averaged over trials into ``curve`` rows.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if genspec.alphabet_size != hmm.alphabet_size:
        raise ValueError("generator alphabet does not match the model")
    for d in decoders:
        if d not in DECODERS:
            raise ValueError(f"unknown decoder {d!r}")
    if seeds is None:
        seeds = [genspec.seed + i for i in range(trials)]
    if len(seeds) != trials:
        raise ValueError("need one seed per trial")
    marks = prefix_marks(genspec.length) if marks is None else list(marks)
    itemsize = np.dtype(backptr_dtype(hmm.m)).itemsize

    reports, peaks = [], {d: {k: [] for k in marks} for d in decoders}
    for seed in seeds:
        seq = generate(genspec.with_seed(seed))
        log_probs = {}
        for d in decoders:
            t0 = time.perf_counter()
            try:
                run = decode_with(d, hmm, seq, block_len=block_len, stride=stride,
                                  marks=marks if d == "online" else ())
            except ValueError as exc:
                raise BenchError(f"decoder {d}, seed {seed}, n={seq.size}: {exc}") from exc
            wall = time.perf_counter() - t0
            ops = run.tree_ops or {}
            reports.append(BenchReport(
                decoder=d, model=model_id, n=int(seq.size), seed=int(seed),
                wall_time_s=wall, forward_steps=run.forward_steps,
                peak_window=run.trace.peak, mean_window=run.trace.mean,
                peak_bytes=run.trace.peak * hmm.m * itemsize, log_prob=run.log_prob,
                tree_created=ops.get("created"), tree_deleted=ops.get("deleted"),
                tree_relink_hops=ops.get("relink_hops"),
            ))
            log_probs[d] = run.log_prob
            if d == "online":
                for k in marks:
                    peaks[d][k].append(run.trace.prefix_peaks[k])
            else:
                # full and checkpoint hold a fixed plan; their prefix peak is just the peak
                for k in marks:
                    peaks[d][k].append(k if d == "full" else run.trace.peak)
        if len(set(log_probs.values())) > 1:
            raise BenchError(f"decoders disagree on seed {seed}: {log_probs}")

    curve = []
    for d in decoders:
        if d != "online":
            continue
        for k in marks:
            v = np.asarray(peaks[d][k], dtype=np.float64)
            se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
            curve.append({"decoder": d, "n_prefix": k, "mean_max": float(v.mean()),
                          "stderr": se, "trials": int(v.size)})
    return BenchResult(reports, curve, peaks)


def fit_log_slope(points):
    """Least-squares fit ``mean_max ~ slope * ln(n) + intercept``.

    Returns ``(slope, intercept, residual)`` with the residual as the root
    mean square error of the fit.
    """
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (n, value) points")
    x = np.log(pts[:, 0])
    if np.unique(x).size < pts.shape[0] or np.any(pts[:, 0] <= 0):
        raise ValueError("points need distinct positive n")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, pts[:, 1], rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - pts[:, 1]) ** 2)))
    return float(coef[0]), float(coef[1]), rms


# -- CSV ------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows, columns, config=None, include=None):
    """CSV text with ``# key=value`` config lines before the header row."""
    buf = io.StringIO()
    for k, v in (config or {}).items():
        buf.write(f"# {k}={v}\n")
    cols = [c for c in columns if include is None or c in include]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = asdict(r) if hasattr(r, "__dataclass_fields__") else r
        w.writerow([_fmt(d.get(c)) for c in cols])
    return buf.getvalue()


def read_csv(text):
    """Rows of a CSV written by :func:`to_csv`, skipping config lines."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
