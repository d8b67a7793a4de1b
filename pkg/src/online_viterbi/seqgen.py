"""Seeded generators for test and benchmark sequences, plus sequence files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .hmm import Hmm, build_hmm

# Recorded in every generated file and report so corpora can be replayed.
RNG_ALGORITHM = "numpy.PCG64/v1"

# Stand-in base composition for DNA-like i.i.d. input (A, C, G, T); not measured data.
DEFAULT_DNA = (0.29, 0.21, 0.21, 0.29)


def make_rng(seed) -> np.random.Generator:
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True, eq=False)
class GenSpec:
    """What to generate: ``kind`` is ``"iid"`` (needs ``distribution``) or ``"hmm"`` (needs ``hmm``)."""

    kind: str
    length: int
    seed: int
    distribution: tuple | None = None
    hmm: Hmm | None = None

    def __post_init__(self):
        if self.kind not in ("iid", "hmm"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.kind == "iid":
            p = np.asarray(self.distribution, dtype=np.float64)
            if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
                raise ValueError("iid distribution must be a probability vector")
        elif self.hmm is None:
            raise ValueError("hmm generator needs a model")

    @property
    def alphabet_size(self):
        return len(self.distribution) if self.kind == "iid" else self.hmm.alphabet_size

    def with_seed(self, seed):
        return GenSpec(self.kind, self.length, seed, self.distribution, self.hmm)


def random_hmm(m, alphabet_size, seed, zero_frac=0.0, stickiness=None, alphabet=None):
    """Random stochastic model for tests and benchmarks.

    Rows are Dirichlet(1) draws. ``zero_frac`` of the entries are zeroed
    (keeping at least one positive entry per row) before renormalising.
    With ``stickiness`` set, each transition row is mixed so the
    self-transition carries at least that much mass.
    """
    rng = make_rng(seed)

    def rows(r, c):
        a = rng.dirichlet(np.ones(c), size=r)
        if zero_frac > 0 and c > 1:
            mask = rng.random((r, c)) < zero_frac
            keep = rng.integers(0, c, r)
            mask[np.arange(r), keep] = False
            a[mask] = 0.0
            a /= a.sum(axis=1, keepdims=True)
        return a

    init = rows(1, m)[0]
    trans = rows(m, m)
    if stickiness is not None:
        trans = (1 - stickiness) * trans + stickiness * np.eye(m)
    emit = rows(m, alphabet_size)
    return build_hmm(init, trans, emit, alphabet=alphabet)


def gen_iid(spec: GenSpec):
    if spec.kind != "iid":
        raise ValueError("gen_iid needs an iid spec")
    p = np.asarray(spec.distribution, dtype=np.float64)
    rng = make_rng(spec.seed)
    cdf = _cum(p)
    idx = np.searchsorted(cdf, rng.random(spec.length), side="right")
    return np.minimum(idx, p.size - 1).astype(np.int64)


@njit(cache=True)
def _sample_chain(cum_init, cum_trans, cum_emit, u_state, u_emit, states, symbols):
    n = states.shape[0]
    s = np.searchsorted(cum_init, u_state[0], side="right")
    for i in range(n):
        if i > 0:
            s = np.searchsorted(cum_trans[s], u_state[i], side="right")
        states[i] = s
        symbols[i] = np.searchsorted(cum_emit[s], u_emit[i], side="right")


def _cum(p):
    c = np.minimum(np.cumsum(p, axis=-1), 1.0)
    c[..., -1] = 1.0
    return np.ascontiguousarray(c)


def gen_from_hmm(spec: GenSpec):
    """Run the model generatively; returns ``(symbols, true_path)``."""
    if spec.kind != "hmm":
        raise ValueError("gen_from_hmm needs an hmm spec")
    h = spec.hmm
    rng = make_rng(spec.seed)
    n = spec.length
    u_state = rng.random(n)
    u_emit = rng.random(n)
    states = np.empty(n, dtype=np.int64)
    symbols = np.empty(n, dtype=np.int64)
    if n:
        _sample_chain(_cum(h.initial), _cum(h.transitions), _cum(h.emissions),
                      u_state, u_emit, states, symbols)
    return symbols, states


def generate(spec: GenSpec):
    """Symbols for ``spec`` regardless of kind."""
    if spec.kind == "iid":
        return gen_iid(spec)
    return gen_from_hmm(spec)[0]


# -- sequence files -----------------------------------------------------------

def read_sequence_text(text, alphabet):
    """Symbol codes from raw text; whitespace and ``>`` header lines are skipped.

    Raises ``ValueError`` naming the 1-based position of the first symbol
    outside ``alphabet``.
    """
    body = "".join(line for line in text.splitlines() if not line.startswith(">"))
    body = "".join(body.split())
    raw = np.frombuffer(body.encode("utf-32-le"), dtype=np.uint32)
    table = {ord(c): i for i, c in enumerate(alphabet)}
    codes = np.full(raw.size, -1, dtype=np.int64)
    for cp, code in table.items():
        codes[raw == cp] = code
    bad = np.flatnonzero(codes < 0)
    if bad.size:
        k = bad[0]
        raise ValueError(f"symbol {body[k]!r} at position {k + 1} not in alphabet {alphabet!r}")
    return codes


def read_sequence(path, alphabet):
    return read_sequence_text(Path(path).read_text(), alphabet)


def format_sequence(codes, alphabet, header=None, width=80):
    chars = "".join(alphabet[c] for c in codes)
    lines = [f">{header}"] if header else []
    lines.extend(chars[i : i + width] for i in range(0, len(chars), width))
    return "\n".join(lines) + "\n"


def write_sequence(path, codes, alphabet, header=None):
    Path(path).write_text(format_sequence(codes, alphabet, header))


def write_path(path, states, labels=None, header=None):
    lines = [f"# {header}"] if header else []
    lines.extend(str(labels[s]) if labels else str(int(s)) for s in states)
    Path(path).write_text("\n".join(lines) + "\n")
