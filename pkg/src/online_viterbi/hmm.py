"""Hidden Markov model container, model files and the brute-force decoding oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ROW_SUM_TOL = 1e-9
MAX_BRUTE_FORCE_BITS = 24.0


class ModelError(ValueError):
    """Raised for malformed or non-stochastic model parameters."""


class ImpossibleSequenceError(ValueError):
    """Raised when no state path can generate the input.

    ``position`` is the 1-based sequence position at which every state
    became unreachable.
    """

    def __init__(self, position, message=None):
        self.position = position
        super().__init__(message or f"sequence impossible under model at position {position}")


def _as_log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Hmm:
    """Immutable HMM with all parameters in natural-log space.

    Rows of ``log_transitions`` are source states; ``log_emissions`` is
    states x symbols. Zero probabilities are stored as ``-inf``.
    """

    log_initial: np.ndarray
    log_transitions: np.ndarray
    log_emissions: np.ndarray
    alphabet: str | None = None
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        for name in ("log_initial", "log_transitions", "log_emissions"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def m(self) -> int:
        return self.log_transitions.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.log_emissions.shape[1]

    @property
    def initial(self):
        return np.exp(self.log_initial)

    @property
    def transitions(self):
        return np.exp(self.log_transitions)

    @property
    def emissions(self):
        return np.exp(self.log_emissions)

    def encode(self, text):
        """Map alphabet characters to symbol codes; whitespace is skipped."""
        if self.alphabet is None:
            raise ModelError("model has no alphabet declaration")
        lookup = {c: i for i, c in enumerate(self.alphabet)}
        codes = []
        for pos, ch in enumerate((c for c in text if not c.isspace()), start=1):
            try:
                codes.append(lookup[ch])
            except KeyError:
                raise ValueError(f"symbol {ch!r} at position {pos} not in model alphabet") from None
        return np.asarray(codes, dtype=np.int64)

    def decode_symbols(self, codes):
        if self.alphabet is None:
            raise ModelError("model has no alphabet declaration")
        return "".join(self.alphabet[c] for c in codes)


def _check_stochastic(name, a, ndim):
    if a.ndim != ndim:
        raise ModelError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{name} contains non-finite entries")
    if np.any(a < 0) or np.any(a > 1):
        raise ModelError(f"{name} has entries outside [0, 1]")
    sums = a.sum(axis=-1)
    bad = np.flatnonzero(np.abs(np.atleast_1d(sums) - 1.0) > ROW_SUM_TOL)
    if bad.size:
        where = "" if ndim == 1 else f" row {bad[0]}"
        raise ModelError(f"{name}{where} sums to {np.atleast_1d(sums)[bad[0]]!r}, expected 1")


def build_hmm(initial, transitions, emissions, alphabet=None, labels=None) -> Hmm:
    """Validate linear-space parameters and return a log-space :class:`Hmm`.

    Parameters
    ----------
    initial : array_like, shape (m,)
    transitions : array_like, shape (m, m)
        ``transitions[k, j]`` is the probability of moving from ``k`` to ``j``.
    emissions : array_like, shape (m, alphabet_size)
    alphabet : str, optional
        One character per symbol code, used for text I/O.
    labels : sequence of str, optional
        Display names for states.
    """
    initial = np.asarray(initial, dtype=np.float64)
    transitions = np.asarray(transitions, dtype=np.float64)
    emissions = np.asarray(emissions, dtype=np.float64)
    _check_stochastic("initial", initial, 1)
    _check_stochastic("transitions", transitions, 2)
    _check_stochastic("emissions", emissions, 2)
    m = initial.shape[0]
    if m < 1:
        raise ModelError("model needs at least one state")
    if transitions.shape != (m, m):
        raise ModelError(f"transitions shape {transitions.shape} does not match {m} states")
    if emissions.shape[0] != m or emissions.shape[1] < 1:
        raise ModelError(f"emissions shape {emissions.shape} does not match {m} states")
    if alphabet is not None:
        if len(alphabet) != emissions.shape[1] or len(set(alphabet)) != len(alphabet):
            raise ModelError("alphabet must list one distinct character per emission column")
        if any(c.isspace() or c in "#>" for c in alphabet):
            raise ModelError("alphabet characters may not be whitespace, '#' or '>'")
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != m:
            raise ModelError("need one label per state")
    return Hmm(_as_log(initial), _as_log(transitions), _as_log(emissions), alphabet, labels)


def symmetric_two_state(t, e) -> Hmm:
    """Two-state, two-symbol model with self-transition ``1 - t``.

    State 0 emits symbol 0 with probability ``1 - e``; state 1 mirrors it.
    The initial distribution is uniform.
    """
    if not (0 < t < 0.5 and 0 < e < 0.5):
        raise ModelError(f"need 0 < t < 1/2 and 0 < e < 1/2, got t={t!r}, e={e!r}")
    return build_hmm(
        [0.5, 0.5],
        [[1 - t, t], [t, 1 - t]],
        [[1 - e, e], [e, 1 - e]],
        alphabet="01",
        labels=("A", "B"),
    )


def check_symbols(hmm: Hmm, seq):
    """Return ``seq`` as an int64 array, validating every code."""
    seq = np.asarray(seq)
    if seq.ndim != 1:
        raise ValueError("symbol sequence must be one-dimensional")
    if seq.size and not np.issubdtype(seq.dtype, np.integer):
        raise ValueError("symbol codes must be integers")
    seq = seq.astype(np.int64, copy=False)
    bad = np.flatnonzero((seq < 0) | (seq >= hmm.alphabet_size))
    if bad.size:
        raise ValueError(
            f"symbol {seq[bad[0]]} at position {bad[0] + 1} outside [0, {hmm.alphabet_size})"
        )
    return seq


def joint_log_prob(hmm: Hmm, seq, path) -> float:
    """Log of Pr(seq, path), accumulated left to right."""
    seq = check_symbols(hmm, seq)
    path = np.asarray(path, dtype=np.int64)
    if path.shape != seq.shape:
        raise ValueError(f"path length {path.size} != sequence length {seq.size}")
    if seq.size == 0:
        raise ValueError("empty sequence")
    if np.any((path < 0) | (path >= hmm.m)):
        raise ValueError("state index out of range")
    total = hmm.log_initial[path[0]] + hmm.log_emissions[path[0], seq[0]]
    for i in range(1, seq.size):
        total = total + hmm.log_transitions[path[i - 1], path[i]]
        total = total + hmm.log_emissions[path[i], seq[i]]
    return float(total)


def brute_force_decode(hmm: Hmm, seq):
    """Most probable path by exhaustive enumeration of all ``m**n`` paths.

    Among equally probable paths the one whose reversed state sequence is
    lexicographically smallest wins, which is the ordering the dynamic
    programming backtrace produces. Scores are accumulated in the same
    order as :func:`joint_log_prob`.
    """
    seq = check_symbols(hmm, seq)
    n, m = seq.size, hmm.m
    if n == 0:
        raise ValueError("empty sequence")
    if n > 12 or n * math.log2(m) > MAX_BRUTE_FORCE_BITS:
        raise ValueError(f"instance too large to enumerate (m={m}, n={n})")
    total = m**n
    powers = m ** np.arange(n, dtype=np.int64)
    best_idx, best = -1, -np.inf
    chunk = 1 << 16
    # index sum(path[i] * m**i) orders paths by their reversed sequence
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        paths = (idx[:, None] // powers[None, :]) % m
        s = hmm.log_initial[paths[:, 0]] + hmm.log_emissions[paths[:, 0], seq[0]]
        for i in range(1, n):
            s = s + hmm.log_transitions[paths[:, i - 1], paths[:, i]]
            s = s + hmm.log_emissions[paths[:, i], seq[i]]
        k = int(np.argmax(s))
        if s[k] > best:
            best, best_idx = float(s[k]), lo + k
    if best_idx < 0:
        raise ImpossibleSequenceError(n, "sequence impossible under model")
    path = (best_idx // powers) % m
    return path.astype(np.int64), best


# -- model files ------------------------------------------------------------

def _floats(tokens, lineno):
    try:
        return [float(x) for x in tokens]
    except ValueError:
        raise ModelError(f"line {lineno}: expected numbers, got {' '.join(tokens)!r}") from None


def parse_model(text) -> Hmm:
    """Parse the line-oriented model format.

    ::

        hmm m=2 alphabet=01
        labels A B            # optional
        initial 0.5 0.5
        trans 0.9 0.1
        trans 0.1 0.9
        emit 0.8 0.2
        emit 0.2 0.8
    """
    m = alphabet = None
    initial, trans, emit, labels = None, [], [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "hmm":
            if m is not None:
                raise ModelError(f"line {lineno}: duplicate header")
            opts = {}
            for tok in rest:
                k, sep, v = tok.partition("=")
                if not sep:
                    raise ModelError(f"line {lineno}: bad header field {tok!r}")
                opts[k] = v
            try:
                m = int(opts["m"])
                alphabet = opts["alphabet"]
            except (KeyError, ValueError):
                raise ModelError(f"line {lineno}: header needs m=<int> and alphabet=<chars>") from None
        elif m is None:
            raise ModelError(f"line {lineno}: expected 'hmm' header first")
        elif key == "initial":
            if initial is not None:
                raise ModelError(f"line {lineno}: duplicate initial line")
            initial = _floats(rest, lineno)
        elif key == "trans":
            trans.append(_floats(rest, lineno))
        elif key == "emit":
            emit.append(_floats(rest, lineno))
        elif key == "labels":
            labels = rest
        else:
            raise ModelError(f"line {lineno}: unknown record {key!r}")
    if m is None:
        raise ModelError("missing 'hmm' header")
    if initial is None:
        initial = [1.0 / m] * m
    if len(trans) != m or len(emit) != m:
        raise ModelError(f"expected {m} trans and {m} emit lines, got {len(trans)} and {len(emit)}")
    try:
        return build_hmm(initial, trans, emit, alphabet=alphabet, labels=labels)
    except ValueError as exc:
        # ragged rows surface from numpy as plain ValueError
        raise ModelError(str(exc)) from None


def format_model(hmm: Hmm) -> str:
    if hmm.alphabet is None:
        raise ModelError("model has no alphabet declaration")
    rows = [f"hmm m={hmm.m} alphabet={hmm.alphabet}"]
    if hmm.labels is not None:
        rows.append("labels " + " ".join(hmm.labels))
    fmt = lambda v: " ".join(repr(float(x)) for x in v)  # noqa: E731
    rows.append("initial " + fmt(hmm.initial))
    rows.extend("trans " + fmt(r) for r in hmm.transitions)
    rows.extend("emit " + fmt(r) for r in hmm.emissions)
    return "\n".join(rows) + "\n"


def load_model(path) -> Hmm:
    return parse_model(Path(path).read_text())


def save_model(hmm: Hmm, path):
    Path(path).write_text(format_model(hmm))
