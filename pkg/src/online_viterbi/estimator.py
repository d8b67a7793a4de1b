"""scikit-learn compatible front end for the decoders."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, column_or_1d

from .bench import decode_with
from .hmm import Hmm, build_hmm

ALGORITHMS = ("full", "checkpoint", "online")


def check_sequence(X, alphabet_size):
    """Validate one sequence of symbol codes and return it as int64."""
    x = column_or_1d(np.asarray(X), warn=True)
    if x.size == 0:
        raise ValueError("empty sequence")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.mod(x, 1) == 0):
            raise ValueError("symbol codes must be integers")
    x = x.astype(np.int64)
    if x.min() < 0 or x.max() >= alphabet_size:
        raise ValueError(f"symbol codes must lie in [0, {alphabet_size})")
    return x


def _is_batch(X):
    if isinstance(X, (list, tuple)) and X and not np.isscalar(X[0]):
        return True
    return isinstance(X, np.ndarray) and X.ndim == 2 and 1 not in X.shape


class ViterbiDecoder(BaseEstimator):
    """Most-probable-path decoder with fixed (not learned) HMM parameters.

    ``fit`` only validates the parameters; ``predict`` returns the Viterbi
    path. All three algorithms give identical paths and differ only in
    memory use.

    Parameters
    ----------
    initial, transitions, emissions : array_like
        Linear-space model parameters, see :func:`build_hmm`.
    algorithm : {"full", "checkpoint", "online"}
    block_len : int, optional
        Checkpoint block length; default ``ceil(sqrt(n))``.
    """

    def __init__(self, initial=None, transitions=None, emissions=None,
                 algorithm="online", block_len=None):
        self.initial = initial
        self.transitions = transitions
        self.emissions = emissions
        self.algorithm = algorithm
        self.block_len = block_len

    @classmethod
    def from_hmm(cls, hmm: Hmm, **kwargs):
        return cls(hmm.initial, hmm.transitions, hmm.emissions, **kwargs)

    def fit(self, X=None, y=None):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.block_len is not None and self.block_len < 1:
            raise ValueError("block_len must be >= 1")
        if self.transitions is None or self.emissions is None:
            raise ValueError("transitions and emissions are required")
        initial = self.initial
        if initial is None:
            m = np.asarray(self.transitions).shape[0]
            initial = np.full(m, 1.0 / m)
        self.hmm_ = build_hmm(initial, self.transitions, self.emissions)
        self.n_states_ = self.hmm_.m
        self.n_symbols_ = self.hmm_.alphabet_size
        return self

    def decode(self, X):
        """Full :class:`Decoding` (path, log-probability, trace) for one sequence."""
        check_is_fitted(self, "hmm_")
        x = check_sequence(X, self.n_symbols_)
        return decode_with(self.algorithm, self.hmm_, x, block_len=self.block_len)

    def predict(self, X):
        """Viterbi path for one sequence, or a list of paths for a batch."""
        if _is_batch(X):
            return [self.decode(x).path for x in X]
        return self.decode(X).path

    def score(self, X, y=None):
        """Log-probability of the best path (summed over a batch)."""
        if _is_batch(X):
            return float(sum(self.decode(x).log_prob for x in X))
        return self.decode(X).log_prob
