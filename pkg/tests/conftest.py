import math

import numpy as np
import pytest

from online_viterbi import build_hmm, symmetric_two_state
from online_viterbi.seqgen import GenSpec, gen_from_hmm, make_rng, random_hmm


@pytest.fixture
def sym():
    return symmetric_two_state(0.1, 0.2)


@pytest.fixture
def one_state():
    return build_hmm([1.0], [[1.0]], [[1.0]], alphabet="x")


ORACLE_BITS = 18


def random_instance(seed, m_range=(1, 6), k_max=4, n_range=(1, 12), zero_frac=0.3, oracle=True):
    """Random model plus a sequence that the model can generate."""
    rng = make_rng(seed)
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    k = int(rng.integers(1, k_max + 1))
    hi = n_range[1]
    if oracle and m > 1:
        # keep m**n within ORACLE_BITS so enumeration stays fast
        hi = min(hi, int(ORACLE_BITS // math.log2(m)))
    n = int(rng.integers(n_range[0], max(hi, n_range[0]) + 1))
    hmm = random_hmm(m, k, seed=seed + 10_000, zero_frac=zero_frac)
    seq, _ = gen_from_hmm(GenSpec("hmm", n, seed + 20_000, hmm=hmm))
    return hmm, seq


def tied_model(m, k):
    """Uniform model: every path of a sequence ties."""
    return build_hmm(np.full(m, 1 / m), np.full((m, m), 1 / m), np.full((m, k), 1 / k))
