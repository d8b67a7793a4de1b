import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from online_viterbi.estimator import ViterbiDecoder
from online_viterbi.hmm import symmetric_two_state
from online_viterbi.seqgen import GenSpec, gen_iid
from online_viterbi.trellis import viterbi_full


@pytest.fixture
def model():
    return symmetric_two_state(0.1, 0.2)


def test_predict_matches_full(model):
    x = gen_iid(GenSpec("iid", 500, 1, distribution=(0.5, 0.5)))
    expect = viterbi_full(model, x).path
    for alg in ("full", "checkpoint", "online"):
        est = ViterbiDecoder.from_hmm(model, algorithm=alg).fit()
        np.testing.assert_array_equal(est.predict(x), expect)
        assert est.score(x) == viterbi_full(model, x).log_prob


def test_batch(model):
    est = ViterbiDecoder.from_hmm(model).fit()
    xs = [[0, 0, 1], [1, 1], [0]]
    paths = est.predict(xs)
    assert [p.tolist() for p in paths] == [est.predict(x).tolist() for x in xs]
    assert est.score(xs) == pytest.approx(sum(est.score(x) for x in xs))


def test_params_and_clone(model):
    est = ViterbiDecoder.from_hmm(model, algorithm="checkpoint", block_len=3)
    assert est.get_params()["block_len"] == 3
    c = clone(est).set_params(algorithm="full").fit()
    assert c.algorithm == "full" and c.n_states_ == 2 and c.n_symbols_ == 2


def test_default_initial():
    est = ViterbiDecoder(transitions=[[1.0]], emissions=[[0.5, 0.5]]).fit()
    assert est.predict([0, 1, 1]).tolist() == [0, 0, 0]


def test_errors(model):
    with pytest.raises(NotFittedError):
        ViterbiDecoder.from_hmm(model).predict([0])
    with pytest.raises(ValueError):
        ViterbiDecoder.from_hmm(model, algorithm="fast").fit()
    with pytest.raises(ValueError):
        ViterbiDecoder.from_hmm(model, block_len=0).fit()
    with pytest.raises(ValueError):
        ViterbiDecoder().fit()
    est = ViterbiDecoder.from_hmm(model).fit()
    for bad in ([], [0, 2], [0.5], [-1]):
        with pytest.raises(ValueError):
            est.predict(bad)
