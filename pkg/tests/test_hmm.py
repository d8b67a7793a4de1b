import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from online_viterbi.hmm import (ImpossibleSequenceError, ModelError, brute_force_decode,
                                build_hmm, format_model, joint_log_prob, load_model,
                                parse_model, save_model, symmetric_two_state)
from online_viterbi.randwalk import k_parameter

from conftest import random_instance, tied_model


def test_one_state_identity(one_state):
    assert one_state.m == 1
    for a in (one_state.log_initial, one_state.log_transitions, one_state.log_emissions):
        assert np.all(a == 0.0)


def test_row_sum_error():
    with pytest.raises(ModelError, match="sums"):
        build_hmm([0.5, 0.5], [[0.9, 0.0], [0.5, 0.5]], [[1.0], [1.0]])


@pytest.mark.parametrize("bad", [
    dict(initial=[1.2, -0.2]),
    dict(transitions=[[0.5, 0.5]]),
    dict(emissions=[[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]),
    dict(initial=[0.5, float("nan")]),
])
def test_malformed(bad):
    args = dict(initial=[0.5, 0.5], transitions=[[0.5, 0.5], [0.5, 0.5]],
                emissions=[[0.5, 0.5], [0.5, 0.5]])
    args.update(bad)
    with pytest.raises(ModelError):
        build_hmm(**args)


def test_arrays_read_only(sym):
    with pytest.raises(ValueError):
        sym.log_transitions[0, 0] = 0.0


def test_zero_stored_as_neg_inf():
    h = build_hmm([1.0, 0.0], [[1.0, 0.0], [0.5, 0.5]], [[1.0], [1.0]])
    assert h.log_initial[1] == -np.inf and h.log_transitions[0, 1] == -np.inf


def test_symmetric_structure(sym):
    np.testing.assert_allclose(sym.transitions, [[0.9, 0.1], [0.1, 0.9]])
    np.testing.assert_allclose(sym.emissions, [[0.8, 0.2], [0.2, 0.8]])
    # re-validating the linear parameters succeeds
    build_hmm(sym.initial, sym.transitions, sym.emissions)


@pytest.mark.parametrize("t,e", [(0.5, 0.2), (0.1, 0.5), (0.0, 0.2), (0.1, 0.7)])
def test_symmetric_bounds(t, e):
    with pytest.raises(ModelError):
        symmetric_two_state(t, e)


def test_symmetric_k4():
    assert k_parameter(1 / 17, 0.2) == 4
    symmetric_two_state(1 / 17, 0.2)


def test_joint_log_prob_cases(one_state, sym):
    assert joint_log_prob(one_state, [0, 0, 0], [0, 0, 0]) == 0.0
    expect = math.log(0.5) + math.log(0.8) + math.log(0.9) + math.log(0.8)
    assert joint_log_prob(sym, [0, 0], [0, 0]) == pytest.approx(expect, abs=1e-12)
    h = build_hmm([1.0, 0.0], [[1.0, 0.0], [0.5, 0.5]], [[1.0], [1.0]])
    assert joint_log_prob(h, [0, 0], [0, 1]) == -np.inf


def test_joint_log_prob_shape_mismatch(sym):
    with pytest.raises(ValueError):
        joint_log_prob(sym, [0, 1], [0])


def test_brute_force_small(one_state, sym):
    path, lp = brute_force_decode(one_state, [0, 0, 0])
    assert path.tolist() == [0, 0, 0] and lp == joint_log_prob(one_state, [0, 0, 0], path)
    path, _ = brute_force_decode(sym, [0, 0, 0])
    assert path.tolist() == [0, 0, 0]


def test_brute_force_size_guard(sym):
    with pytest.raises(ValueError, match="too large"):
        brute_force_decode(sym, [0] * 13)


def test_brute_force_impossible():
    h = build_hmm([1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ImpossibleSequenceError):
        brute_force_decode(h, [0, 0])


def test_brute_force_tie_break_reversed_order():
    # all 8 paths tie; the smallest reversed sequence is all zeros
    h = tied_model(2, 1)
    path, _ = brute_force_decode(h, [0, 0, 0])
    assert path.tolist() == [0, 0, 0]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_brute_force_is_maximal(seed):
    hmm, seq = random_instance(seed, n_range=(1, 6))
    path, lp = brute_force_decode(hmm, seq)
    assert lp == pytest.approx(joint_log_prob(hmm, seq, path), abs=1e-12)
    # no single-position change improves the path
    for i in range(seq.size):
        for s in range(hmm.m):
            alt = path.copy()
            alt[i] = s
            assert joint_log_prob(hmm, seq, alt) <= lp + 1e-12


MODEL_TEXT = """\
# two-state test model
hmm m=2 alphabet=ab
labels on off
initial 0.6 0.4
trans 0.7 0.3   # row 0
trans 0.2 0.8
emit 0.9 0.1
emit 0.5 0.5
"""


def test_parse_model():
    h = parse_model(MODEL_TEXT)
    assert h.alphabet == "ab" and h.labels == ("on", "off")
    np.testing.assert_allclose(h.initial, [0.6, 0.4])
    np.testing.assert_allclose(h.transitions[0], [0.7, 0.3])
    assert h.encode("abba").tolist() == [0, 1, 1, 0]


def test_parse_default_initial():
    h = parse_model("hmm m=2 alphabet=ab\ntrans 1 0\ntrans 0 1\nemit 1 0\nemit 0 1\n")
    np.testing.assert_allclose(h.initial, [0.5, 0.5])


@pytest.mark.parametrize("text", [
    "",
    "initial 1\n",
    "hmm m=2\n",
    "hmm m=1 alphabet=a\ntrans 1\n",
    "hmm m=1 alphabet=a\ntrans 1\nemit x\n",
    "hmm m=1 alphabet=a\ntrans 1\nemit 1\nbogus 1\n",
    "hmm m=2 alphabet=a\ntrans 1 0\ntrans 0 1\nemit 1\nemit 0.5\n",
    "hmm m=2 alphabet=ab\ntrans 1 0\ntrans 0 1 0\nemit 1 0\nemit 0 1\n",
])
def test_parse_errors(text):
    with pytest.raises(ModelError):
        parse_model(text)


def test_model_roundtrip(tmp_path):
    h = parse_model(MODEL_TEXT)
    save_model(h, tmp_path / "m.hmm")
    g = load_model(tmp_path / "m.hmm")
    assert format_model(g) == format_model(h)
    np.testing.assert_array_equal(g.log_emissions, h.log_emissions)
