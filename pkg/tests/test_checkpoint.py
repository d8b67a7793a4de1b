import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from online_viterbi.checkpoint import CheckpointPlan, forward_step_count, viterbi_checkpoint
from online_viterbi.hmm import ImpossibleSequenceError, brute_force_decode, build_hmm
from online_viterbi.seqgen import GenSpec, gen_iid
from online_viterbi.trellis import viterbi_full

from conftest import random_instance


def test_plan():
    plan = CheckpointPlan.make(10, 3)
    assert plan.checkpoints == (1, 4, 7, 10)
    assert plan.blocks() == [(1, 3), (4, 6), (7, 9), (10, 10)]
    assert CheckpointPlan.make(10_000).block_len == 100
    assert CheckpointPlan.make(101).block_len == 11
    with pytest.raises(ValueError):
        CheckpointPlan.make(0)
    with pytest.raises(ValueError):
        CheckpointPlan.make(5, 0)


@pytest.mark.parametrize("L", [None, 1, 2, 5])
def test_n1(sym, L):
    run = viterbi_checkpoint(sym, [1], block_len=L)
    full = viterbi_full(sym, [1])
    assert run.path.tolist() == full.path.tolist() and run.log_prob == full.log_prob
    assert forward_step_count(run) == 1


def test_step_counts(sym):
    seq = gen_iid(GenSpec("iid", 100, 3, distribution=(0.5, 0.5)))
    run = viterbi_checkpoint(sym, seq, block_len=10)
    # 100 forward columns plus 9 recomputed blocks of 10
    assert forward_step_count(run) == 190 <= 200
    assert forward_step_count(viterbi_checkpoint(sym, seq, block_len=100)) == 100
    assert forward_step_count(viterbi_checkpoint(sym, seq, block_len=1000)) == 100


def test_bounds_10k(sym):
    seq = gen_iid(GenSpec("iid", 10_000, 5, distribution=(0.5, 0.5)))
    run = viterbi_checkpoint(sym, seq)
    assert run.trace.peak <= 201
    assert forward_step_count(run) <= 20_000
    assert run.path.tolist() == viterbi_full(sym, seq).path.tolist()


@pytest.mark.parametrize("n,L", [(1000, 7), (1000, 31), (999, 1), (50, 50)])
def test_peak_within_plan_bound(sym, n, L):
    seq = gen_iid(GenSpec("iid", n, n + L, distribution=(0.5, 0.5)))
    run = viterbi_checkpoint(sym, seq, block_len=L, stride=1)
    assert run.trace.peak <= CheckpointPlan.make(n, L).column_bound()
    assert run.trace.n == forward_step_count(run)


def test_impossible_position():
    h = build_hmm([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]])
    for L in (1, 2, 4):
        with pytest.raises(ImpossibleSequenceError) as info:
            viterbi_checkpoint(h, [0, 0, 0, 0, 1], block_len=L)
        assert info.value.position == 5


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**7), st.sampled_from(["1", "2", "3", "n", "sqrt"]))
def test_matches_oracle(seed, which):
    hmm, seq = random_instance(seed)
    n = seq.size
    L = {"1": 1, "2": 2, "3": 3, "n": n, "sqrt": None}[which]
    run = viterbi_checkpoint(hmm, seq, block_len=L)
    path, lp = brute_force_decode(hmm, seq)
    assert run.path.tolist() == path.tolist()
    assert run.log_prob == pytest.approx(lp, abs=1e-9)
    Lr = min(L or math.isqrt(n - 1) + 1, n)
    assert forward_step_count(run) == n + (math.ceil(n / Lr) - 1) * Lr
