"""Random-walk model of coalescence for symmetric two-state HMMs.

Between coalescence points the log-score difference of the two states
moves by a fixed amount up or down per symbol, so on uniform i.i.d. input
a run without coalescence is a simple symmetric walk on ``(0, K)`` with
absorbing barriers. This module computes the barrier width ``K``, the
resulting run-length laws and their extreme-value consequences, and
simulates the walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .seqgen import RNG_ALGORITHM, make_rng


def _check_prob(name, x):
    if not 0 < x < 0.5:
        raise ValueError(f"{name} must lie in (0, 1/2), got {x!r}")


def _check_k(K):
    if int(K) != K or K < 2:
        raise ValueError(f"K must be an integer >= 2, got {K!r}")
    return int(K)


def k_parameter(t, e) -> int:
    """Barrier width ``ceil(2 * log((1-t)/t) / log((1-e)/e))``.

    ``t`` is the cross-transition and ``e`` the off-symbol emission
    probability of the symmetric model.
    """
    _check_prob("t", t)
    _check_prob("e", e)
    ratio = 2 * (math.log1p(-t) - math.log(t)) / (math.log1p(-e) - math.log(e))
    # ln(16)/ln(4) and friends land a few ulps off the integer
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9 * max(1.0, abs(ratio)):
        return int(nearest)
    return math.ceil(ratio)


def expected_run_length(K) -> float:
    return float(_check_k(K) - 1)


def run_length_prob_bounds(K, ell):
    """Explicit lower/upper bounds on Pr(run length is ``2*ell+1`` or ``2*ell+2``).

    Odd ``K``: ``(4/K) sin^2(pi/K) cos^(2 ell)(pi/K)`` and ``cos^(2 ell)(pi/K)``.
    Even ``K``: ``(2/K) sin^2(pi/K) (1 + cos(pi/K)) cos^(2 ell)(pi/K)`` and
    ``2 cos^(2 ell)(pi/K)``. Upper bounds are clamped to 1.
    """
    K = _check_k(K)
    if ell < 0 or int(ell) != ell:
        raise ValueError("ell must be a non-negative integer")
    c = math.cos(math.pi / K)
    s2 = math.sin(math.pi / K) ** 2
    decay = c ** (2 * ell)
    if K % 2:
        lower, upper = 4 / K * s2 * decay, decay
    else:
        lower, upper = 2 / K * s2 * (1 + c) * decay, 2 * decay
    return lower, min(upper, 1.0)


def run_length_distribution(K, max_len):
    """Exact Pr(run length == L) for ``L = 1..max_len``, by propagating the walk.

    Index 0 of the result is unused (always 0).
    """
    K = _check_k(K)
    p = np.zeros(K + 1)
    p[1] = 1.0
    out = np.zeros(max_len + 1)
    for L in range(1, max_len + 1):
        q = np.zeros(K + 1)
        q[2:] += 0.5 * p[1:K]
        q[: K - 1] += 0.5 * p[1:K]
        out[L] = q[0] + q[K]
        q[0] = q[K] = 0.0
        p = q
    return out


def run_length_prob_exact(K, ell):
    dist = run_length_distribution(K, 2 * ell + 2)
    return float(dist[2 * ell + 1] + dist[2 * ell + 2])


@dataclass(frozen=True)
class MemoryPrediction:
    K: int
    n: int
    exact_constant: float
    approx_constant: float
    predicted_expected_max: float


def expected_max_memory(K, n) -> MemoryPrediction:
    """Leading-order expected maximum run length over a length-``n`` input."""
    K = _check_k(K)
    if n < 2:
        raise ValueError("n must be >= 2")
    exact = 1.0 / -math.log(math.cos(math.pi / K)) if K > 2 else 0.0
    approx = 2 * K * K / math.pi**2
    return MemoryPrediction(K, int(n), exact, approx, exact * math.log(n))


def expected_max_of_runs(a, n) -> float:
    """``log_{1/a} n`` for runs whose tail decays like ``a**k``."""
    if not 0 < a < 1:
        raise ValueError("decay base must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be >= 2")
    return math.log(n) / math.log(1 / a)


@dataclass
class RunLengthDist:
    """Histogram of completed run lengths; ``histogram[L]`` counts runs of length L."""

    K: int
    histogram: np.ndarray
    total_runs: int
    steps: int
    restarts_absorbed: int = 0
    max_run: int = 0
    rng: str = field(default=RNG_ALGORITHM)

    @property
    def mean(self):
        if self.total_runs == 0:
            raise ValueError("no completed runs")
        lengths = np.arange(self.histogram.size)
        return float((lengths * self.histogram).sum() / self.total_runs)

    def bucket_count(self, ell):
        """Runs of length ``2*ell+1`` or ``2*ell+2``."""
        h = self.histogram
        return int(sum(h[L] for L in (2 * ell + 1, 2 * ell + 2) if L < h.size))

    def empirical_prob(self, ell):
        return self.bucket_count(ell) / self.total_runs


@njit(cache=True)
def _walk(K, coins, hist):
    # coins[i] == 0 is a +1 step. After absorption the next step either
    # re-enters at the barrier's neighbour or is absorbed again at once.
    x = 1
    length = 0
    barrier = -1
    runs = 0
    immediate = 0
    for i in range(coins.shape[0]):
        up = coins[i] == 0
        if barrier < 0:
            x += 1 if up else -1
            length += 1
            if x == 0 or x == K:
                hist[length] += 1
                runs += 1
                barrier = x
        elif (barrier == 0 and up) or (barrier == K and not up):
            x = 1 if barrier == 0 else K - 1
            length = 0
            barrier = -1
        else:
            immediate += 1
    return runs, immediate


def simulate_runs(K, total_steps, seed) -> RunLengthDist:
    """Simulate ``total_steps`` fair ±1 steps of the absorbed walk on ``(0, K)``.

    The walk starts at 1. On absorption the run length (steps taken since
    the walk last entered the interval) is recorded, and the next step
    either restarts the walk next to that barrier or, with probability
    1/2, hits the barrier again; the latter count in
    ``restarts_absorbed`` and not as runs. An unfinished final run is
    discarded.
    """
    K = _check_k(K)
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    coins = make_rng(seed).integers(0, 2, int(total_steps), dtype=np.int8)
    hist = np.zeros(int(total_steps) + 1, dtype=np.int64)
    runs, immediate = _walk(K, coins, hist)
    nz = np.flatnonzero(hist)
    hist = hist[: (nz[-1] + 1 if nz.size else 1)].copy()
    return RunLengthDist(K, hist, int(runs), int(total_steps), int(immediate),
                         int(nz[-1]) if nz.size else 0)


def simulate_max_run(K, n, trials, seed):
    """Longest run (including an unfinished last one) over ``trials`` walks of ``n`` steps."""
    K = _check_k(K)
    rng = make_rng(seed)
    out = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        coins = rng.integers(0, 2, int(n), dtype=np.int8)
        out[i] = _walk_max(K, coins)
    return out


@njit(cache=True)
def _walk_max(K, coins):
    x = 1
    length = 0
    barrier = -1
    best = 0
    for i in range(coins.shape[0]):
        up = coins[i] == 0
        if barrier < 0:
            x += 1 if up else -1
            length += 1
            if length > best:
                best = length
            if x == 0 or x == K:
                barrier = x
        elif (barrier == 0 and up) or (barrier == K and not up):
            x = 1 if barrier == 0 else K - 1
            length = 0
            barrier = -1
    return best
