"""On-line Viterbi decoding with a compressed back-pointer tree.

The decoder keeps back-pointer columns only back to the last coalescence
point. A compressed survivor tree (at most ``m`` leaves and ``m - 1``
branching nodes) is updated after every column; whenever all surviving
paths meet in a single node, the path up to that node is final and is
emitted, and its columns are released.

Tree nodes live in a fixed pool of ``3m + 2`` slots, recycled through a
free stack, so steady-state decoding does not allocate. Back-pointer
columns are kept in a ring buffer that doubles when full.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .hmm import Hmm, ImpossibleSequenceError, check_symbols
from .trace import MemoryTrace, default_stride
from .trellis import Decoding, Kernel, _argmax, _step, initial_column, prepare

NIL = -1

# node record fields
POS, STATE, PARENT, NCHILD, PREV, NEXT = range(6)

# decoder scalar state
(M_POS, M_EMITTED, M_ROOT, M_HEAD, M_TAIL, M_NFREE, M_WSTART,
 M_CREATED, M_DELETED, M_HOPS) = range(10)


@njit(cache=True)
def _push_back(nodes, meta, x):
    tail = meta[M_TAIL]
    nodes[x, PREV] = tail
    nodes[x, NEXT] = NIL
    if tail != NIL:
        nodes[tail, NEXT] = x
    else:
        meta[M_HEAD] = x
    meta[M_TAIL] = x


@njit(cache=True)
def _new_node(nodes, free, meta, pos, state, parent):
    meta[M_NFREE] -= 1
    x = free[meta[M_NFREE]]
    nodes[x, POS] = pos
    nodes[x, STATE] = state
    nodes[x, PARENT] = parent
    nodes[x, NCHILD] = 0
    _push_back(nodes, meta, x)
    meta[M_CREATED] += 1
    return x


@njit(cache=True)
def _drop(nodes, free, meta, x):
    p = nodes[x, PREV]
    q = nodes[x, NEXT]
    if p != NIL:
        nodes[p, NEXT] = q
    else:
        meta[M_HEAD] = q
    if q != NIL:
        nodes[q, PREV] = p
    else:
        meta[M_TAIL] = p
    free[meta[M_NFREE]] = x
    meta[M_NFREE] += 1
    # the virtual root (state -1) is bookkeeping, not a tree node
    if nodes[x, STATE] >= 0:
        meta[M_DELETED] += 1


@njit(cache=True)
def _update_tree(pos, scores, bp, nodes, free, meta, leaves, new_leaves):
    m = leaves.shape[0]
    # new leaves hang off the former leaf their back pointer names
    for j in range(m):
        if scores[j] > -np.inf:
            par = leaves[bp[j]]
            new_leaves[j] = _new_node(nodes, free, meta, pos, j, par)
            nodes[par, NCHILD] += 1
        else:
            new_leaves[j] = NIL
    # prune dead former leaves and any ancestors left childless
    for j in range(m):
        x = leaves[j]
        while x != NIL and nodes[x, NCHILD] == 0:
            par = nodes[x, PARENT]
            _drop(nodes, free, meta, x)
            if par != NIL:
                nodes[par, NCHILD] -= 1
            x = par
        leaves[j] = new_leaves[j]
    # compress, scanning by decreasing position
    root = NIL
    x = meta[M_TAIL]
    while x != NIL:
        prv = nodes[x, PREV]
        if nodes[x, POS] != pos and nodes[x, NCHILD] < 2:
            _drop(nodes, free, meta, x)
        else:
            a = nodes[x, PARENT]
            while a != NIL and nodes[a, NCHILD] < 2:
                a = nodes[a, PARENT]
                meta[M_HOPS] += 1
            nodes[x, PARENT] = a
            if a == NIL:
                root = x
        x = prv
    meta[M_ROOT] = root


@njit(cache=True)
def _trace_back(window, wstart, emitted, pos, state, upto, out, off):
    # states for positions emitted+1..upto, walking back from (pos, state)
    cap = window.shape[0]
    s = state
    p = pos
    while p > emitted:
        if p <= upto:
            out[off + p - emitted - 1] = s
        if p > emitted + 1:
            s = window[(wstart + p - emitted - 1) % cap, s]
        p -= 1


@njit(cache=True)
def _consume(symbols, trans_t, emit_t, scores, tmp, bp, window, meta,
             nodes, free, leaves, new_leaves, out, off, wtrace):
    """Feed ``symbols``; emitted states are written to ``out[off:]``.

    Returns ``(window, new_off, bad)`` where ``window`` may have been
    reallocated and ``bad`` is the index of an impossible symbol or -1.
    """
    for t in range(symbols.shape[0]):
        if not _step(scores, trans_t, emit_t[symbols[t]], tmp, bp):
            return window, off, t
        scores[:] = tmp
        cap = window.shape[0]
        emitted = meta[M_EMITTED]
        wlen = meta[M_POS] - emitted
        if wlen == cap:
            grown = np.empty((2 * cap, window.shape[1]), dtype=window.dtype)
            for r in range(wlen):
                grown[r] = window[(meta[M_WSTART] + r) % cap]
            window = grown
            meta[M_WSTART] = 0
            cap = 2 * cap
        window[(meta[M_WSTART] + wlen) % cap] = bp
        meta[M_POS] += 1
        pos = meta[M_POS]

        _update_tree(pos, scores, bp, nodes, free, meta, leaves, new_leaves)

        root = meta[M_ROOT]
        rpos = nodes[root, POS]
        # a lone current leaf is final too, but its column stays until the next step
        upto = rpos if rpos < pos else pos - 1
        if upto > emitted:
            _trace_back(window, meta[M_WSTART], emitted, rpos, nodes[root, STATE],
                        upto, out, off)
            k = upto - emitted
            off += k
            meta[M_WSTART] = (meta[M_WSTART] + k) % cap
            meta[M_EMITTED] = upto
        wtrace[t] = pos - meta[M_EMITTED]
    return window, off, -1


class StreamDecoder:
    """Incremental Viterbi decoder for one symbol stream.

    Create it with the first symbol, call :meth:`feed` for every further
    symbol and :meth:`finish` at end of input. The concatenation of all
    returned segments equals the full Viterbi path.

    Parameters
    ----------
    hmm : Hmm
    first_symbol : int
    trace_stride : int or None
        Sampling stride for :attr:`trace`; ``None`` keeps only peak/mean,
        which keeps memory independent of the stream length.
    """

    def __init__(self, hmm: Hmm, first_symbol, trace_stride=1, trace_marks=()):
        self.hmm = hmm
        self._k = Kernel(hmm)
        m = hmm.m
        col = initial_column(hmm, first_symbol)
        self.scores = col.scores.copy()
        self._tmp = np.empty(m)
        self._bp = np.zeros(m, dtype=self._k.bp_dtype)
        self._window = np.zeros((16, m), dtype=self._k.bp_dtype)
        self._meta = np.zeros(10, dtype=np.int64)
        pool = 3 * m + 2
        self._nodes = np.full((pool, 6), NIL, dtype=np.int64)
        self._free = np.arange(pool - 1, -1, -1, dtype=np.int64)
        self._leaves = np.full(m, NIL, dtype=np.int64)
        self._new_leaves = np.empty(m, dtype=np.int64)
        meta = self._meta
        meta[M_POS] = 1
        meta[M_HEAD] = meta[M_TAIL] = NIL
        meta[M_NFREE] = pool
        root = _new_node(self._nodes, self._free, meta, 0, -1, NIL)
        meta[M_CREATED] = 0
        for j in np.flatnonzero(self.scores > -np.inf):
            self._leaves[j] = _new_node(self._nodes, self._free, meta, 1, j, root)
            self._nodes[root, NCHILD] += 1
        meta[M_ROOT] = root
        self._out = np.empty(self._window.shape[0] + 1, dtype=np.int64)
        self._one = np.empty(1, dtype=np.int64)
        self._wone = np.empty(1, dtype=np.int64)
        self.trace = MemoryTrace(stride=trace_stride, marks=trace_marks)
        self.trace.record(1)
        self.finished = False
        self.failed = False
        self.log_prob = None

    # -- stream API ---------------------------------------------------------

    def _check_live(self):
        if self.failed:
            raise RuntimeError("stream aborted after an impossible symbol")
        if self.finished:
            raise RuntimeError("stream already finished")

    def feed(self, symbol):
        """Process one symbol; return the newly final path states (maybe empty)."""
        self._check_live()
        symbol = int(symbol)
        if not 0 <= symbol < self.hmm.alphabet_size:
            raise ValueError(f"symbol {symbol} outside [0, {self.hmm.alphabet_size})")
        self._one[0] = symbol
        n_out = self._run(self._one, self._out, 0, self._wone)
        self.trace.record(int(self._wone[0]))
        out = self._out[:n_out].copy()
        if self._out.shape[0] <= self._window.shape[0]:
            self._out = np.empty(self._window.shape[0] + 1, dtype=np.int64)
        return out

    def feed_many(self, symbols, out=None, offset=0):
        """Feed a block of symbols through the same kernel as :meth:`feed`.

        Returns the emitted states. With ``out`` given they are written to
        ``out[offset:]`` and the new offset is returned instead.
        """
        self._check_live()
        symbols = check_symbols(self.hmm, symbols)
        wtrace = np.empty(symbols.size, dtype=np.int64)
        if out is None:
            buf = np.empty(self.window_len + symbols.size, dtype=np.int64)
            n_out = self._run(symbols, buf, 0, wtrace)
            self.trace.extend(wtrace)
            return buf[:n_out]
        end = self._run(symbols, out, offset, wtrace)
        self.trace.extend(wtrace)
        return end

    def _run(self, symbols, out, off, wtrace):
        window, end, bad = _consume(
            symbols, self._k.trans_t, self._k.emit_t, self.scores, self._tmp, self._bp,
            self._window, self._meta, self._nodes, self._free, self._leaves,
            self._new_leaves, out, off, wtrace,
        )
        self._window = window
        if bad >= 0:
            self.failed = True
            self.trace.extend(wtrace[:bad])
            err = ImpossibleSequenceError(self.position + 1)
            # states that became final before the failing symbol
            err.emitted = out[off:end].copy()
            raise err
        return end

    def finish(self):
        """Backtrack from the best final state and return the remaining suffix."""
        self._check_live()
        s = int(_argmax(self.scores))
        out = np.empty(self.window_len, dtype=np.int64)
        _trace_back(self._window, self._meta[M_WSTART], self.emitted, self.position, s,
                    self.position, out, 0)
        self.finished = True
        self.log_prob = float(self.scores[s])
        return out

    # -- introspection --------------------------------------------------------

    @property
    def position(self) -> int:
        return int(self._meta[M_POS])

    @property
    def emitted(self) -> int:
        return int(self._meta[M_EMITTED])

    @property
    def window_len(self) -> int:
        return self.position - self.emitted

    def tree_op_count(self):
        return {
            "created": int(self._meta[M_CREATED]),
            "deleted": int(self._meta[M_DELETED]),
            "relink_hops": int(self._meta[M_HOPS]),
        }

    def tree_nodes(self):
        """Live nodes as ``(position, state, parent_index, n_children, index)``, in list order."""
        rows = []
        x = self._meta[M_HEAD]
        while x != NIL:
            r = self._nodes[x]
            rows.append((int(r[POS]), int(r[STATE]), int(r[PARENT]), int(r[NCHILD]), int(x)))
            x = r[NEXT]
        return rows

    def check_invariants(self):
        """Assert the compressed-tree shape; intended for tests and debugging."""
        m, pos = self.hmm.m, self.position
        rows = self.tree_nodes()
        by_idx = {r[4]: r for r in rows}
        positions = [r[0] for r in rows]
        assert positions == sorted(positions), "node list out of position order"
        leaves = [r for r in rows if r[0] == pos]
        internal = [r for r in rows if r[0] != pos]
        if pos > 1:
            assert len(leaves) <= m and len(internal) <= m - 1, (len(leaves), len(internal))
        live_leaves = sorted(int(x) for x in self._leaves if x != NIL)
        assert live_leaves == sorted(r[4] for r in leaves)
        roots = [r for r in rows if r[2] == NIL]
        assert len(roots) == 1 and roots[0][4] == self._meta[M_ROOT]
        counts = {r[4]: 0 for r in rows}
        for r in rows:
            if r[2] != NIL:
                assert r[2] in by_idx, "parent not in tree"
                assert by_idx[r[2]][0] < r[0], "parent not left of child"
                counts[r[2]] += 1
        for r in rows:
            assert counts[r[4]] == r[3], "stale child count"
            if r[0] != pos and pos > 1:
                assert r[3] >= 2, "unbranched internal node survived compression"
        assert self.window_len == pos - self.emitted >= 1
        root = by_idx[int(self._meta[M_ROOT])]
        assert root[0] <= self.emitted or (root[0] == pos and self.emitted == pos - 1)


def stream_start(hmm: Hmm, first_symbol, **kwargs) -> StreamDecoder:
    return StreamDecoder(hmm, first_symbol, **kwargs)


def feed(decoder: StreamDecoder, symbol):
    return decoder.feed(symbol)


def finish(decoder: StreamDecoder):
    return decoder.finish()


def window_len(decoder: StreamDecoder) -> int:
    return decoder.window_len


def tree_op_count(decoder: StreamDecoder):
    return decoder.tree_op_count()


def viterbi_online(hmm: Hmm, seq, stride=None, marks=()) -> Decoding:
    """Decode a whole sequence with :class:`StreamDecoder` in one kernel call."""
    seq, _ = prepare(hmm, seq)
    n = seq.size
    dec = StreamDecoder(hmm, seq[0], trace_stride=default_stride(n) if stride is None else stride,
                        trace_marks=marks)
    path = np.empty(n, dtype=np.int64)
    off = dec.feed_many(seq[1:], out=path, offset=0) if n > 1 else 0
    tail = dec.finish()
    path[off:] = tail
    return Decoding(path, dec.log_prob, dec.trace, n, dec.tree_op_count())
