"""Command-line interface: decode, stream, gen, bench, analyze.

Exit codes: 0 success, 2 usage or parse error, 3 input impossible under the model.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import CURVE_COLUMNS, REPORT_COLUMNS, BenchReport, decode_with, run_benchmark, to_csv
from .hmm import ImpossibleSequenceError, ModelError, load_model, symmetric_two_state
from .online import StreamDecoder
from .randwalk import (expected_max_memory, k_parameter, run_length_prob_bounds,
                       simulate_max_run, simulate_runs)
from .trellis import backptr_dtype
from .seqgen import (DEFAULT_DNA, RNG_ALGORITHM, GenSpec, format_sequence, gen_from_hmm,
                     gen_iid, read_sequence_text)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 2, 3


class UsageError(Exception):
    pass


# Output destinations are left out of echoed headers so reruns into
# different files stay byte-identical.
_NOT_CONFIG = ("func", "out", "path_out", "curve_out", "bounds_out", "metrics")


def _config_line(args, skip=_NOT_CONFIG):
    items = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return " ".join(f"{k}={v}" for k, v in items.items())


def _load(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise UsageError(f"cannot read model: {exc}") from None
    except ModelError as exc:
        raise UsageError(f"bad model file {path}: {exc}") from None


def _probs(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad probability list {text!r}") from None


def _number(text):
    v = float(text)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    return int(v)


def _open_out(path, stdout):
    return stdout if path in (None, "-") else open(path, "w")


def _format_states(states, labels):
    if labels is None:
        return "".join(f"{int(s)}\n" for s in states)
    return "".join(f"{labels[s]}\n" for s in states)


# -- decode -----------------------------------------------------------------------

def cmd_decode(args, stdin, stdout, stderr):
    hmm = _load(args.model)
    try:
        text = stdin.read() if args.sequence == "-" else Path(args.sequence).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read sequence: {exc}") from None
    try:
        seq = read_sequence_text(text, hmm.alphabet)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if seq.size == 0:
        raise UsageError("empty sequence")
    run = decode_with(args.algorithm, hmm, seq, block_len=args.block_len, stride=args.stride)
    labels = hmm.labels if args.labels else None
    out = _open_out(args.out, stdout)
    try:
        out.write(_format_states(run.path, labels))
    finally:
        if out is not stdout:
            out.close()
    metrics = args.metrics or (f"{args.out}.metrics.csv" if args.out not in (None, "-") else None)
    if metrics:
        ops = run.tree_ops or {}
        report = BenchReport(
            decoder=args.algorithm, model=str(args.model), n=int(seq.size), seed=-1,
            wall_time_s=0.0, forward_steps=run.forward_steps, peak_window=run.trace.peak,
            mean_window=run.trace.mean, peak_bytes=run.trace.peak * hmm.m * np.dtype(backptr_dtype(hmm.m)).itemsize,
            log_prob=run.log_prob, tree_created=ops.get("created"),
            tree_deleted=ops.get("deleted"), tree_relink_hops=ops.get("relink_hops"),
        )
        cols = [c for c in REPORT_COLUMNS if c not in ("seed", "wall_time_s", "rng")]
        Path(metrics).write_text(to_csv([report], cols, config={"command": "decode", "config": _config_line(args)}))
    return EXIT_OK


# -- stream -----------------------------------------------------------------------

def _chunks(stdin):
    raw = getattr(stdin, "buffer", None)
    if raw is not None and hasattr(raw, "read1"):
        for block in iter(lambda: raw.read1(65536), b""):
            yield block.decode("utf-8", errors="replace")
    else:
        yield from iter(lambda: stdin.read(65536), "")


def cmd_stream(args, stdin, stdout, stderr):
    hmm = _load(args.model)
    lookup = {c: i for i, c in enumerate(hmm.alphabet)}
    labels = hmm.labels if args.labels else None
    dec = None
    consumed = 0
    in_header = False
    at_line_start = True
    for chunk in _chunks(stdin):
        codes = []
        bad = None
        for ch in chunk:
            if in_header:
                if ch == "\n":
                    in_header, at_line_start = False, True
                continue
            if ch == ">" and at_line_start:
                in_header = True
                continue
            at_line_start = ch == "\n"
            if ch.isspace():
                continue
            code = lookup.get(ch)
            if code is None:
                bad = ch
                break
            codes.append(code)
        try:
            if codes:
                if dec is None:
                    dec = StreamDecoder(hmm, codes[0], trace_stride=None)
                    consumed = 1
                    codes = codes[1:]
                emitted = dec.feed_many(codes)
                consumed += len(codes)
                stdout.write(_format_states(emitted, labels))
                stdout.flush()
        except ImpossibleSequenceError as exc:
            stdout.write(_format_states(getattr(exc, "emitted", ()), labels))
            stdout.flush()
            stderr.write(f"error: sequence impossible under model at position {exc.position}\n")
            return EXIT_INFEASIBLE
        if bad is not None:
            stderr.write(f"error: symbol {bad!r} at position {consumed + 1} not in model alphabet\n")
            return EXIT_INFEASIBLE
    if dec is None:
        raise UsageError("empty input stream")
    stdout.write(_format_states(dec.finish(), labels))
    stdout.flush()
    if args.verbose:
        stderr.write(f"# positions={dec.position} peak_window={dec.trace.peak} "
                     f"mean_window={dec.trace.mean:.3f}\n")
    return EXIT_OK


# -- gen --------------------------------------------------------------------------

def cmd_gen(args, stdin, stdout, stderr):
    if args.seed is None:
        raise UsageError("--seed is required")
    if args.model:
        hmm = _load(args.model)
        symbols, path = gen_from_hmm(GenSpec("hmm", args.n, args.seed, hmm=hmm))
        alphabet = hmm.alphabet
    else:
        probs = _probs(args.iid) if args.iid else DEFAULT_DNA
        alphabet = args.alphabet or ("ACGT" if len(probs) == 4 else None)
        if alphabet is None or len(alphabet) != len(probs):
            raise UsageError("--alphabet must give one character per probability")
        try:
            symbols = gen_iid(GenSpec("iid", args.n, args.seed, distribution=probs))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        path = None
    header = f"gen {_config_line(args)} rng={RNG_ALGORITHM}"
    out = _open_out(args.out, stdout)
    try:
        out.write(format_sequence(symbols, alphabet, header=header))
    finally:
        if out is not stdout:
            out.close()
    if args.path_out:
        if path is None:
            raise UsageError("--path-out needs --model")
        Path(args.path_out).write_text(f"# {header}\n" + _format_states(path, None))
    return EXIT_OK


# -- bench ------------------------------------------------------------------------

def _bench_model(args):
    if args.model and args.symmetric:
        raise UsageError("give either --model or --symmetric")
    if args.symmetric:
        t, e = _probs(args.symmetric)
        try:
            return symmetric_two_state(t, e), f"symmetric(t={t},e={e})"
        except ModelError as exc:
            raise UsageError(str(exc)) from None
    if args.model:
        return _load(args.model), str(args.model)
    raise UsageError("need --model or --symmetric")


def cmd_bench(args, stdin, stdout, stderr):
    if args.seed is None:
        raise UsageError("--seed is required")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    hmm, model_id = _bench_model(args)
    if args.input == "hmm":
        spec = GenSpec("hmm", args.n, args.seed, hmm=hmm)
    else:
        probs = _probs(args.iid) if args.iid else tuple([1.0 / hmm.alphabet_size] * hmm.alphabet_size)
        try:
            spec = GenSpec("iid", args.n, args.seed, distribution=probs)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    decoders = tuple(args.algorithm.split(","))
    try:
        result = run_benchmark(hmm, spec, decoders=decoders, trials=args.trials,
                               model_id=model_id, block_len=args.block_len, stride=args.stride)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = {"command": "bench", "config": _config_line(args), "rng": RNG_ALGORITHM}
    cols = [c for c in REPORT_COLUMNS if args.timing or c != "wall_time_s"]
    out = _open_out(args.out, stdout)
    try:
        out.write(to_csv(result.reports, cols, config=config))
    finally:
        if out is not stdout:
            out.close()
    if args.curve_out:
        Path(args.curve_out).write_text(to_csv(result.curve, CURVE_COLUMNS, config=config))
    return EXIT_OK


# -- analyze ----------------------------------------------------------------------

def cmd_analyze(args, stdin, stdout, stderr):
    if args.K is None:
        if args.t is None or args.e is None:
            raise UsageError("need --K or both --t and --e")
        try:
            K = k_parameter(args.t, args.e)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        K = args.K
    if K < 2 or args.n < 2:
        raise UsageError("need K >= 2 and n >= 2")
    pred = expected_max_memory(K, args.n)
    maxima = simulate_max_run(K, args.n, args.trials, args.seed)
    mem_row = {
        "K": K, "n": args.n, "empirical_expected_max": float(maxima.mean()),
        "predicted": pred.predicted_expected_max, "exact_constant": pred.exact_constant,
        "approx_constant": pred.approx_constant,
    }
    dist = simulate_runs(K, args.steps, args.seed)
    bound_rows = []
    ell = 0
    while dist.bucket_count(ell) > 0:
        lo, hi = run_length_prob_bounds(K, ell)
        bound_rows.append({"K": K, "ell": ell, "empirical_prob": dist.empirical_prob(ell),
                           "lower_bound": lo, "upper_bound": hi, "count": dist.bucket_count(ell)})
        ell += 1
    config = {"command": "analyze", "config": _config_line(args), "rng": RNG_ALGORITHM,
              "mean_run_length": dist.mean, "total_runs": dist.total_runs}
    mem_csv = to_csv([mem_row], tuple(mem_row), config=config)
    bounds_csv = to_csv(bound_rows, ("K", "ell", "empirical_prob", "lower_bound", "upper_bound", "count"),
                        config=config)
    if args.out:
        Path(args.out).write_text(mem_csv)
    if args.bounds_out:
        Path(args.bounds_out).write_text(bounds_csv)
    if not args.out:
        stdout.write(mem_csv)
    if not args.bounds_out:
        if not args.out:
            stdout.write("\n")
        stdout.write(bounds_csv)
    return EXIT_OK


# -- entry point ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="online-viterbi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="decode a sequence file")
    d.add_argument("sequence", help="sequence file, or - for stdin")
    d.add_argument("--model", required=True)
    d.add_argument("--algorithm", choices=("full", "checkpoint", "online"), default="online")
    d.add_argument("--block-len", type=int, default=None)
    d.add_argument("--out", default=None, help="path file (default stdout)")
    d.add_argument("--metrics", default=None, help="metrics CSV (default <out>.metrics.csv)")
    d.add_argument("--stride", type=int, default=None)
    d.add_argument("--labels", action="store_true", help="print state labels instead of indices")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("stream", help="decode standard input incrementally")
    s.add_argument("--model", required=True)
    s.add_argument("--labels", action="store_true")
    s.add_argument("-v", "--verbose", action="store_true", help="report window statistics on stderr")
    s.set_defaults(func=cmd_stream)

    g = sub.add_parser("gen", help="generate a sequence file")
    g.add_argument("--n", type=_number, required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--model", default=None, help="sample from this model")
    g.add_argument("--iid", default=None, help="comma-separated symbol probabilities")
    g.add_argument("--alphabet", default=None)
    g.add_argument("--out", default=None)
    g.add_argument("--path-out", default=None, help="true state path sidecar (with --model)")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="memory/time benchmark")
    b.add_argument("--model", default=None)
    b.add_argument("--symmetric", default=None, metavar="T,E")
    b.add_argument("--n", type=_number, required=True)
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--algorithm", default="full,checkpoint,online")
    b.add_argument("--input", choices=("iid", "hmm"), default="iid")
    b.add_argument("--iid", default=None)
    b.add_argument("--block-len", type=int, default=None)
    b.add_argument("--stride", type=int, default=None)
    b.add_argument("--timing", action="store_true", help="include wall time (not reproducible)")
    b.add_argument("--out", default=None)
    b.add_argument("--curve-out", default=None)
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("analyze", help="random-walk predictions vs simulation")
    a.add_argument("--K", type=int, default=None)
    a.add_argument("--t", type=float, default=None)
    a.add_argument("--e", type=float, default=None)
    a.add_argument("--n", type=_number, default=10**6)
    a.add_argument("--steps", type=_number, default=10**6)
    a.add_argument("--trials", type=int, default=20)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", default=None)
    a.add_argument("--bounds-out", default=None)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None, stdin=None, stdout=None, stderr=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args, stdin, stdout, stderr)
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ImpossibleSequenceError as exc:
        stderr.write(f"error: sequence impossible under model at position {exc.position}\n")
        return EXIT_INFEASIBLE


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
