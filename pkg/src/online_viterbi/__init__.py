"""Viterbi decoding in bounded memory: full, checkpointed and on-line decoders."""

__version__ = "0.1.0"

from .checkpoint import CheckpointPlan, forward_step_count, viterbi_checkpoint
from .hmm import (Hmm, ImpossibleSequenceError, ModelError, brute_force_decode, build_hmm,
                  joint_log_prob, load_model, parse_model, save_model, symmetric_two_state)
from .online import StreamDecoder, stream_start, viterbi_online
from .trace import MemoryTrace
from .trellis import Decoding, viterbi_full

__all__ = [
    "CheckpointPlan", "Decoding", "Hmm", "ImpossibleSequenceError", "MemoryTrace",
    "ModelError", "StreamDecoder", "brute_force_decode", "build_hmm", "forward_step_count",
    "joint_log_prob", "load_model", "parse_model", "save_model", "stream_start",
    "symmetric_two_state", "viterbi_checkpoint", "viterbi_full", "viterbi_online",
]
