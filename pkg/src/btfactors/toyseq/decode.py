"""Decoding for channel models: beam search, ancestral sampling, and
annotated candidate-set generation.

The batch helpers keep candidate generation fast enough for N-per-sentence
sampling over whole corpora: one vectorized draw per position instead of
one per token.  All sampling inverts the cumulative row with
``side="right"`` semantics so scalar and batched paths share one
convention.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..scoring import Candidate, CandidateSet
from .models import BOS, ChannelModel, EOS, NGramLM


def beam_decode(model: ChannelModel, input_seq, beam_size: int = 5) -> tuple:
    """Highest-scoring hypothesis among those explored at width ``beam_size``.

    Deterministic: score ties break lexicographically by token sequence.
    An exhaustive width (|V| ** len) reduces to brute-force argmax.
    """
    if beam_size < 1:
        raise InvalidInputError("beam_size must be >= 1")
    input_seq = tuple(input_seq)
    beams: list[tuple[tuple, float]] = [((), 0.0)]
    for cond in input_seq:
        expansions = []
        for tokens, score in beams:
            prev = tokens[-1] if tokens else BOS
            row = model.log_row(prev, cond)
            for tok, tok_lp in zip(model.out_vocab, row):
                expansions.append((tokens + (tok,), score + float(tok_lp)))
        expansions.sort(key=lambda e: (-e[1], e[0]))
        beams = expansions[:beam_size]
    return beams[0][0]


def sample_decode(model: ChannelModel, input_seq, rng: np.random.Generator) -> tuple:
    """Ancestral sample: one token per position from the conditional."""
    out: list = []
    prev = BOS
    last = len(model.out_vocab) - 1
    for cond in input_seq:
        cumulative = np.cumsum(model.prob_row(prev, cond))
        idx = min(int(np.searchsorted(cumulative, float(rng.random()), side="right")), last)
        prev = model.out_vocab[idx]
        out.append(prev)
    return tuple(out)


def batch_sample(model: ChannelModel, cond_seq, n: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """n ancestral samples as an (n, len) index matrix plus log-probs."""
    cond_seq = tuple(cond_seq)
    size = len(model.out_vocab)
    prev_idx = np.zeros(n, dtype=np.intp)  # row 0 of the cond matrices is BOS
    token_idx = np.empty((n, len(cond_seq)), dtype=np.intp)
    log_probs = np.zeros(n)
    for t, cond in enumerate(cond_seq):
        probs, logs = model.matrices_for_cond(cond)
        rows = probs[prev_idx]
        draws = rng.random(n)
        idx = np.minimum((np.cumsum(rows, axis=1) <= draws[:, None]).sum(axis=1), size - 1)
        log_probs += logs[prev_idx, idx]
        token_idx[:, t] = idx
        prev_idx = idx + 1
    return token_idx, log_probs


def batch_channel_scores(model: ChannelModel, token_idx: np.ndarray, cond_seq) -> np.ndarray:
    """Log-probs of index-encoded outputs under the channel, vectorized."""
    n, length = token_idx.shape
    scores = np.zeros(n)
    prev_idx = np.zeros(n, dtype=np.intp)
    for t, cond in enumerate(cond_seq):
        _, logs = model.matrices_for_cond(cond)
        idx = token_idx[:, t]
        scores += logs[prev_idx, idx]
        prev_idx = idx + 1
    return scores


def batch_lm_scores(lm: NGramLM, token_idx: np.ndarray, out_vocab) -> np.ndarray:
    """LM log-probs of index-encoded sequences (vectorized for order 2)."""
    columns = [lm.event_index(tok) for tok in out_vocab]
    if lm.order != 2 or any(c is None for c in columns):
        sequences = (tuple(out_vocab[j] for j in row) for row in token_idx)
        return np.array([lm.score(seq) for seq in sequences])
    mat = lm.bigram_log_matrix()
    cols = np.asarray(columns, dtype=np.intp)
    event_idx = cols[token_idx]            # (n, L) indices into the event space
    ctx_idx = np.empty_like(event_idx)
    ctx_idx[:, 0] = 0                      # BOS context row
    ctx_idx[:, 1:] = event_idx[:, :-1] + 1
    scores = mat[ctx_idx, event_idx].sum(axis=1)
    if lm.use_eos:
        eos_col = lm.event_index(EOS)
        scores = scores + mat[event_idx[:, -1] + 1, eos_col]
    return scores


def sample_candidate_set(backward: ChannelModel, lm: NGramLM, target, n: int = 50,
                         rng: np.random.Generator = None, target_id: int = 0) -> CandidateSet:
    """n independent ancestral samples from the backward channel given
    ``target``, each annotated with its backward log-prob (quality) and
    source-LM log-prob, in generation order.  Duplicates are kept."""
    if n < 2:
        raise InvalidInputError("candidate sets need n >= 2")
    if rng is None:
        raise InvalidInputError("sample_candidate_set requires a seeded generator")
    target = tuple(target)
    token_idx, log_q = batch_sample(backward, target, n, rng)
    log_lm = batch_lm_scores(lm, token_idx, backward.out_vocab)
    vocab = backward.out_vocab
    candidates = tuple(
        Candidate(
            tokens=tuple(vocab[j] for j in token_idx[i]),
            length=len(target),
            log_q=float(log_q[i]),
            log_lm=float(log_lm[i]),
        )
        for i in range(n)
    )
    return CandidateSet(target_id=target_id, target_tokens=target, candidates=candidates)
