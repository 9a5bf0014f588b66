"""Count-based sequence models.

Two families share the add-alpha machinery:

* ``NGramLM``       p(x) = prod_t p(x_t | previous order-1 tokens), with an
                    optional end-of-sequence transition.
* ``ChannelModel``  p(out | in) = prod_t p(out_t | out_{t-1}, in_t); output
                    length equals input length, Markov in its own output.

Conventions shared by both:

* The event space is the configured output vocabulary (plus the end marker
  for an LM with ``use_eos``).  BOS only ever appears in contexts.
* p(v | context) = (count + alpha) / (total + alpha * |V|).  Unseen contexts
  therefore score uniformly; with alpha == 0 an unseen context falls back to
  uniform as well so conditionals always sum to 1.
* An out-of-vocabulary token at score time is treated like the reserved UNK
  event: a never-seen symbol scored at the alpha floor against the same
  denominator.  It never joins the event space, so in-vocabulary
  probabilities stay an exact distribution.
* Counts may be fractional: the toy task's ground-truth models are stored
  as probability rows with alpha == 0.

Models are immutable after construction and serialize to a versioned,
sorted-key text format, so training is diffable and bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, ParseError
from ..tokenio import (
    BOS,
    EOS,
    UNK,
    sequence_from_str,
    sequence_to_str,
    token_from_str,
    token_sort_key,
    token_to_str,
)

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "ChannelModel",
    "NGramLM",
    "ParallelCorpus",
    "channel_score",
    "lm_score",
    "train_channel",
    "train_ngram_lm",
]


@dataclass(frozen=True)
class ParallelCorpus:
    """Aligned (source, target) pairs; every pair is equal-length."""

    pairs: tuple[tuple[tuple, tuple], ...]

    def __post_init__(self):
        if not self.pairs:
            raise InvalidInputError("parallel corpus must be non-empty")
        for i, (src, tgt) in enumerate(self.pairs):
            if not src or not tgt:
                raise InvalidInputError(f"pair {i}: sequences must be non-empty")
            if len(src) != len(tgt):
                raise InvalidInputError(
                    f"pair {i}: source length {len(src)} != target length {len(tgt)}"
                )

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_pairs(cls, pairs) -> "ParallelCorpus":
        return cls(pairs=tuple((tuple(s), tuple(t)) for s, t in pairs))

    def sources(self) -> list[tuple]:
        return [src for src, _ in self.pairs]

    def targets(self) -> list[tuple]:
        return [tgt for _, tgt in self.pairs]


def _num_to_str(value) -> str:
    return repr(value) if isinstance(value, float) else str(int(value))


def _num_from_str(text: str):
    return int(text) if text.lstrip("-").isdigit() else float(text)


class NGramLM:
    """Add-alpha smoothed n-gram language model over hashable tokens."""

    def __init__(self, order: int, alpha: float, vocab, counts=None, use_eos: bool = True):
        if order < 1:
            raise InvalidInputError("order must be >= 1")
        if alpha < 0:
            raise InvalidInputError("alpha must be non-negative")
        content = tuple(sorted(set(vocab), key=token_sort_key))
        if not content:
            raise InvalidInputError("vocabulary must be non-empty")
        if any(t in (BOS, EOS, UNK) for t in content):
            raise InvalidInputError("reserved markers cannot be content tokens")
        self.order = int(order)
        self.alpha = alpha
        self.use_eos = bool(use_eos)
        self.content_vocab = content
        self.event_vocab = content + ((EOS,) if use_eos else ())
        self._index = {tok: i for i, tok in enumerate(self.event_vocab)}
        self.counts: dict[tuple, dict] = {}
        for ctx, row in (counts or {}).items():
            ctx = tuple(ctx)
            if len(ctx) != order - 1:
                raise InvalidInputError(f"context {ctx!r} does not match order {order}")
            for tok in row:
                if tok not in self._index:
                    raise InvalidInputError(f"count row token {tok!r} is outside the event space")
            self.counts[ctx] = dict(row)
        self._row_cache: dict[tuple, np.ndarray] = {}
        self._log_cache: dict[tuple, np.ndarray] = {}
        self._bigram_matrices: np.ndarray | None = None

    # -- vocabulary -----------------------------------------------------
    @property
    def vocab(self) -> set:
        full = set(self.event_vocab)
        if self.order > 1:
            full.add(BOS)
        return full

    def event_index(self, token) -> int | None:
        return self._index.get(token)

    # -- probabilities ---------------------------------------------------
    def context_of(self, prefix) -> tuple:
        """Last order-1 tokens of ``prefix``, BOS-padded on the left."""
        need = self.order - 1
        prefix = tuple(prefix)
        if len(prefix) >= need:
            return prefix[len(prefix) - need :]
        return (BOS,) * (need - len(prefix)) + prefix

    def prob_row(self, context) -> np.ndarray:
        """p(. | context) over the event vocabulary; always sums to 1."""
        context = tuple(context)
        cached = self._row_cache.get(context)
        if cached is not None:
            return cached
        size = len(self.event_vocab)
        counts = np.zeros(size)
        row = self.counts.get(context)
        if row:
            for tok, cnt in row.items():
                counts[self._index[tok]] = cnt
        denom = counts.sum() + self.alpha * size
        if denom <= 0.0:
            probs = np.full(size, 1.0 / size)
        else:
            probs = (counts + self.alpha) / denom
        probs.setflags(write=False)
        self._row_cache[context] = probs
        return probs

    def log_row(self, context) -> np.ndarray:
        context = tuple(context)
        cached = self._log_cache.get(context)
        if cached is not None:
            return cached
        with np.errstate(divide="ignore"):
            logs = np.log(self.prob_row(context))
        logs.setflags(write=False)
        self._log_cache[context] = logs
        return logs

    def prob(self, token, context) -> float:
        idx = self._index.get(token)
        if idx is not None:
            return float(self.prob_row(context)[idx])
        # out-of-vocabulary: alpha-floor mass of a never-seen event
        row = self.counts.get(tuple(context))
        total = sum(row.values()) if row else 0.0
        denom = total + self.alpha * len(self.event_vocab)
        return self.alpha / denom if denom > 0.0 else 0.0

    def log_prob(self, token, context) -> float:
        p = self.prob(token, context)
        return math.log(p) if p > 0.0 else -math.inf

    def score(self, sequence) -> float:
        """Natural-log probability of ``sequence``, including the
        end-of-sequence transition when the model has one."""
        total = 0.0
        prefix: tuple = ()
        for tok in sequence:
            total += self.log_prob(tok, self.context_of(prefix))
            prefix = prefix + (tok,)
        if self.use_eos:
            total += self.log_prob(EOS, self.context_of(prefix))
        return total

    def bigram_log_matrix(self) -> np.ndarray:
        """(contexts x events) log matrix for order-2 models.

        Row 0 is the BOS context, row 1 + i the context (event_vocab[i],).
        Backs the vectorized scorer in ``decode``; only defined for order 2.
        """
        if self.order != 2:
            raise InvalidInputError("bigram matrix is only defined for order-2 models")
        if self._bigram_matrices is None:
            size = len(self.event_vocab)
            mat = np.empty((size + 1, size))
            mat[0] = self.log_row((BOS,))
            for i, tok in enumerate(self.event_vocab):
                mat[1 + i] = self.log_row((tok,))
            mat.setflags(write=False)
            self._bigram_matrices = mat
        return self._bigram_matrices

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        lines = [
            "btfactors-ngramlm v1",
            f"order {self.order}",
            f"alpha {_num_to_str(self.alpha)}",
            f"eos {1 if self.use_eos else 0}",
            "vocab " + " ".join(token_to_str(t) for t in self.content_vocab),
        ]
        for ctx in sorted(self.counts, key=lambda c: tuple(token_sort_key(t) for t in c)):
            row = self.counts[ctx]
            entries = " ".join(
                f"{token_to_str(t)} {_num_to_str(row[t])}"
                for t in sorted(row, key=token_sort_key)
            )
            pieces = ["context", *(token_to_str(t) for t in ctx), "|", entries]
            lines.append(" ".join(pieces))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NGramLM":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "btfactors-ngramlm v1":
            raise ParseError("expected header 'btfactors-ngramlm v1'", 1)
        fields = {}
        counts: dict[tuple, dict] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            key, _, rest = line.partition(" ")
            try:
                if key in ("order", "alpha", "eos"):
                    fields[key] = rest.strip()
                elif key == "vocab":
                    fields["vocab"] = sequence_from_str(rest)
                elif key == "context":
                    ctx_text, _, entries = rest.partition("|")
                    ctx = sequence_from_str(ctx_text)
                    parts = entries.split()
                    if len(parts) % 2 != 0:
                        raise ValueError("odd entry list")
                    row = {
                        token_from_str(parts[i]): _num_from_str(parts[i + 1])
                        for i in range(0, len(parts), 2)
                    }
                    counts[ctx] = row
                else:
                    raise ValueError(f"unknown key {key!r}")
            except (ValueError, InvalidInputError) as exc:
                raise ParseError(str(exc), lineno) from exc
        for required in ("order", "alpha", "eos", "vocab"):
            if required not in fields:
                raise ParseError(f"missing field {required!r}")
        return cls(
            order=int(fields["order"]),
            alpha=_num_from_str(fields["alpha"]),
            vocab=fields["vocab"],
            counts=counts,
            use_eos=fields["eos"] == "1",
        )


class ChannelModel:
    """Equal-length conditional model, Markov in its own output."""

    DIRECTIONS = ("source_to_target", "target_to_source")

    def __init__(self, direction: str, alpha: float, out_vocab, counts=None):
        if direction not in self.DIRECTIONS:
            raise InvalidInputError(f"direction must be one of {self.DIRECTIONS}")
        if alpha < 0:
            raise InvalidInputError("alpha must be non-negative")
        vocab = tuple(sorted(set(out_vocab), key=token_sort_key))
        if not vocab:
            raise InvalidInputError("output vocabulary must be non-empty")
        if any(t in (BOS, EOS, UNK) for t in vocab):
            raise InvalidInputError("reserved markers cannot be output tokens")
        self.direction = direction
        self.alpha = alpha
        self.out_vocab = vocab
        self._index = {tok: i for i, tok in enumerate(vocab)}
        self.counts: dict[tuple, dict] = {}
        for state, row in (counts or {}).items():
            if len(state) != 2:
                raise InvalidInputError(f"state {state!r} must be (prev_output, conditioning)")
            for tok in row:
                if tok not in self._index:
                    raise InvalidInputError(f"count row token {tok!r} is outside the event space")
            self.counts[tuple(state)] = dict(row)
        self._row_cache: dict[tuple, np.ndarray] = {}
        self._log_cache: dict[tuple, np.ndarray] = {}
        self._cond_matrices: dict = {}

    def out_index(self, token) -> int | None:
        return self._index.get(token)

    def prob_row(self, prev, cond) -> np.ndarray:
        """p(. | prev output, conditioning token) over the output vocabulary."""
        state = (prev, cond)
        cached = self._row_cache.get(state)
        if cached is not None:
            return cached
        size = len(self.out_vocab)
        counts = np.zeros(size)
        row = self.counts.get(state)
        if row:
            for tok, cnt in row.items():
                counts[self._index[tok]] = cnt
        denom = counts.sum() + self.alpha * size
        if denom <= 0.0:
            probs = np.full(size, 1.0 / size)
        else:
            probs = (counts + self.alpha) / denom
        probs.setflags(write=False)
        self._row_cache[state] = probs
        return probs

    def log_row(self, prev, cond) -> np.ndarray:
        state = (prev, cond)
        cached = self._log_cache.get(state)
        if cached is not None:
            return cached
        with np.errstate(divide="ignore"):
            logs = np.log(self.prob_row(prev, cond))
        logs.setflags(write=False)
        self._log_cache[state] = logs
        return logs

    def log_prob(self, token, prev, cond) -> float:
        idx = self._index.get(token)
        if idx is not None:
            return float(self.log_row(prev, cond)[idx])
        row = self.counts.get((prev, cond))
        total = sum(row.values()) if row else 0.0
        denom = total + self.alpha * len(self.out_vocab)
        if self.alpha > 0.0 and denom > 0.0:
            return math.log(self.alpha) - math.log(denom)
        return -math.inf

    def score(self, output, input_seq) -> float:
        """Natural-log probability of ``output`` given ``input_seq``."""
        output, input_seq = tuple(output), tuple(input_seq)
        if len(output) != len(input_seq):
            raise InvalidInputError(
                f"output length {len(output)} != input length {len(input_seq)}"
            )
        total = 0.0
        prev = BOS
        for out_tok, cond_tok in zip(output, input_seq):
            total += self.log_prob(out_tok, prev, cond_tok)
            prev = out_tok
        return total

    def matrices_for_cond(self, cond) -> tuple[np.ndarray, np.ndarray]:
        """(prob, log) matrices over prev states for one conditioning token.

        Row 0 is prev == BOS; row 1 + i is prev == out_vocab[i].  Backs the
        vectorized sampler and scorer in ``decode``.
        """
        cached = self._cond_matrices.get(cond)
        if cached is not None:
            return cached
        size = len(self.out_vocab)
        probs = np.empty((size + 1, size))
        probs[0] = self.prob_row(BOS, cond)
        for i, prev in enumerate(self.out_vocab):
            probs[1 + i] = self.prob_row(prev, cond)
        with np.errstate(divide="ignore"):
            logs = np.log(probs)
        probs.setflags(write=False)
        logs.setflags(write=False)
        self._cond_matrices[cond] = (probs, logs)
        return probs, logs

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        lines = [
            "btfactors-channel v1",
            f"direction {self.direction}",
            f"alpha {_num_to_str(self.alpha)}",
            "vocab " + " ".join(token_to_str(t) for t in self.out_vocab),
        ]
        def state_key(state):
            return (token_sort_key(state[0]), token_sort_key(state[1]))
        for state in sorted(self.counts, key=state_key):
            row = self.counts[state]
            entries = " ".join(
                f"{token_to_str(t)} {_num_to_str(row[t])}"
                for t in sorted(row, key=token_sort_key)
            )
            lines.append(
                f"state {token_to_str(state[0])} {token_to_str(state[1])} | {entries}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ChannelModel":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "btfactors-channel v1":
            raise ParseError("expected header 'btfactors-channel v1'", 1)
        fields = {}
        counts: dict[tuple, dict] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            key, _, rest = line.partition(" ")
            try:
                if key in ("direction", "alpha"):
                    fields[key] = rest.strip()
                elif key == "vocab":
                    fields["vocab"] = sequence_from_str(rest)
                elif key == "state":
                    state_text, _, entries = rest.partition("|")
                    state = sequence_from_str(state_text)
                    if len(state) != 2:
                        raise ValueError("state must have two tokens")
                    parts = entries.split()
                    if len(parts) % 2 != 0:
                        raise ValueError("odd entry list")
                    row = {
                        token_from_str(parts[i]): _num_from_str(parts[i + 1])
                        for i in range(0, len(parts), 2)
                    }
                    counts[tuple(state)] = row
                else:
                    raise ValueError(f"unknown key {key!r}")
            except (ValueError, InvalidInputError) as exc:
                raise ParseError(str(exc), lineno) from exc
        for required in ("direction", "alpha", "vocab"):
            if required not in fields:
                raise ParseError(f"missing field {required!r}")
        return cls(
            direction=fields["direction"],
            alpha=_num_from_str(fields["alpha"]),
            out_vocab=fields["vocab"],
            counts=counts,
        )


# -- training -------------------------------------------------------------

def train_ngram_lm(corpus, order: int = 2, alpha: float = 0.1, vocab=None,
                   use_eos: bool = True) -> NGramLM:
    """Count-MLE n-gram model with add-alpha smoothing.

    ``vocab`` defaults to the tokens observed in ``corpus``; passing an
    explicit vocabulary fixes the event space (tokens outside it are a
    caller error at training time).
    """
    sentences = [tuple(s) for s in corpus]
    if not sentences:
        raise InvalidInputError("training corpus must be non-empty")
    if any(not s for s in sentences):
        raise InvalidInputError("training sentences must be non-empty")
    if vocab is None:
        vocab = sorted({tok for s in sentences for tok in s}, key=token_sort_key)
    model = NGramLM(order=order, alpha=alpha, vocab=vocab, use_eos=use_eos)
    counts = model.counts
    for sentence in sentences:
        prefix: tuple = ()
        for tok in sentence:
            if model.event_index(tok) is None or tok == EOS:
                raise InvalidInputError(f"training token {tok!r} is outside the vocabulary")
            row = counts.setdefault(model.context_of(prefix), {})
            row[tok] = row.get(tok, 0) + 1
            prefix = prefix + (tok,)
        if use_eos:
            row = counts.setdefault(model.context_of(prefix), {})
            row[EOS] = row.get(EOS, 0) + 1
    return model


def train_channel(pairs: ParallelCorpus, direction: str, alpha: float = 0.1,
                  out_vocab=None) -> ChannelModel:
    """Count-MLE channel with add-alpha smoothing.

    ``direction`` picks which side is the output: ``source_to_target``
    models p(target | source), ``target_to_source`` models p(source |
    target).
    """
    if direction not in ChannelModel.DIRECTIONS:
        raise InvalidInputError(f"direction must be one of {ChannelModel.DIRECTIONS}")
    outputs_first = direction == "target_to_source"
    rows = []
    for src, tgt in pairs.pairs:
        out_seq, cond_seq = (src, tgt) if outputs_first else (tgt, src)
        rows.append((out_seq, cond_seq))
    if out_vocab is None:
        out_vocab = sorted({tok for out_seq, _ in rows for tok in out_seq}, key=token_sort_key)
    model = ChannelModel(direction=direction, alpha=alpha, out_vocab=out_vocab)
    counts = model.counts
    for out_seq, cond_seq in rows:
        prev = BOS
        for out_tok, cond_tok in zip(out_seq, cond_seq):
            if model.out_index(out_tok) is None:
                raise InvalidInputError(f"output token {out_tok!r} is outside the vocabulary")
            row = counts.setdefault((prev, cond_tok), {})
            row[out_tok] = row.get(out_tok, 0) + 1
            prev = out_tok
    return model


# -- module-level scoring wrappers -----------------------------------------

def lm_score(lm: NGramLM, sequence) -> float:
    return lm.score(sequence)


def channel_score(model: ChannelModel, output, input_seq) -> float:
    return model.score(output, input_seq)
