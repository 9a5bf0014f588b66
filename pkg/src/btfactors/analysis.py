"""Corpus diagnostics: BLEU, quality/importance summaries, length and
token-frequency profiles, and singular-value spectra of bag-of-token
sentence representations."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InconsistencyError, InvalidInputError, NumericError
from .manipulate import SyntheticPair
from .toyseq.models import ChannelModel, NGramLM, channel_score, lm_score


# -- BLEU -------------------------------------------------------------------

def _ngram_counts(tokens: tuple, n: int) -> Counter:
    return Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses, references, max_n: int = 4) -> float:
    """Corpus-level BLEU in [0, 100].

    Modified n-gram precisions are aggregated over the whole corpus; the
    geometric mean runs over the orders that have any hypothesis n-grams;
    an order with zero matches contributes the floor 1 / (2 * total); zero
    unigram matches give exactly 0.  The brevity penalty exp(1 - r/c)
    applies when the hypothesis corpus is shorter than the references.
    """
    hyps = [tuple(h) for h in hypotheses]
    refs = [tuple(r) for r in references]
    if not hyps or len(hyps) != len(refs):
        raise InvalidInputError("hypotheses and references must be equal-length and non-empty")
    matched = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_grams = _ngram_counts(hyp, n)
            if not hyp_grams:
                continue
            ref_grams = _ngram_counts(ref, n)
            total[n - 1] += sum(hyp_grams.values())
            matched[n - 1] += sum(min(c, ref_grams.get(g, 0)) for g, c in hyp_grams.items())
    orders = [i for i in range(max_n) if total[i] > 0]
    if not orders or matched[0] == 0:
        return 0.0
    log_precision = 0.0
    for i in orders:
        precision = matched[i] / total[i] if matched[i] > 0 else 1.0 / (2.0 * total[i])
        log_precision += math.log(precision)
    geometric = math.exp(log_precision / len(orders))
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * geometric


# -- quality / importance summaries ------------------------------------------

@dataclass
class QualityReport:
    mean_log_q: float
    bleu_vs_reference: float | None = None


@dataclass
class ImportanceReport:
    mean_log_importance: float


def corpus_quality_report(synthetic: Sequence[SyntheticPair], backward: ChannelModel,
                          references=None) -> QualityReport:
    """Mean per-sentence backward log-likelihood of the synthetic sources,
    plus their BLEU against reference sources when those exist."""
    if not synthetic:
        raise InvalidInputError("synthetic corpus must be non-empty")
    scores = [channel_score(backward, pair.source, pair.target) for pair in synthetic]
    mean_log_q = float(np.mean(scores))
    if not math.isfinite(mean_log_q):
        raise InvalidInputError("backward scores are not finite; check model smoothing")
    bleu = None
    if references is not None:
        refs = [tuple(r) for r in references]
        if len(refs) != len(synthetic):
            raise InconsistencyError("references must align one-to-one with synthetic pairs")
        bleu = corpus_bleu([pair.source for pair in synthetic], refs)
    return QualityReport(mean_log_q=mean_log_q, bleu_vs_reference=bleu)


def corpus_importance_report(synthetic: Sequence[SyntheticPair], lm: NGramLM,
                             backward: ChannelModel) -> ImportanceReport:
    """Mean per-sentence log importance weight of the synthetic sources."""
    if not synthetic:
        raise InvalidInputError("synthetic corpus must be non-empty")
    values = [
        lm_score(lm, pair.source) - channel_score(backward, pair.source, pair.target)
        for pair in synthetic
    ]
    mean = float(np.mean(values))
    if not math.isfinite(mean):
        raise InvalidInputError("importance weights are not finite; check model smoothing")
    return ImportanceReport(mean_log_importance=mean)


# -- corpus profile -----------------------------------------------------------

@dataclass
class CorpusProfile:
    length_histogram: dict[int, int]
    token_frequency_histogram: dict[int, int]
    vocab_size: int


def corpus_profile(corpus) -> CorpusProfile:
    """Sentence-length histogram, power-of-two token-frequency histogram
    (bucket 2**k counts the token types with frequency in [2**k, 2**(k+1))),
    and the distinct-token count."""
    sentences = [tuple(s) for s in corpus]
    if not sentences:
        raise InvalidInputError("corpus must be non-empty")
    lengths = Counter(len(s) for s in sentences)
    token_freq = Counter(tok for s in sentences for tok in s)
    buckets: Counter = Counter()
    for freq in token_freq.values():
        buckets[2 ** int(math.floor(math.log2(freq)))] += 1
    return CorpusProfile(
        length_histogram=dict(sorted(lengths.items())),
        token_frequency_histogram=dict(sorted(buckets.items())),
        vocab_size=len(token_freq),
    )


# -- sentence representations and spectrum -------------------------------------

def sentence_representation_matrix(corpus, vocab) -> np.ndarray:
    """Rows are L2-normalized bag-of-token count vectors over ``vocab``."""
    sentences = [tuple(s) for s in corpus]
    if not sentences:
        raise InvalidInputError("corpus must be non-empty")
    vocab = tuple(vocab)
    index = {tok: i for i, tok in enumerate(vocab)}
    matrix = np.zeros((len(sentences), len(vocab)))
    for row, sentence in enumerate(sentences):
        for tok in sentence:
            col = index.get(tok)
            if col is None:
                raise InvalidInputError(f"token {tok!r} is outside the representation vocabulary")
            matrix[row, col] += 1.0
        matrix[row] /= np.linalg.norm(matrix[row])
    return matrix


@dataclass
class SpectrumReport:
    singular_values: tuple[float, ...]
    normalized_spectral_entropy: float


def _jacobi_eigenvalues(sym: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Converged when the off-diagonal Frobenius norm drops below ``tol``
    relative to the matrix norm; raises after ``max_sweeps`` full sweeps.
    """
    a = np.array(sym, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = max(float(np.linalg.norm(a)), 1.0)
    off_diag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # summed directly over off-diagonal entries: a full-norm/diagonal
        # subtraction would bottom out at the cancellation floor ~eps*|A|^2
        off = float(np.linalg.norm(a[off_diag]))
        if off <= tol * scale:
            return a.diagonal().copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
    raise NumericError(f"Jacobi iteration did not converge within {max_sweeps} sweeps")


def singular_spectrum(matrix) -> SpectrumReport:
    """Descending singular values via Jacobi eigendecomposition of the
    smaller Gram matrix, plus the entropy of the squared spectrum
    normalized by log(min(rows, cols))."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError("matrix must be 2-D and non-empty")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix entries must be finite")
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    eigenvalues = np.clip(_jacobi_eigenvalues(gram), 0.0, None)
    singular = np.sqrt(np.sort(eigenvalues)[::-1])
    energy = singular**2
    total = float(energy.sum())
    if total <= 0.0:
        raise InvalidInputError("matrix is degenerate (zero Frobenius norm)")
    shares = energy / total
    entropy = float(-(shares[shares > 0.0] * np.log(shares[shares > 0.0])).sum())
    bound = min(a.shape)
    normalized = entropy / math.log(bound) if bound > 1 else 0.0
    return SpectrumReport(
        singular_values=tuple(float(v) for v in singular),
        normalized_spectral_entropy=normalized,
    )
