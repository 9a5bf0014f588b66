"""Two-factor candidate scoring.

A candidate translation carries two natural-log scores: its backward-model
log-probability (quality) and its source language-model log-probability.
The log importance weight is their difference.  Both factors are divided by
the candidate's token count, standardized across the candidate set, mixed
with weight ``gamma``, and pushed through a softmax to give the Gamma score
distribution.  Selection takes the argmax; sampling draws from it.

The token count includes one terminal end-of-sequence marker when the token
sequence carries one.  For equal-length candidate sets (the toy task's
channel preserves length) the convention cancels: z-scores are invariant to
a common positive length divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

DEFAULT_GAMMA = 0.2
DEFAULT_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class Candidate:
    """One back-translated hypothesis with its two model log-probabilities."""

    tokens: tuple
    length: int
    log_q: float
    log_lm: float

    def __post_init__(self):
        if self.length != len(self.tokens) or self.length < 1:
            raise InvalidInputError(
                f"candidate length {self.length} does not match {len(self.tokens)} tokens"
            )
        if not (math.isfinite(self.log_q) and math.isfinite(self.log_lm)):
            raise InvalidInputError("candidate log-probabilities must be finite")

    @classmethod
    def from_scores(cls, tokens, log_q: float, log_lm: float) -> "Candidate":
        tokens = tuple(tokens)
        return cls(tokens=tokens, length=len(tokens), log_q=float(log_q), log_lm=float(log_lm))


@dataclass(frozen=True)
class CandidateSet:
    """The candidate pool for one target sentence, in generation order.

    Duplicates are kept: identical sampled sequences accumulate their own
    Gamma mass naturally.
    """

    target_id: int
    target_tokens: tuple
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        if self.target_id < 0:
            raise InvalidInputError("target_id must be non-negative")
        if not self.target_tokens:
            raise InvalidInputError("target_tokens must be non-empty")
        if len(self.candidates) < 2:
            raise InvalidInputError("a candidate set needs at least 2 candidates")

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class GammaParams:
    """Mixing weight between importance (gamma) and quality (1 - gamma)."""

    gamma: float = DEFAULT_GAMMA
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidInputError(f"gamma must be in [0, 1], got {self.gamma}")
        if not self.sigma_floor > 0.0:
            raise InvalidInputError("sigma_floor must be positive")


@dataclass(frozen=True)
class StandardizedScores:
    values: tuple[float, ...]
    mu: float
    sigma: float


@dataclass(frozen=True)
class GammaDistribution:
    probs: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.size < 2 or not np.all((arr > 0.0) & (arr < 1.0)):
            raise InvalidInputError("Gamma probabilities must lie strictly inside (0, 1)")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise InvalidInputError("Gamma probabilities must sum to 1")


def log_importance(candidate: Candidate) -> float:
    """Log importance weight: source-LM log-prob minus backward-model log-prob."""
    if not (math.isfinite(candidate.log_lm) and math.isfinite(candidate.log_q)):
        raise InvalidInputError("candidate log-probabilities must be finite")
    return candidate.log_lm - candidate.log_q


def standardize(log_values, lengths, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> StandardizedScores:
    """Divide each log value by its sequence length, then z-score the list.

    The scale is the sample standard deviation (N-1 divisor).  When it does
    not exceed ``sigma_floor`` every output is exactly 0, which keeps
    degenerate all-duplicate candidate sets away from a division by ~0 and
    turns the downstream Gamma distribution uniform.
    """
    if not sigma_floor > 0.0:
        raise InvalidInputError("sigma_floor must be positive")
    values = np.asarray(log_values, dtype=float)
    lens = np.asarray(lengths, dtype=float)
    if values.ndim != 1 or values.shape != lens.shape:
        raise InvalidInputError("log_values and lengths must be equal-length 1-D sequences")
    if values.size < 2:
        raise InvalidInputError("standardization needs at least 2 values")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("log values must be finite")
    if np.any(lens < 1):
        raise InvalidInputError("lengths must be positive")

    normalized = values / lens
    mu = float(np.mean(normalized))
    sigma = float(np.std(normalized, ddof=1))
    if sigma <= sigma_floor:
        out = np.zeros_like(normalized)
    else:
        out = (normalized - mu) / sigma
    return StandardizedScores(values=tuple(float(v) for v in out), mu=mu, sigma=sigma)


def _combined_scores(cset: CandidateSet, params: GammaParams) -> np.ndarray:
    lengths = [c.length for c in cset.candidates]
    imp = standardize([log_importance(c) for c in cset.candidates], lengths, params.sigma_floor)
    qual = standardize([c.log_q for c in cset.candidates], lengths, params.sigma_floor)
    return params.gamma * np.asarray(imp.values) + (1.0 - params.gamma) * np.asarray(qual.values)


def gamma_distribution(cset: CandidateSet, params: GammaParams = GammaParams()) -> GammaDistribution:
    """Softmax over gamma-weighted standardized importance and quality.

    Sample-std z-scores are bounded by (N-1)/sqrt(N), so the softmax never
    over/underflows and every probability is strictly inside (0, 1).
    """
    scores = _combined_scores(cset, params)
    weights = np.exp(scores - scores.max())
    probs = weights / weights.sum()
    return GammaDistribution(probs=tuple(float(p) for p in probs))


def gamma_select(cset: CandidateSet, params: GammaParams = GammaParams()) -> int:
    """Index of the maximal Gamma score; ties break to the lowest index."""
    return int(np.argmax(gamma_distribution(cset, params).probs))


def gamma_sample(cset: CandidateSet, params: GammaParams, rng: np.random.Generator) -> int:
    """Draw a candidate index from the Gamma distribution.

    Pass a generator derived from (seed, target_id) — see ``streams`` — so a
    corpus pass is reproducible sentence by sentence.
    """
    probs = np.asarray(gamma_distribution(cset, params).probs)
    cumulative = np.cumsum(probs)
    idx = int(np.searchsorted(cumulative, float(rng.random()), side="right"))
    return min(idx, len(probs) - 1)
