import numpy as np
import pytest

from btfactors.scoring import Candidate, CandidateSet


def make_set(log_qs, log_lms, lengths=None, target_id=0):
    """Candidate set with synthetic single-token-per-length sequences."""
    n = len(log_qs)
    lengths = lengths or [1] * n
    candidates = tuple(
        Candidate(tokens=tuple(range(length)), length=length, log_q=float(q), log_lm=float(lm))
        for q, lm, length in zip(log_qs, log_lms, lengths)
    )
    return CandidateSet(target_id=target_id, target_tokens=(0,), candidates=candidates)


def random_set(rng, n=None, max_len=6, target_id=0):
    """Random candidate set with varied lengths and scores."""
    n = n or int(rng.integers(2, 9))
    lengths = rng.integers(1, max_len + 1, size=n)
    log_qs = -rng.exponential(5.0, size=n) - 0.1
    log_lms = -rng.exponential(5.0, size=n) - 0.1
    candidates = tuple(
        Candidate(
            tokens=tuple(int(t) for t in rng.integers(0, 20, size=length)),
            length=int(length),
            log_q=float(q),
            log_lm=float(lm),
        )
        for q, lm, length in zip(log_qs, log_lms, lengths)
    )
    return CandidateSet(target_id=target_id, target_tokens=(0, 1), candidates=candidates)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
