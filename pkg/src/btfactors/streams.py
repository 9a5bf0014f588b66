"""Deterministic random-stream derivation.

Every stochastic operation takes an explicit ``numpy.random.Generator``.
Per-sentence streams are derived from (global seed, sentence index), so a
corpus pass gives identical results regardless of scheduling or worker
count.  Namespaces keep task-generation streams, per-sentence streams, and
corpus-split streams disjoint under one global seed.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

_NS_TASK = 0
_NS_SENTENCE = 1

# phase tags inside the task namespace
TAG_TRUTH_LM = 0
TAG_TRUTH_CHANNEL = 1
TAG_CORPUS = 2


def derive_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, *key); stable across platforms."""
    if seed < 0:
        raise InvalidInputError("seed must be a non-negative integer")
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    )


def task_stream(seed: int, tag: int) -> np.random.Generator:
    """Stream for one phase of toy-task generation."""
    return derive_stream(seed, _NS_TASK, tag)


def sentence_stream(seed: int, target_id: int) -> np.random.Generator:
    """Stream for all stochastic choices tied to one target sentence."""
    if target_id < 0:
        raise InvalidInputError("target_id must be a non-negative integer")
    return derive_stream(seed, _NS_SENTENCE, target_id)


def split_stream(seed: int) -> np.random.Generator:
    """Stream driving a corpus split shuffle."""
    return derive_stream(seed)
