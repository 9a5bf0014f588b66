"""Desk-scale sequence models: smoothed n-gram language models, Markov
channel translation models, beam/sampling decoders, and the seeded toy
translation task they are trained on."""

from .models import (
    ChannelModel,
    NGramLM,
    ParallelCorpus,
    channel_score,
    lm_score,
    train_channel,
    train_ngram_lm,
)
from .decode import beam_decode, sample_candidate_set, sample_decode
from .taskgen import ToyTask, ToyTaskSpec, generate_toy_task

__all__ = [
    "ChannelModel",
    "NGramLM",
    "ParallelCorpus",
    "ToyTask",
    "ToyTaskSpec",
    "beam_decode",
    "channel_score",
    "generate_toy_task",
    "lm_score",
    "sample_candidate_set",
    "sample_decode",
    "train_channel",
    "train_ngram_lm",
]
