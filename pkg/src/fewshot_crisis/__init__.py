"""Few-shot detection of crisis-related tweets with metric-learning heads.

A numpy-only implementation of a convolutional tweet encoder trained
episodically with matching, prototypical or one-way prototypical heads.
"""
from .config import DESK, FULL, TrainConfig
from .corpus import Corpus, SyntheticSpec, Tweet, Vocabulary, generate_synthetic_corpus, load_corpus
from .episodes import EVENT_VS_ALL, EVENT_VS_EVENT, Episode, EpisodeSampler, SamplerConfig
from .harness import (
    ExperimentData,
    FewShotModel,
    evaluate,
    k_shot_sweep,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
    score_candidates,
    train,
)
from .heads import ClassScores, HeadKind, matching_head, oneway_head, proto_head
from .metrics import Confusion, MetricReport, aggregate_seeds

__version__ = "0.1.0"

__all__ = [
    "DESK",
    "FULL",
    "TrainConfig",
    "Corpus",
    "SyntheticSpec",
    "Tweet",
    "Vocabulary",
    "generate_synthetic_corpus",
    "load_corpus",
    "EVENT_VS_ALL",
    "EVENT_VS_EVENT",
    "Episode",
    "EpisodeSampler",
    "SamplerConfig",
    "ExperimentData",
    "FewShotModel",
    "evaluate",
    "k_shot_sweep",
    "load_checkpoint",
    "model_from_checkpoint",
    "save_checkpoint",
    "score_candidates",
    "train",
    "ClassScores",
    "HeadKind",
    "matching_head",
    "oneway_head",
    "proto_head",
    "Confusion",
    "MetricReport",
    "aggregate_seeds",
]
