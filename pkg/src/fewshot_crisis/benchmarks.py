"""Named synthetic setups used by the acceptance suite, the demos and ``synth``.

Both setups hold out whole events for validation: the two validation events
have topic vocabularies never seen in training, so a model only scores well
if it learned to compare tweets rather than to recognise training events.
"""
from __future__ import annotations

from dataclasses import dataclass

from .corpus import Corpus, SyntheticSpec, generate_synthetic_corpus

# A small per-event topic vocabulary makes same-event tweets overlap heavily,
# which is what "separable" needs when the topic words are unseen at training.
TOPIC_VOCAB = 10
TOPIC_TOKEN_PROB = 0.9


@dataclass(frozen=True)
class SyntheticSetup:
    name: str
    corpus: Corpus
    negatives: Corpus | None
    anchors: dict[str, str]


def event_spec(seed: int = 1, n_events: int = 4, val_events: int = 2, **overrides) -> SyntheticSpec:
    kw = dict(
        n_events=n_events,
        val_events=val_events,
        topic_token_prob=TOPIC_TOKEN_PROB,
        topic_vocab_per_event=TOPIC_VOCAB,
        tweets_per_event=300,
        seed=seed,
    )
    kw.update(overrides)
    return SyntheticSpec(**kw)


def background_spec(seed: int = 2, n_topics: int = 40, tweets: int = 1600, **overrides) -> SyntheticSpec:
    """Many small unrelated topics labelled ``none``.

    Train and validation tweets are drawn from the same topics, the way a
    random sample of everyday tweets looks the same in any split.
    """
    kw = dict(
        n_events=n_topics,
        tweets_per_event=max(2, tweets // n_topics),
        topic_token_prob=TOPIC_TOKEN_PROB,
        topic_vocab_per_event=TOPIC_VOCAB,
        anchor_hashtag_prob=0.0,
        background=True,
        namespace="bg",
        val_fraction=0.5,
        seed=seed,
    )
    kw.update(overrides)
    return SyntheticSpec(**kw)


def separable_setup(seed: int = 1) -> SyntheticSetup:
    """2 training + 2 held-out events; the other events serve as negatives."""
    spec = event_spec(seed)
    return SyntheticSetup("separable", generate_synthetic_corpus(spec), None, spec.anchor_map())


def heterogeneous_setup(seed: int = 1, background_seed: int = 2) -> SyntheticSetup:
    """The separable events plus a wide background corpus of non-event tweets."""
    spec = event_spec(seed)
    bg = generate_synthetic_corpus(background_spec(background_seed))
    return SyntheticSetup("heterogeneous", generate_synthetic_corpus(spec), bg, spec.anchor_map())


SETUPS = {"separable": separable_setup, "heterogeneous": heterogeneous_setup}
