"""Episode construction for the event-vs-event and event-vs-all regimes."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .corpus import NO_EVENT, Corpus, Tweet

EVENT_VS_EVENT = "event-vs-event"
EVENT_VS_ALL = "event-vs-all"
REGIMES = (EVENT_VS_EVENT, EVENT_VS_ALL)

MAX_REDRAWS = 100


class SamplingError(RuntimeError):
    pass


class UnusableSupport(SamplingError):
    """A support tweet has no tokens left once its anchor hashtag is removed."""


@dataclass(frozen=True)
class Episode:
    pos_supports: tuple[Tweet, ...]
    neg_supports: tuple[Tweet, ...]
    query: Tweet
    query_label: bool
    event: str
    anchor: tuple[str, str] | None = None

    def support_ids(self) -> list[str]:
        return [t.id for t in self.pos_supports + self.neg_supports]

    def tweet_ids(self) -> tuple[str, ...]:
        return tuple(self.support_ids()) + (self.query.id,)


@dataclass(frozen=True)
class SamplerConfig:
    regime: str = EVENT_VS_ALL
    k_shot: int = 5
    one_way: bool = False
    pos_query_prob: float = 0.5
    anchor_map: Mapping[str, str] = field(default_factory=dict)
    negative_source: str = "other-events"
    seed: int = 0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.k_shot < 1:
            raise ValueError("k_shot must be >= 1")
        if not 0.0 < self.pos_query_prob < 1.0:
            raise ValueError("pos_query_prob must lie in (0, 1)")


def strip_anchor_hashtag(tokens: Sequence[str], hashtag: str) -> tuple[str, ...]:
    """Drop every occurrence of ``hashtag`` from ``tokens``.

    Raises UnusableSupport if nothing is left.
    """
    out = tuple(t for t in tokens if t != hashtag)
    if not out:
        raise UnusableSupport(f"no tokens left after removing {hashtag!r}")
    return out


def _stripped(tweet: Tweet, hashtag: str) -> Tweet:
    if hashtag not in tweet.tokens:
        return tweet
    return replace(tweet, tokens=strip_anchor_hashtag(tweet.tokens, hashtag))


def _draw(rng: np.random.Generator, pool: np.ndarray, n: int, what: str) -> np.ndarray:
    if len(pool) < n:
        raise SamplingError(f"need {n} distinct {what}, only {len(pool)} available")
    return rng.choice(pool, size=n, replace=False)


def _without(pool: np.ndarray, exclude: np.ndarray | int) -> np.ndarray:
    return pool[~np.isin(pool, exclude)]


def event_vs_event_pools(corpus: Corpus, event: str, anchor: str):
    """Indices of (anchor-bearing, anchor-free, other-event) tweets for ``event``."""
    bearing = corpus.by_event_hashtag.get((event, anchor), np.empty(0, dtype=np.int64))
    own = corpus.by_event.get(event, np.empty(0, dtype=np.int64))
    free = np.asarray([i for i in own if anchor not in corpus[i].tokens], dtype=np.int64)
    others = [v for e, v in corpus.by_event.items() if e != event]
    other = np.concatenate(others) if others else np.empty(0, dtype=np.int64)
    return bearing, free, np.sort(other)


def sample_event_vs_event(
    corpus: Corpus,
    config: SamplerConfig,
    event: str,
    rng: np.random.Generator,
    _pools=None,
) -> Episode:
    """Positive supports carry the event's anchor hashtag (removed afterwards);
    positive queries come from the same event's anchor-free tweets and
    negatives from the other events."""
    try:
        anchor = config.anchor_map[event]
    except KeyError:
        raise SamplingError(f"no anchor hashtag configured for event {event!r}") from None
    bearing, free, other = _pools if _pools is not None else event_vs_event_pools(corpus, event, anchor)
    k = config.k_shot
    if len(bearing) < k:
        raise SamplingError(f"event {event!r}: {len(bearing)} tweets carry #{anchor}, need k={k}")
    if len(free) < 1:
        raise SamplingError(f"event {event!r}: no tweet without #{anchor} for a positive query")
    if len(other) < 1:
        raise SamplingError("event-vs-event sampling needs at least one other event")

    for _ in range(MAX_REDRAWS):
        positive = bool(rng.random() < config.pos_query_prob)
        q = int(rng.choice(free)) if positive else int(rng.choice(other))
        try:
            pos = tuple(_stripped(corpus[i], anchor) for i in _draw(rng, bearing, k, "anchor tweets"))
            neg: tuple[Tweet, ...] = ()
            if not config.one_way:
                idx = _draw(rng, _without(other, q), k, "other-event tweets")
                neg = tuple(_stripped(corpus[i], anchor) for i in idx)
        except UnusableSupport:
            continue
        return Episode(pos, neg, corpus[q], positive, event, (event, anchor))
    raise SamplingError(f"event {event!r}: no usable support set after {MAX_REDRAWS} draws")


def sample_event_vs_all(
    pos_corpus: Corpus,
    neg_corpus: Corpus,
    config: SamplerConfig,
    event: str,
    rng: np.random.Generator,
    _neg_pool=None,
) -> Episode:
    own = pos_corpus.by_event.get(event, np.empty(0, dtype=np.int64))
    k = config.k_shot
    if len(own) < k + 1:
        raise SamplingError(f"event {event!r}: {len(own)} tweets, need k+1={k + 1}")
    neg_pool = _neg_pool if _neg_pool is not None else negative_pool(neg_corpus, event)
    if len(neg_pool) < 1:
        raise SamplingError("negative corpus has no tweet outside the positive event")

    positive = bool(rng.random() < config.pos_query_prob)
    if positive:
        picked = _draw(rng, own, k + 1, f"tweets of event {event!r}")
        pos_idx, q = picked[:k], int(picked[k])
        query = pos_corpus[q]
    else:
        pos_idx = _draw(rng, own, k, f"tweets of event {event!r}")
        q = int(rng.choice(neg_pool))
        query = neg_corpus[q]
    neg: tuple[Tweet, ...] = ()
    if not config.one_way:
        pool = neg_pool if positive else _without(neg_pool, q)
        neg = tuple(neg_corpus[i] for i in _draw(rng, pool, k, "negative tweets"))
    pos = tuple(pos_corpus[i] for i in pos_idx)
    return Episode(pos, neg, query, positive, event)


def negative_pool(neg_corpus: Corpus, event: str) -> np.ndarray:
    parts = [v for e, v in neg_corpus.by_event.items() if e != event]
    return np.sort(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)


class EpisodeSampler:
    """Draws episodes for one regime, caching per-event index pools.

    For event-vs-event only ``pos_corpus`` is used; for event-vs-all the
    negatives come from ``neg_corpus``.
    """

    def __init__(self, pos_corpus: Corpus, config: SamplerConfig, neg_corpus: Corpus | None = None):
        self.pos_corpus = pos_corpus
        self.neg_corpus = neg_corpus
        self.config = config
        if config.regime == EVENT_VS_ALL and neg_corpus is None:
            raise ValueError("event-vs-all sampling needs a negative corpus")
        self._pools: dict[str, tuple] = {}
        self.events = [e for e in pos_corpus.events if self._eligible(e)]

    def _eligible(self, event: str) -> bool:
        if event == NO_EVENT:
            return False
        c, k = self.config, self.config.k_shot
        if c.regime == EVENT_VS_EVENT:
            if event not in c.anchor_map:
                return False
            pools = event_vs_event_pools(self.pos_corpus, event, c.anchor_map[event])
            bearing, free, other = pools
            need_other = 1 if c.one_way else k + 1
            ok = len(bearing) >= k and len(free) >= 1 and len(other) >= need_other
        else:
            pools = negative_pool(self.neg_corpus, event)
            need_neg = 1 if c.one_way else k + 1
            ok = len(self.pos_corpus.by_event[event]) >= k + 1 and len(pools) >= need_neg
        if ok:
            self._pools[event] = pools
        return ok

    def sample(self, event: str, rng: np.random.Generator) -> Episode:
        if self.config.regime == EVENT_VS_EVENT:
            return sample_event_vs_event(
                self.pos_corpus, self.config, event, rng, _pools=self._pools.get(event)
            )
        return sample_event_vs_all(
            self.pos_corpus, self.neg_corpus, self.config, event, rng, _neg_pool=self._pools.get(event)
        )

    def episodes(self, n: int, rng: np.random.Generator) -> list[Episode]:
        if n < 1:
            raise ValueError("n must be >= 1")
        if not self.events:
            raise SamplingError(
                f"no event satisfies the {self.config.regime} preconditions for k={self.config.k_shot}"
            )
        return [self.sample(self.events[rng.integers(len(self.events))], rng) for _ in range(n)]


def build_episode_set(
    pos_corpus: Corpus,
    config: SamplerConfig,
    n: int,
    rng: np.random.Generator | int | None = None,
    neg_corpus: Corpus | None = None,
) -> list[Episode]:
    """``n`` episodes whose positive events are drawn uniformly among eligible ones."""
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(config.seed if rng is None else rng)
    return EpisodeSampler(pos_corpus, config, neg_corpus).episodes(n, rng)
