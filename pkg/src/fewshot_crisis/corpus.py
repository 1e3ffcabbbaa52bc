"""Tweet corpora: tokenization, TSV ingestion, vocabulary and synthetic data.

All corpora share one tab-separated layout::

    id<TAB>event_id<TAB>split<TAB>text

``event_id`` is ``"none"`` for tweets that belong to no event and ``split``
is one of ``train``, ``val`` or ``any``.
"""
from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1
URL_TOKEN, USER_TOKEN = "<url>", "<user>"
NO_EVENT = "none"
SPLITS = ("train", "val", "any")
COLUMNS = ("id", "event_id", "split", "text")

_TOKEN_RE = re.compile(
    r"(?P<url>https?://\S+|www\.\S+)"
    r"|(?P<placeholder><url>|<user>)"
    r"|(?P<user>@\w+)"
    r"|#(?P<hashtag>\w+)"
    r"|(?P<word>\w+(?:'\w+)*)"
    r"|(?P<punct>[^\w\s])"
)


class CorpusError(ValueError):
    """Raised for malformed corpus or anchor-map files."""


def _scan(raw_text: str):
    for m in _TOKEN_RE.finditer(raw_text):
        kind = m.lastgroup
        if kind == "url":
            yield kind, URL_TOKEN
        elif kind == "user":
            yield kind, USER_TOKEN
        elif kind == "hashtag":
            yield kind, m.group("hashtag").lower()
        else:
            yield kind, m.group(kind).lower()


def normalize_and_tokenize(raw_text: str) -> list[str]:
    """Lowercase and split a tweet into tokens.

    URLs become ``<url>``, mentions become ``<user>``, hashtags lose their
    ``#`` and punctuation characters are emitted one per token.

    >>> normalize_and_tokenize("Help #PabloPH now!")
    ['help', 'pabloph', 'now', '!']
    """
    return [tok for _, tok in _scan(raw_text)]


def extract_hashtags(raw_text: str) -> frozenset[str]:
    return frozenset(tok for kind, tok in _scan(raw_text) if kind == "hashtag")


@dataclass(frozen=True)
class Tweet:
    id: str
    event_id: str
    raw_text: str
    tokens: tuple[str, ...]
    hashtags: frozenset[str] = frozenset()
    split: str = "any"

    @classmethod
    def from_text(cls, id: str, event_id: str, raw_text: str, split: str = "any") -> "Tweet":
        return cls(
            id=id,
            event_id=event_id,
            raw_text=raw_text,
            tokens=tuple(normalize_and_tokenize(raw_text)),
            hashtags=extract_hashtags(raw_text),
            split=split,
        )


class Corpus:
    """An immutable, indexed collection of tweets.

    ``by_event`` maps each event id to the (sorted) positions of its tweets and
    ``by_event_hashtag`` maps ``(event_id, hashtag)`` to the positions of the
    event's tweets carrying that hashtag.
    """

    def __init__(self, tweets: Iterable[Tweet], skipped: int = 0):
        self.tweets: tuple[Tweet, ...] = tuple(tweets)
        self.skipped = skipped
        seen: set[str] = set()
        by_event: dict[str, list[int]] = {}
        by_tag: dict[tuple[str, str], list[int]] = {}
        for i, tw in enumerate(self.tweets):
            if tw.id in seen:
                raise CorpusError(f"duplicate tweet id {tw.id!r}")
            seen.add(tw.id)
            by_event.setdefault(tw.event_id, []).append(i)
            for tag in tw.hashtags:
                by_tag.setdefault((tw.event_id, tag), []).append(i)
        self.by_event = {k: np.asarray(v, dtype=np.int64) for k, v in by_event.items()}
        self.by_event_hashtag = {k: np.asarray(v, dtype=np.int64) for k, v in by_tag.items()}

    def __len__(self) -> int:
        return len(self.tweets)

    def __getitem__(self, i: int) -> Tweet:
        return self.tweets[i]

    def __repr__(self) -> str:
        return f"Corpus({len(self)} tweets, {len(self.by_event)} events)"

    @property
    def events(self) -> list[str]:
        return sorted(self.by_event)

    def select(self, split: str) -> "Corpus":
        """Tweets usable in ``split`` (those marked with it or with ``any``)."""
        if split == "any":
            return self
        return Corpus([tw for tw in self.tweets if tw.split in (split, "any")])

    def merge(self, other: "Corpus") -> "Corpus":
        """Union of both corpora; a tweet present in both is kept once.

        The same id with different content is still a duplicate-id error.
        """
        mine = {tw.id: tw for tw in self.tweets}
        extra = [tw for tw in other.tweets if mine.get(tw.id) != tw]
        return Corpus(self.tweets + tuple(extra), self.skipped + other.skipped)


DEFAULT_SCHEMA: dict[str, str | None] = {c: c for c in COLUMNS}


def load_corpus(path: str | Path, schema: Mapping[str, str | None] | None = None) -> Corpus:
    """Read a tab-separated corpus file.

    ``schema`` maps the logical fields ``id``, ``event_id``, ``split`` and
    ``text`` to header names; ``event_id`` and ``split`` may map to ``None``,
    in which case they default to ``"none"`` and ``"any"``. Rows whose text
    normalizes to nothing are skipped and counted in ``Corpus.skipped``.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    tweets = []
    skipped = 0
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: empty file, expected a header row") from None
        col = {}
        for name in COLUMNS:
            key = schema.get(name)
            if key is None:
                if name in ("id", "text"):
                    raise CorpusError(f"schema must map required column {name!r}")
                continue
            if key not in header:
                raise CorpusError(f"{path}: header lacks column {key!r}")
            col[name] = header.index(key)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CorpusError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            split = row[col["split"]] if "split" in col else "any"
            if split not in SPLITS:
                raise CorpusError(f"{path}:{lineno}: unknown split {split!r}")
            event = row[col["event_id"]] if "event_id" in col else NO_EVENT
            tw = Tweet.from_text(row[col["id"]], event, row[col["text"]], split)
            if not tw.tokens:
                skipped += 1
                continue
            tweets.append(tw)
    try:
        return Corpus(tweets, skipped)
    except CorpusError as exc:
        raise CorpusError(f"{path}: {exc}") from None


def write_corpus(corpus: Corpus | Iterable[Tweet], path: str | Path) -> None:
    tweets = corpus.tweets if isinstance(corpus, Corpus) else corpus
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(COLUMNS) + "\n")
        for tw in tweets:
            fields = (tw.id, tw.event_id, tw.split, tw.raw_text)
            if any(("\t" in f or "\n" in f) for f in fields):
                raise CorpusError(f"tweet {tw.id!r}: tab or newline inside a field")
            fh.write("\t".join(fields) + "\n")


def load_anchor_map(path: str | Path) -> dict[str, str]:
    """Read ``event_id<TAB>hashtag`` lines; a leading header row is optional."""
    anchors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected event_id<TAB>hashtag")
            event, tag = parts
            if lineno == 1 and (event, tag) == ("event_id", "hashtag"):
                continue
            tag = tag.lstrip("#").lower()
            if not tag:
                raise CorpusError(f"{path}:{lineno}: empty hashtag")
            anchors[event] = tag
    return anchors


def write_anchor_map(anchors: Mapping[str, str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("event_id\thashtag\n")
        for event in sorted(anchors):
            fh.write(f"{event}\t{anchors[event]}\n")


@dataclass(frozen=True)
class Vocabulary:
    token_to_id: Mapping[str, int]

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def __len__(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def tokens(self) -> list[str]:
        return sorted(self.token_to_id, key=self.token_to_id.__getitem__)

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        get = self.token_to_id.get
        return np.fromiter((get(t, UNK_ID) for t in tokens), dtype=np.int64)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocabulary":
        """Rebuild from an id-ordered token list (as stored in checkpoints)."""
        tokens = list(tokens)
        if tokens[:2] != [PAD, UNK]:
            raise CorpusError("vocabulary must start with the PAD and UNK entries")
        if len(set(tokens)) != len(tokens):
            raise CorpusError("vocabulary contains duplicate tokens")
        return cls({t: i for i, t in enumerate(tokens)})


def build_vocabulary(
    corpus: Corpus | Iterable[Corpus], min_freq: int = 2, max_size: int | None = None
) -> Vocabulary:
    """Frequency-ranked vocabulary; ties are broken lexicographically.

    ``max_size`` caps the total size (reserved entries included).
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    corpora = [corpus] if isinstance(corpus, Corpus) else list(corpus)
    counts: Counter[str] = Counter()
    for c in corpora:
        for tw in c.tweets:
            counts.update(tw.tokens)
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(
        (t for t, n in counts.items() if n >= min_freq and t not in (PAD, UNK)),
        key=lambda t: (-counts[t], t),
    )
    if max_size is not None:
        ranked = ranked[: max(0, max_size - 2)]
    return Vocabulary({PAD: PAD_ID, UNK: UNK_ID, **{t: i + 2 for i, t in enumerate(ranked)}})


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic corpus with known event structure.

    Event ``k`` gets the id ``f"{namespace}ev{k}"``, the topic tokens
    ``f"{namespace}ev{k}w{j}"`` and the anchor hashtag ``f"{namespace}ev{k}tag"``;
    shared tokens are ``s{j}`` in every namespace. The last ``val_events``
    events are marked ``val``, the rest ``train``. With ``background=True``
    every tweet is labelled ``"none"`` (topics still differ) and carries the
    split ``any`` unless ``val_events`` is set. ``val_fraction`` instead marks
    a random share of every event's tweets ``val`` (the rest ``train``), so
    both splits draw from the same topics; it suits background corpora.
    """

    n_events: int = 4
    topic_vocab_per_event: int = 50
    shared_vocab: int = 200
    tweets_per_event: int = 300
    topic_token_prob: float = 0.5
    min_len: int = 6
    max_len: int = 16
    anchor_hashtag_prob: float = 0.3
    seed: int = 0
    val_events: int = 0
    namespace: str = ""
    background: bool = False
    val_fraction: float = 0.0

    def __post_init__(self):
        for name in ("topic_token_prob", "anchor_hashtag_prob", "val_fraction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.min_len < 1 or self.max_len < self.min_len:
            raise ValueError("need 1 <= min_len <= max_len")
        if min(self.n_events, self.topic_vocab_per_event, self.shared_vocab, self.tweets_per_event) < 1:
            raise ValueError("counts must be >= 1")
        if not 0 <= self.val_events <= self.n_events:
            raise ValueError("val_events must lie in [0, n_events]")
        if self.val_events and self.val_fraction:
            raise ValueError("val_events and val_fraction are mutually exclusive")

    def event_id(self, k: int) -> str:
        return f"{self.namespace}ev{k}"

    def anchor(self, k: int) -> str:
        return f"{self.namespace}ev{k}tag"

    def anchor_map(self) -> dict[str, str]:
        return {self.event_id(k): self.anchor(k) for k in range(self.n_events)}


def generate_synthetic_corpus(spec: SyntheticSpec) -> Corpus:
    rng = np.random.default_rng(spec.seed)
    # separate stream so the split assignment never perturbs the token draws
    split_rng = np.random.default_rng([spec.seed, 1])
    shared = [f"s{j}" for j in range(spec.shared_vocab)]
    tweets = []
    for k in range(spec.n_events):
        event = spec.event_id(k)
        topic = [f"{event}w{j}" for j in range(spec.topic_vocab_per_event)]
        if spec.val_events:
            split = "val" if k >= spec.n_events - spec.val_events else "train"
        else:
            split = "any"
        for i in range(spec.tweets_per_event):
            n = int(rng.integers(spec.min_len, spec.max_len + 1))
            from_topic = rng.random(n) < spec.topic_token_prob
            words = [
                topic[rng.integers(len(topic))] if t else shared[rng.integers(len(shared))]
                for t in from_topic
            ]
            if rng.random() < spec.anchor_hashtag_prob:
                words.insert(int(rng.integers(n + 1)), "#" + spec.anchor(k))
            label = NO_EVENT if spec.background else event
            if spec.val_fraction:
                split = "val" if split_rng.random() < spec.val_fraction else "train"
            tweets.append(Tweet.from_text(f"{event}-{i}", label, " ".join(words), split))
    return Corpus(tweets)
