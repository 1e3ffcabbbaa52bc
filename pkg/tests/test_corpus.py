import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewshot_crisis.corpus import (
    PAD,
    UNK,
    Corpus,
    CorpusError,
    SyntheticSpec,
    Tweet,
    build_vocabulary,
    extract_hashtags,
    generate_synthetic_corpus,
    load_anchor_map,
    load_corpus,
    normalize_and_tokenize,
    write_anchor_map,
    write_corpus,
)


def write_tsv(path, rows, header="id\tevent_id\tsplit\ttext"):
    path.write_text(header + "\n" + "".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "text, expected",
    [
        ("Help #PabloPH now!", ["help", "pabloph", "now", "!"]),
        ("@user see http://x.co", ["<user>", "see", "<url>"]),
        ("#SGHaze #sghaze", ["sghaze", "sghaze"]),
        ("don't panic...", ["don't", "panic", ".", ".", "."]),
        ("", []),
    ],
)
def test_tokenizer_rules(text, expected):
    assert normalize_and_tokenize(text) == expected


def test_hashtags_are_lowercase_and_prefix_free():
    assert extract_hashtags("Stay safe #YYCflood #yycflood http://t.co/#frag") == {"yycflood"}


tweet_text = st.lists(
    st.sampled_from(list("abcXYZ019 #@!.,'_/:") + ["http://t.co/a ", "é", "ü", "<url>", "<user>"]),
    max_size=40,
).map("".join)


@given(tweet_text)
@settings(max_examples=300, deadline=None)
def test_tokenizer_idempotent(text):
    toks = normalize_and_tokenize(text)
    assert normalize_and_tokenize(" ".join(toks)) == toks


@given(tweet_text)
@settings(max_examples=300, deadline=None)
def test_hashtag_round_trip(text):
    tw = Tweet.from_text("x", "e", text)
    assert all(h == h.lower() for h in tw.hashtags)
    for h in tw.hashtags:
        assert "#" + h in text.lower()


def test_load_counts_events(tmp_path):
    p = write_tsv(tmp_path / "c.tsv", [("1", "A", "any", "flood here"), ("2", "A", "train", "more rain"), ("3", "B", "val", "quake")])
    c = load_corpus(p)
    assert {e: len(v) for e, v in c.by_event.items()} == {"A": 2, "B": 1}
    assert [t.split for t in c.tweets] == ["any", "train", "val"]


def test_url_only_row_is_kept_as_placeholder(tmp_path):
    text = "https://t.co/abc123"
    p = write_tsv(tmp_path / "c.tsv", [("1", "A", "any", text)])
    c = load_corpus(p)
    assert c[0].tokens == tuple(normalize_and_tokenize(text)) == ("<url>",)


def test_empty_rows_are_skipped_and_counted(tmp_path):
    p = write_tsv(tmp_path / "c.tsv", [("1", "A", "any", "   "), ("2", "A", "any", "ok")])
    c = load_corpus(p)
    assert len(c) == 1 and c.skipped == 1


def test_malformed_row_names_line(tmp_path):
    p = write_tsv(tmp_path / "c.tsv", [("1", "A", "any", "ok"), ("2", "A", "too", "many", "cols")])
    with pytest.raises(CorpusError, match=":3:"):
        load_corpus(p)


def test_duplicate_id_rejected(tmp_path):
    p = write_tsv(tmp_path / "c.tsv", [("1", "A", "any", "ok"), ("1", "B", "any", "again")])
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(p)


def test_schema_with_missing_optional_columns(tmp_path):
    p = write_tsv(tmp_path / "cand.tsv", [("c1", "Help now"), ("c2", "Other")], header="tweet_id\tbody")
    c = load_corpus(p, {"id": "tweet_id", "text": "body", "event_id": None, "split": None})
    assert [t.event_id for t in c.tweets] == ["none", "none"]
    assert c[0].tokens == ("help", "now")


def test_index_consistency():
    c = generate_synthetic_corpus(SyntheticSpec(n_events=3, tweets_per_event=40, anchor_hashtag_prob=0.5, seed=3))
    buckets = [set(v.tolist()) for v in c.by_event.values()]
    assert set().union(*buckets) == set(range(len(c)))
    assert sum(map(len, buckets)) == len(c)
    for (event, tag), idx in c.by_event_hashtag.items():
        for i in idx:
            assert c[i].event_id == event and tag in c[i].hashtags
    for i, tw in enumerate(c.tweets):
        for tag in tw.hashtags:
            assert i in c.by_event_hashtag[(tw.event_id, tag)]


def corpus_of(*token_lists):
    return Corpus(Tweet.from_text(str(i), "e", " ".join(t)) for i, t in enumerate(token_lists))


def test_vocabulary_threshold():
    c = corpus_of(["a", "a", "b"], ["a"])
    v = build_vocabulary(c, min_freq=2)
    assert dict(v.token_to_id) == {PAD: 0, UNK: 1, "a": 2}
    assert build_vocabulary(c, min_freq=1).size == 4


def test_vocabulary_tie_break_and_density():
    c = corpus_of(["zeta", "beta", "beta", "zeta", "alpha"])
    v = build_vocabulary(c, min_freq=1)
    assert v.token_to_id["beta"] < v.token_to_id["zeta"] < v.token_to_id["alpha"]
    assert sorted(v.token_to_id.values()) == list(range(v.size))
    assert v.encode(["beta", "unseen"]).tolist() == [2, 1]


def test_vocabulary_cap():
    c = corpus_of(["a", "a", "b", "b", "c"])
    assert build_vocabulary(c, min_freq=1, max_size=3).tokens() == [PAD, UNK, "a"]


def test_synthetic_counts_and_determinism():
    spec = SyntheticSpec(n_events=2, tweets_per_event=100, seed=11)
    a, b = generate_synthetic_corpus(spec), generate_synthetic_corpus(spec)
    assert sorted(len(v) for v in a.by_event.values()) == [100, 100]
    assert [t.tokens for t in a.tweets] == [t.tokens for t in b.tweets]


def test_synthetic_pure_topic():
    c = generate_synthetic_corpus(SyntheticSpec(n_events=2, tweets_per_event=50, topic_token_prob=1.0, seed=1))
    assert not any(tok.startswith("s") for tw in c.tweets for tok in tw.tokens)


def test_synthetic_topic_vocabularies_disjoint():
    spec = SyntheticSpec(n_events=3, tweets_per_event=60, topic_token_prob=0.6, seed=2)
    c = generate_synthetic_corpus(spec)
    topic = {e: {t for i in c.by_event[e] for t in c[i].tokens if t.startswith(e + "w")} for e in c.by_event}
    events = list(topic)
    for i in range(len(events)):
        for j in range(i + 1, len(events)):
            assert not topic[events[i]] & topic[events[j]]


def test_synthetic_anchor_fraction_and_splits():
    spec = SyntheticSpec(n_events=4, tweets_per_event=400, anchor_hashtag_prob=0.3, val_events=2, seed=5)
    c = generate_synthetic_corpus(spec)
    for k in range(4):
        frac = len(c.by_event_hashtag[(spec.event_id(k), spec.anchor(k))]) / 400
        assert 0.22 < frac < 0.38
    assert {t.split for t in c.tweets if t.event_id in ("ev0", "ev1")} == {"train"}
    assert {t.split for t in c.tweets if t.event_id in ("ev2", "ev3")} == {"val"}
    assert len(c.select("val")) == 800


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(topic_token_prob=1.5)
    with pytest.raises(ValueError):
        SyntheticSpec(min_len=0)


def test_write_load_round_trip(tmp_path):
    c = generate_synthetic_corpus(SyntheticSpec(n_events=2, tweets_per_event=20, val_events=1, seed=4))
    write_corpus(c, tmp_path / "s.tsv")
    d = load_corpus(tmp_path / "s.tsv")
    assert [(t.id, t.event_id, t.split, t.tokens, t.hashtags) for t in c.tweets] == [
        (t.id, t.event_id, t.split, t.tokens, t.hashtags) for t in d.tweets
    ]


def test_anchor_map_round_trip(tmp_path):
    write_anchor_map({"pablo": "pabloph", "haze": "sghaze"}, tmp_path / "a.tsv")
    assert load_anchor_map(tmp_path / "a.tsv") == {"pablo": "pabloph", "haze": "sghaze"}
    (tmp_path / "b.tsv").write_text("x\t#PrayForBoston\n")
    assert load_anchor_map(tmp_path / "b.tsv") == {"x": "prayforboston"}


CRISISLEX = os.environ.get("FEWSHOT_CRISISLEX_TSV")


@pytest.mark.skipif(not CRISISLEX, reason="hydrated CrisisLexT26 export not supplied")
def test_crisislex_pablo_hashtag_count():
    # published count: #PabloPH appears in 453 of the 1001 Typhoon Pablo tweets
    c = load_corpus(CRISISLEX)
    event = next(e for e in c.by_event if "pablo" in e.lower())
    assert len(c.by_event_hashtag[(event, "pabloph")]) == 453


def test_merge_keeps_shared_tweets_once():
    c = corpus_of(["a", "b"], ["c"])
    assert len(c.merge(c)) == 2
    clash = Corpus([Tweet.from_text("0", "e", "different words")])
    with pytest.raises(CorpusError, match="duplicate"):
        c.merge(clash)
