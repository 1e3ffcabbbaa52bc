"""
From raw tweets to few-shot episodes
====================================

Tweets are normalized into tokens (URLs and mentions become placeholders,
hashtags lose their ``#``), grouped by event, and then cut into episodes:
``k`` positive supports, ``k`` negative supports and one query.
"""

import numpy as np

from fewshot_crisis.corpus import Corpus, SyntheticSpec, Tweet, generate_synthetic_corpus, normalize_and_tokenize
from fewshot_crisis.episodes import EVENT_VS_ALL, EVENT_VS_EVENT, SamplerConfig, build_episode_set

print(normalize_and_tokenize("Flooding on Main St!! #YYCflood @cityofcalgary http://t.co/x1"))

###############################################################################
# A hand-made corpus with two events. The anchor hashtag picks the positive
# supports for an event and is stripped from them so the model cannot
# simply learn the hashtag.

tweets = [
    Tweet.from_text("1", "flood", "River over the banks #yycflood"),
    Tweet.from_text("2", "flood", "#yycflood sandbags needed downtown"),
    Tweet.from_text("3", "flood", "evacuation centre open at the arena"),
    Tweet.from_text("4", "quake", "building shook for ten seconds #eqnz"),
    Tweet.from_text("5", "quake", "aftershock again, stay outside"),
    Tweet.from_text("6", "quake", "power out after the quake #eqnz"),
]
corpus = Corpus(tweets)
cfg = SamplerConfig(regime=EVENT_VS_EVENT, k_shot=2, anchor_map={"flood": "yycflood", "quake": "eqnz"})
for ep in build_episode_set(corpus, cfg, 3, rng=0):
    print(ep.event, [t.tokens for t in ep.pos_supports], "| query:", " ".join(ep.query.tokens), ep.query_label)

###############################################################################
# Synthetic corpora have known structure: every event owns a small topic
# vocabulary and shares a common one with all others.

spec = SyntheticSpec(n_events=3, tweets_per_event=100, topic_token_prob=0.7, seed=0)
syn = generate_synthetic_corpus(spec)
print(syn[0].raw_text)

# In event-vs-all episodes the negatives are drawn from everything that is
# not the event; a one-way sampler never draws negative supports at all.
one_way = SamplerConfig(regime=EVENT_VS_ALL, k_shot=5, one_way=True)
eps = build_episode_set(syn, one_way, 1000, rng=1, neg_corpus=syn)
print("positive query rate:", np.mean([e.query_label for e in eps]))
print("negative supports in one-way episodes:", sum(len(e.neg_supports) for e in eps))
