"""
Finding more event tweets from a handful of examples
====================================================

The envisioned use: an analyst has found a few tweets about an emerging
event through its hashtag and wants to rank an unlabelled stream by how
likely each tweet belongs to the same event, hashtag or not. A trained
encoder is saved to a checkpoint, reloaded, and used to score candidates.
"""

import tempfile
from pathlib import Path

from fewshot_crisis import benchmarks
from fewshot_crisis.config import DESK
from fewshot_crisis.harness import ExperimentData, model_from_checkpoint, save_checkpoint, score_candidates, train

setup = benchmarks.heterogeneous_setup()
cfg = DESK.replace(head="oneway", k_shot=5)
data = ExperimentData.from_corpora(cfg, setup.corpus, setup.negatives, anchors=setup.anchors)
model, _ = train(cfg, seed=0, data=data)

path = Path(tempfile.mkdtemp()) / "model.fstc"
save_checkpoint(model, cfg, path)
model, _ = model_from_checkpoint(path)

###############################################################################
# Supports: five tweets of a held-out event carrying its anchor hashtag.
# Candidates: that event's tweets without the hashtag mixed with everyday
# background tweets the model never saw during training.

event = data.val_pos.events[0]
tag = setup.anchors[event]
supports = [t for t in data.val_pos.tweets if t.event_id == event and tag in t.hashtags][:5]
candidates = [t for t in data.val_pos.tweets if t.event_id == event and tag not in t.hashtags][::10]
candidates += list(data.val_neg.tweets[::40])
ranked = score_candidates(model, supports, candidates, strip_hashtag=tag)

truth = {t.id: t.event_id == event for t in candidates}
top = ranked[: len(ranked) // 2]
print(f"{sum(truth[s.id] for s in top)}/{len(top)} of the top half belong to {event}")
for s in ranked[:5]:
    print(f"{s.id:10s} {s.p_pos:.3f} {'positive' if s.label else 'negative'}")
