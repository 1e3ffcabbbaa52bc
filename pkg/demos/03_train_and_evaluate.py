"""
Training an encoder episodically
================================

Two synthetic events are used for training and two unseen events for
validation. A prototypical head with ten supports per class learns to tell
tweets about the same event apart from tweets about other events.
"""

import time

from fewshot_crisis import benchmarks
from fewshot_crisis.config import DESK
from fewshot_crisis.harness import ExperimentData, evaluate, train, validation_episodes

setup = benchmarks.separable_setup()
cfg = DESK.replace(head="prototypical", k_shot=10)
data = ExperimentData.from_corpora(cfg, setup.corpus, setup.negatives, anchors=setup.anchors)
print("vocabulary size:", data.vocab.size)
print("training events:", data.train_pos.events, "validation events:", data.val_pos.events)

t0 = time.time()
model, curve = train(cfg, seed=0, data=data, progress=lambda e, n, loss: print(f"epoch {e + 1}/{n} loss {loss:.4f}"))
print(f"trained in {time.time() - t0:.0f}s")

###############################################################################
# Validation episodes come from a stream seeded independently of training.

report = evaluate(model, cfg, validation_episodes(cfg, data, seed=0), seed=0)
print(report.rows[0].confusion, {k: round(v, 4) for k, v in report.rows[0].confusion.as_dict().items()})
