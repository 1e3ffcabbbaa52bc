"""
When does the one-way head pay off?
===================================

With wide, heterogeneous negatives a single negative support says little
about "everything else". The one-way head does not need one: its negative
class is the origin. With ten supports the two-way prototypical head catches
up and overtakes it. This runs a small k-shot sweep (a few minutes on one
core) and prints mean F1 per head and k.
"""

from fewshot_crisis import benchmarks
from fewshot_crisis.config import DESK
from fewshot_crisis.harness import ExperimentData, k_shot_sweep

setup = benchmarks.heterogeneous_setup()
cfg = DESK.replace(seeds=(0, 1))
data = ExperimentData.from_corpora(cfg, setup.corpus, setup.negatives, anchors=setup.anchors)
reports = k_shot_sweep(cfg, [1, 10], heads=["oneway_prototypical", "prototypical"], data=data)

print(f"{'head':22s} {'k':>3s} {'F1':>7s}")
for rep in reports:
    print(f"{rep.head:22s} {rep.k:3d} {rep.mean('f1'):7.4f}")
