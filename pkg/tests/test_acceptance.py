"""Acceptance suite: each test checks one criterion at its stated tolerance and
records a PASS/FAIL/SKIP line that is printed in the terminal summary."""
import math
import os
import time

import numpy as np
import pytest

from fewshot_crisis import benchmarks
from fewshot_crisis.cli import main as cli_main
from fewshot_crisis.config import DESK, FULL, TrainConfig
from fewshot_crisis.corpus import SyntheticSpec, generate_synthetic_corpus
from fewshot_crisis.episodes import EVENT_VS_EVENT, SamplerConfig, build_episode_set
from fewshot_crisis.harness import ExperimentData, run_config
from fewshot_crisis.heads import matching_head, oneway_head, proto_head

from probes import episode_gradient_error

HEADS = ("matching", "prototypical", "oneway")


# -- gradient fidelity -------------------------------------------------------------

def test_gradient_fidelity(verdict):
    t0 = time.perf_counter()
    worst = {h: max(episode_gradient_error(h, p) for p in range(20)) for h in HEADS}
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1e-4 for v in worst.values()) and elapsed < 60
    detail = ", ".join(f"{h} max rel err {v:.2e}" for h, v in worst.items())
    verdict("gradient fidelity (20 probes/head, eps 1e-3, <= 1e-4)", ok, f"{detail}; {elapsed:.1f}s")


# -- oracle equivalence --------------------------------------------------------------

def brute_matching(q, S, labels):
    num = den = 0.0
    for s, lab in zip(S, labels):
        w = math.exp(sum(a * b for a, b in zip(q, s)) / (math.sqrt(sum(a * a for a in q)) * math.sqrt(sum(b * b for b in s))))
        den += w
        num += w if lab else 0.0
    return num / den


def direct_proto(q, pp, pn):
    dp = sum((a - b) ** 2 for a, b in zip(q, pp))
    dn = sum((a - b) ** 2 for a, b in zip(q, pn))
    x = dp - dn
    return 1.0 / (1.0 + math.exp(x)) if x < 0 else math.exp(-x) / (1.0 + math.exp(-x))


def test_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 12))
        k = int(rng.integers(1, 6))
        scale = 10 ** rng.uniform(-1, 1)
        q = rng.normal(size=d) * scale
        S = rng.normal(size=(2 * k, d)) * scale
        labels = [True] * k + [False] * k
        pp, pn = S[:k].mean(axis=0), S[k:].mean(axis=0)
        worst = max(
            worst,
            abs(matching_head(q, S, labels).p_pos - brute_matching(q, S, labels)),
            abs(proto_head(q, pp, pn).p_pos - direct_proto(q, pp, pn)),
            abs(oneway_head(q, pp).p_pos - direct_proto(q, pp, np.zeros(d))),
        )
    elapsed = time.perf_counter() - t0
    verdict("oracle equivalence (1,000 random sets, 1e-9)", worst <= 1e-9 and elapsed < 60,
            f"max abs diff {worst:.2e}; {elapsed:.1f}s")


# -- sampler invariants ---------------------------------------------------------------

def test_sampler_invariants(verdict):
    t0 = time.perf_counter()
    spec = SyntheticSpec(n_events=5, tweets_per_event=200, anchor_hashtag_prob=0.4, topic_token_prob=0.5, seed=17)
    corpus = generate_synthetic_corpus(spec)
    anchors = spec.anchor_map()
    leaks = collisions = oneway_negs = 0
    for one_way in (False, True):
        cfg = SamplerConfig(regime=EVENT_VS_EVENT, k_shot=5, one_way=one_way, anchor_map=anchors, seed=3)
        for ep in build_episode_set(corpus, cfg, 10_000, rng=int(one_way)):
            tag = anchors[ep.event]
            leaks += sum(tag in t.tokens for t in ep.pos_supports + ep.neg_supports)
            leaks += int(ep.query_label and tag in ep.query.tokens)
            ids = ep.support_ids()
            collisions += int(ep.query.id in ids) + (len(ids) - len(set(ids)))
            if one_way:
                oneway_negs += len(ep.neg_supports)
    elapsed = time.perf_counter() - t0
    ok = leaks == 0 and collisions == 0 and oneway_negs == 0 and elapsed < 60
    verdict("sampler invariants (10,000 two-way + 10,000 one-way episodes)", ok,
            f"anchor leaks {leaks}, id collisions {collisions}, one-way negatives {oneway_negs}; {elapsed:.1f}s")


# -- invariance suite ---------------------------------------------------------------

def test_invariance_suite(verdict):
    rng = np.random.default_rng(5)
    scale_gap = trans_gap = 0.0
    for _ in range(200):
        d, k = int(rng.integers(2, 10)), int(rng.integers(1, 5))
        q, S = rng.normal(size=d), rng.normal(size=(2 * k, d))
        labels = [True] * k + [False] * k
        c = float(rng.uniform(0.1, 10))
        scale_gap = max(scale_gap, abs(matching_head(q, S, labels).p_pos - matching_head(c * q, c * S, labels).p_pos))
        t = rng.normal(size=d) * 5
        pp, pn = S[:k].mean(axis=0), S[k:].mean(axis=0)
        trans_gap = max(trans_gap, abs(proto_head(q, pp, pn).p_pos - proto_head(q + t, pp + t, pn + t).p_pos))
    # the one-way head is not translation invariant: the origin stays put
    a = oneway_head(np.array([1.0, 0.0]), np.array([1.0, 0.0])).p_pos
    b = oneway_head(np.array([11.0, 0.0]), np.array([11.0, 0.0])).p_pos
    ok = scale_gap <= 1e-12 and trans_gap <= 1e-9 and abs(a - b) > 0.2
    verdict("invariance suite", ok,
            f"matching scale gap {scale_gap:.1e}, proto translation gap {trans_gap:.1e}, "
            f"one-way p_pos {a:.4f} -> {b:.4f} under translation by (10,0)")


# -- synthetic learning ----------------------------------------------------------------

@pytest.mark.slow
def test_synthetic_learning(verdict):
    t0 = time.perf_counter()
    setup = benchmarks.separable_setup()
    cfg = DESK.replace(head="prototypical", regime="event-vs-all", k_shot=10, seeds=(0, 1, 2))
    data = ExperimentData.from_corpora(cfg, setup.corpus, setup.negatives, anchors=setup.anchors)
    rep = run_config(cfg, data)
    elapsed = time.perf_counter() - t0
    mean, std = rep.mean("f1"), rep.std("f1")
    ok = mean >= 0.95 and std <= 0.05 and elapsed <= 15 * 60
    verdict("synthetic learning (proto, k=10, desk profile, 3 seeds)", ok,
            f"F1 per seed {np.round(rep.values('f1'), 4).tolist()}, mean {mean:.4f}, std {std:.4f}; {elapsed:.0f}s")


# -- qualitative ordering --------------------------------------------------------------

@pytest.mark.slow
def test_qualitative_ordering(verdict):
    t0 = time.perf_counter()
    setup = benchmarks.heterogeneous_setup()
    base = DESK.replace(regime="event-vs-all", seeds=(0, 1, 2, 3, 4))
    data = ExperimentData.from_corpora(base, setup.corpus, setup.negatives, anchors=setup.anchors)
    f1 = {}
    for head in ("oneway", "prototypical"):
        for k in (1, 10):
            f1[head, k] = run_config(base.replace(head=head, k_shot=k), data).mean("f1")
    elapsed = time.perf_counter() - t0
    margin_k1 = f1["oneway", 1] - f1["prototypical", 1]
    gap_k10 = f1["prototypical", 10] - f1["oneway", 10]
    ok = margin_k1 >= 0.05 and gap_k10 >= -0.02
    verdict("qualitative ordering (heterogeneous negatives, 5 seeds)", ok,
            f"k=1 one-way {f1['oneway', 1]:.4f} vs proto {f1['prototypical', 1]:.4f} (margin {margin_k1:+.4f}); "
            f"k=10 proto {f1['prototypical', 10]:.4f} vs one-way {f1['oneway', 10]:.4f} (gap {gap_k10:+.4f}); {elapsed:.0f}s")


# -- determinism -------------------------------------------------------------------------

@pytest.mark.slow
def test_cli_determinism(verdict, tmp_path):
    assert cli_main(["synth", "--out", str(tmp_path / "data")]) == 0
    cfg = str(tmp_path / "data" / "data.cfg")
    for run in ("a", "b"):
        assert cli_main(["train", "--profile", "desk", "--config", cfg, "--seed", "0", "--out", str(tmp_path / run)]) == 0
    same_ckpt = (tmp_path / "a" / "model.fstc").read_bytes() == (tmp_path / "b" / "model.fstc").read_bytes()
    sweep = ["--profile", "desk", "--config", cfg, "--episodes-per-epoch", "200", "--val-episodes", "200",
             "--seeds", "0,1", "--k-values", "1,3"]
    for run in ("sa", "sb"):
        assert cli_main(["sweep", *sweep, "--out", str(tmp_path / run)]) == 0
    same_csv = all(
        (tmp_path / "sa" / f).read_bytes() == (tmp_path / "sb" / f).read_bytes()
        for f in ("aggregated.csv", "results.csv")
    )
    verdict("determinism (train checkpoints, sweep CSVs)", same_ckpt and same_csv,
            f"checkpoints identical: {same_ckpt}; sweep CSVs identical: {same_csv}")


# -- real data (conditional) -------------------------------------------------------------

REAL_CONFIG = os.environ.get("FEWSHOT_REAL_CONFIG")


@pytest.mark.slow
def test_real_data(verdict):
    name = "real-data check (event-vs-all, proto, k=10, full-scale, 5 seeds)"
    if not REAL_CONFIG:
        verdict(name, None, "set FEWSHOT_REAL_CONFIG to a config naming the hydrated corpora")
    cfg = TrainConfig.from_file(REAL_CONFIG, base=FULL).replace(
        head="prototypical", regime="event-vs-all", k_shot=10, seeds=FULL.seeds
    )
    rep = run_config(cfg)
    mean, std = rep.mean("f1"), rep.std("f1")
    verdict(name, 0.85 <= mean <= 0.95 and std <= 0.02, f"F1 mean {mean:.4f}, std {std:.4f}")
