"""Training, evaluation, k-shot sweeps, checkpoints and candidate scoring."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import numeric as nm
from .checkpoint import Checkpoint, CheckpointError, read_checkpoint, write_checkpoint
from .config import TrainConfig
from .corpus import Corpus, Tweet, Vocabulary, build_vocabulary, load_anchor_map, load_corpus
from .encoder import EncoderConfig, EncoderParams, encode_batch, init_encoder
from .episodes import EVENT_VS_ALL, EVENT_VS_EVENT, Episode, EpisodeSampler, SamplerConfig, strip_anchor_hashtag
from .heads import ClassScores, EpisodeResult, HeadKind, episode_forward, head_forward
from .metrics import Confusion, MetricReport, SeedRow, aggregate_seeds, write_aggregate_csv, write_results_csv

log = logging.getLogger(__name__)

# validation stream seed = training seed XOR this
VAL_SEED_XOR = 0x5EED_F00D


class ConfigurationError(ValueError):
    pass


@dataclass
class ExperimentData:
    """Corpora split into training and validation roles plus the shared vocabulary."""

    train_pos: Corpus
    train_neg: Corpus | None
    val_pos: Corpus
    val_neg: Corpus | None
    vocab: Vocabulary
    anchors: dict[str, str]

    @classmethod
    def from_corpora(
        cls,
        config: TrainConfig,
        corpus: Corpus,
        negatives: Corpus | None = None,
        val_corpus: Corpus | None = None,
        val_negatives: Corpus | None = None,
        anchors: dict[str, str] | None = None,
    ) -> "ExperimentData":
        """Assemble roles from in-memory corpora.

        Positives for training come from ``corpus`` (split ``train``) and for
        validation from ``val_corpus`` or ``corpus`` (split ``val``).
        Event-vs-all training negatives are the other training events plus
        ``negatives`` (split ``train``), so every event also appears as a
        negative. Validation negatives come from ``val_negatives`` or
        ``negatives`` alone (split ``val``), falling back to other validation
        events only when no negative corpus exists. The vocabulary covers
        every supplied corpus.
        """
        anchors = dict(anchors or {})
        val_src = val_corpus if val_corpus is not None else corpus
        val_neg_src = val_negatives if val_negatives is not None else negatives
        train_pos = corpus.select("train")
        val_pos = val_src.select("val")
        if config.regime == EVENT_VS_EVENT:
            train_neg = val_neg = None
        else:
            train_neg = train_pos.merge(negatives.select("train")) if negatives is not None else train_pos
            val_neg = val_neg_src.select("val") if val_neg_src is not None else val_pos
        sources = [c for c in (corpus, negatives, val_corpus, val_negatives) if c is not None]
        vocab = build_vocabulary(sources, config.min_freq, config.max_vocab or None)
        return cls(train_pos, train_neg, val_pos, val_neg, vocab, anchors)

    @classmethod
    def load(cls, config: TrainConfig) -> "ExperimentData":
        if not config.train_corpus:
            raise ConfigurationError("train_corpus is not set")
        cache: dict[str, Corpus] = {}

        def get(path: str) -> Corpus | None:
            if not path:
                return None
            if path not in cache:
                cache[path] = load_corpus(path)
                if cache[path].skipped:
                    log.info("%s: skipped %d rows with empty text", path, cache[path].skipped)
            return cache[path]

        anchors = load_anchor_map(config.anchor_map) if config.anchor_map else {}
        if config.regime == EVENT_VS_EVENT and not anchors:
            raise ConfigurationError("event-vs-event regime needs an anchor_map file")
        return cls.from_corpora(
            config,
            get(config.train_corpus),
            get(config.train_negatives),
            get(config.val_corpus),
            get(config.val_negatives),
            anchors,
        )

    def sampler(self, config: TrainConfig, split: str, seed: int = 0) -> EpisodeSampler:
        sc = SamplerConfig(
            regime=config.regime,
            k_shot=config.k_shot,
            one_way=config.head_kind.one_way,
            pos_query_prob=config.pos_query_prob,
            anchor_map=self.anchors,
            seed=seed,
        )
        pos, neg = (self.train_pos, self.train_neg) if split == "train" else (self.val_pos, self.val_neg)
        s = EpisodeSampler(pos, sc, neg)
        if not s.events:
            raise ConfigurationError(
                f"no {split} event satisfies the {config.regime} preconditions for k={config.k_shot}"
            )
        return s


class FewShotModel:
    """A trained (or freshly initialized) encoder bound to a head and vocabulary."""

    def __init__(self, params: EncoderParams, encoder_config: EncoderConfig, vocab: Vocabulary, head: HeadKind | str):
        self.params = params
        self.encoder_config = encoder_config
        self.vocab = vocab
        self.head = HeadKind.parse(head)

    def ids(self, tokens: Sequence[str]) -> np.ndarray:
        return self.vocab.encode(tokens)

    def episode_forward(
        self, episode: Episode, training: bool = False, rng: np.random.Generator | None = None
    ) -> EpisodeResult:
        return episode_forward(
            self.params,
            self.encoder_config,
            self.head,
            [self.ids(t.tokens) for t in episode.pos_supports],
            [self.ids(t.tokens) for t in episode.neg_supports],
            self.ids(episode.query.tokens),
            episode.query_label,
            training,
            rng,
        )

    def embed(self, token_seqs: Sequence[Sequence[str]], batch: int = 256) -> np.ndarray:
        """Inference-mode embeddings, ``[N, output_dim]``."""
        out = []
        for i in range(0, len(token_seqs), batch):
            emb, _ = encode_batch(
                self.params, self.encoder_config, [self.ids(t) for t in token_seqs[i:i + batch]], training=False
            )
            out.append(emb)
        if not out:
            return np.zeros((0, self.encoder_config.output_dim), dtype=self.params.embedding.value.dtype)
        return np.concatenate(out, axis=0)


def _streams(seed: int):
    init, episodes, drop = np.random.SeedSequence(seed).spawn(3)
    return (
        int(init.generate_state(1)[0]),
        np.random.default_rng(episodes),
        np.random.default_rng(drop),
    )


def train(
    config: TrainConfig,
    seed: int,
    data: ExperimentData | None = None,
    progress: Callable[[int, int, float], None] | None = None,
) -> tuple[FewShotModel, list[float]]:
    """Episodic training with one Adam step per episode.

    Episodes are resampled every epoch from the seeded stream. Returns the
    model and the mean training loss of each epoch.
    """
    data = data if data is not None else ExperimentData.load(config)
    init_seed, ep_rng, drop_rng = _streams(seed)
    enc_cfg = config.encoder_config(data.vocab.size, init_seed)
    model = FewShotModel(init_encoder(enc_cfg), enc_cfg, data.vocab, config.head_kind)
    params = model.params.parameters()
    state = nm.AdamState.for_params(params, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
    sampler = data.sampler(config, "train", seed)
    curve = []
    for epoch in range(config.epochs):
        total = 0.0
        for ep in sampler.episodes(config.episodes_per_epoch, ep_rng):
            res = model.episode_forward(ep, training=True, rng=drop_rng)
            res.backward()
            nm.adam_step(params, state)
            total += res.loss
        curve.append(total / config.episodes_per_epoch)
        if not np.isfinite(curve[-1]):
            raise FloatingPointError(f"training diverged in epoch {epoch}")
        if progress is not None:
            progress(epoch, config.epochs, curve[-1])
        log.debug("seed %d epoch %d loss %.4f", seed, epoch, curve[-1])
    return model, curve


def validation_episodes(config: TrainConfig, data: ExperimentData, seed: int) -> list[Episode]:
    rng = np.random.default_rng(seed ^ VAL_SEED_XOR)
    return data.sampler(config, "val", seed).episodes(config.val_episodes, rng)


def predict(model: FewShotModel, episodes: Iterable[Episode]) -> list[tuple[bool, bool, ClassScores]]:
    """``(label, prediction, scores)`` per episode, inference mode."""
    out = []
    for ep in episodes:
        res = model.episode_forward(ep, training=False)
        out.append((ep.query_label, res.prediction, res.scores))
    return out


def evaluate(model: FewShotModel, config: TrainConfig, episodes: Sequence[Episode], seed: int = 0) -> MetricReport:
    """Pool predictions over ``episodes`` into one seed row (event class positive)."""
    if not episodes:
        raise ValueError("cannot evaluate on an empty episode set")
    preds = predict(model, episodes)
    conf = Confusion.from_predictions([p[0] for p in preds], [p[1] for p in preds])
    return MetricReport(config.head, config.regime, config.k_shot, config.fingerprint(), [SeedRow(seed, conf)])


def run_seed(config: TrainConfig, seed: int, data: ExperimentData | None = None) -> tuple[FewShotModel, MetricReport]:
    data = data if data is not None else ExperimentData.load(config)
    model, _ = train(config, seed, data)
    return model, evaluate(model, config, validation_episodes(config, data, seed), seed)


def run_config(config: TrainConfig, data: ExperimentData | None = None) -> MetricReport:
    data = data if data is not None else ExperimentData.load(config)
    return aggregate_seeds([run_seed(config, s, data)[1] for s in config.seeds])


def k_shot_sweep(
    config: TrainConfig,
    k_values: Sequence[int],
    heads: Sequence[str] = tuple(h.value for h in HeadKind),
    data: ExperimentData | None = None,
    out_dir: str | Path | None = None,
) -> list[MetricReport]:
    """Train and evaluate every (head, k, seed); one aggregated report per (head, k).

    With ``out_dir`` the per-seed rows go to ``results.csv`` and the
    aggregates to ``aggregated.csv``.
    """
    data = data if data is not None else ExperimentData.load(config)
    reports = []
    for head in heads:
        for k in k_values:
            cfg = config.replace(head=head, k_shot=k)
            log.info("sweep: head=%s k=%d", cfg.head, k)
            reports.append(run_config(cfg, data))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(reports, out / "results.csv")
        write_aggregate_csv(reports, out / "aggregated.csv")
    return reports


# -- checkpoints ---------------------------------------------------------------

def save_checkpoint(model: FewShotModel, config: TrainConfig, path: str | Path, seed: int = 0) -> None:
    ec = model.encoder_config
    text = (
        config.to_text()
        + "[model]\n"
        + f"head = {model.head.value}\nseed = {seed}\nencoder_seed = {ec.seed}\n"
        + "[vocab]\n"
        + "\n".join(model.vocab.tokens())
        + "\n"
    )
    write_checkpoint(path, text, {p.name: p.value for p in model.params.parameters()})


def load_checkpoint(path: str | Path) -> Checkpoint:
    return read_checkpoint(path)


def model_from_checkpoint(ckpt: Checkpoint | str | Path) -> tuple[FewShotModel, TrainConfig]:
    if not isinstance(ckpt, Checkpoint):
        ckpt = read_checkpoint(ckpt)
    sec = ckpt.sections()
    for name in ("model", "vocab"):
        if name not in sec:
            raise CheckpointError(f"corrupt header: missing [{name}] section")
    config = TrainConfig.from_text("\n".join(sec["config"]))
    meta = dict((s.strip() for s in line.split("=", 1)) for line in sec["model"])
    vocab = Vocabulary.from_tokens(sec["vocab"])
    enc_cfg = config.encoder_config(vocab.size, int(meta.get("encoder_seed", 0)))
    params = init_encoder(enc_cfg)
    for p in params.parameters():
        if p.name not in ckpt.tensors:
            raise CheckpointError(f"size mismatch: tensor {p.name!r} missing")
        t = ckpt.tensors[p.name]
        if t.shape != p.shape:
            raise CheckpointError(f"size mismatch: {p.name} has shape {t.shape}, expected {p.shape}")
        p.value = t.copy()
    return FewShotModel(params, enc_cfg, vocab, meta.get("head", config.head)), config


# -- triage scoring ------------------------------------------------------------

@dataclass(frozen=True)
class ScoredCandidate:
    id: str
    p_pos: float
    label: bool


def score_candidates(
    model: FewShotModel,
    supports: Sequence[Tweet],
    candidates: Sequence[Tweet],
    negatives: Sequence[Tweet] = (),
    strip_hashtag: str | None = None,
) -> list[ScoredCandidate]:
    """Rank ``candidates`` by the probability of belonging to the supports' event.

    Supports (and negatives) are encoded once. Two-way heads need a
    non-empty negative support set; ``strip_hashtag`` removes an anchor
    hashtag from every support first. Sorted by descending ``p_pos``, then id.
    """
    if not supports:
        raise ValueError("need at least one positive support tweet")
    if model.head.one_way:
        negatives = ()
    elif not negatives:
        raise ValueError(f"the {model.head.value} head needs a negative support file")

    def toks(tw: Tweet):
        return strip_anchor_hashtag(tw.tokens, strip_hashtag) if strip_hashtag else tw.tokens

    pos = model.embed([toks(t) for t in supports])
    neg = model.embed([toks(t) for t in negatives])
    cand = model.embed([t.tokens for t in candidates])
    out = []
    for tw, q in zip(candidates, cand):
        scores, _, _ = head_forward(model.head, pos, neg, q, balanced=False)
        out.append(ScoredCandidate(tw.id, scores.p_pos, scores.prediction))
    out.sort(key=lambda s: (-s.p_pos, s.id))
    return out


def write_scores(scored: Iterable[ScoredCandidate], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\tp_pos\tlabel\n")
        for s in scored:
            fh.write(f"{s.id}\t{s.p_pos!r}\t{'positive' if s.label else 'negative'}\n")
