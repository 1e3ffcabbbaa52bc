"""Command line entry point: ``synth``, ``train``, ``eval``, ``sweep`` and ``score``.

Configuration is layered: a named profile (``--profile``), then an optional
``--config`` file of ``key = value`` lines, then individual flags, each of
which mirrors one :class:`TrainConfig` field (``--k-shot 5``, ``--seeds 0,1``).
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import benchmarks
from .config import DEFAULT_K_VALUES, PROFILES, TrainConfig, coerce
from .corpus import CorpusError, load_corpus, write_anchor_map, write_corpus
from .episodes import SamplingError
from .harness import (
    ConfigurationError,
    ExperimentData,
    evaluate,
    k_shot_sweep,
    model_from_checkpoint,
    save_checkpoint,
    score_candidates,
    train,
    validation_episodes,
    write_scores,
)
from .checkpoint import CheckpointError
from .heads import HeadError, HeadKind
from .metrics import write_results_csv

log = logging.getLogger("fewshot_crisis")

CHECKPOINT_NAME = "model.fstc"


class UsageError(Exception):
    pass


# -- configuration -------------------------------------------------------------

def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk", help="base settings (default: desk)")
    p.add_argument("--config", metavar="FILE", help="key = value file applied on top of the profile")
    g = p.add_argument_group("config fields (override --profile and --config)")
    for f in fields(TrainConfig):
        g.add_argument(_flag(f.name), dest=f"cfg_{f.name}", metavar=f.name.upper(), default=None)


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    cfg = PROFILES[args.profile]
    if args.config:
        cfg = TrainConfig.from_file(args.config, base=cfg)
    overrides = {}
    for f in fields(TrainConfig):
        raw = getattr(args, f"cfg_{f.name}", None)
        if raw is not None:
            overrides[f.name] = coerce(f.name, raw)
    return cfg.replace(**overrides) if overrides else cfg


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    setup = benchmarks.SETUPS[args.setup](seed=args.seed)
    out = _out_dir(args.out)
    write_corpus(setup.corpus, out / "corpus.tsv")
    write_anchor_map(setup.anchors, out / "anchors.tsv")
    lines = [
        f"train_corpus = {out / 'corpus.tsv'}",
        f"anchor_map = {out / 'anchors.tsv'}",
    ]
    if setup.negatives is not None:
        write_corpus(setup.negatives, out / "negatives.tsv")
        lines.append(f"train_negatives = {out / 'negatives.tsv'}")
    (out / "data.cfg").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {setup.name} corpus ({len(setup.corpus)} event tweets) to {out}")
    return 0


def _progress(epoch: int, total: int, loss: float) -> None:
    log.info("epoch %d/%d  mean loss %.4f", epoch + 1, total, loss)


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    seed = cfg.seeds[0] if args.seed is None else args.seed
    model, curve = train(cfg, seed, progress=_progress)
    out = _out_dir(args.out)
    save_checkpoint(model, cfg, out / CHECKPOINT_NAME, seed)
    with open(out / "curve.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for i, loss in enumerate(curve):
            w.writerow([i, f"{loss:.6f}"])
    print(f"saved {out / CHECKPOINT_NAME}; final epoch loss {curve[-1]:.4f}")
    return 0


def cmd_eval(args) -> int:
    model, saved = model_from_checkpoint(args.checkpoint)
    # data paths and episode counts may be overridden, the model shape may not
    overrides = {}
    for f in fields(TrainConfig):
        raw = getattr(args, f"cfg_{f.name}", None)
        if raw is not None:
            overrides[f.name] = coerce(f.name, raw)
    cfg = saved.replace(**overrides)
    seed = cfg.seeds[0] if args.seed is None else args.seed
    data = ExperimentData.load(cfg)
    report = evaluate(model, cfg, validation_episodes(cfg, data, seed), seed)
    row = report.rows[0].confusion
    print(
        f"{cfg.head} {cfg.regime} k={cfg.k_shot} seed={seed}: "
        f"P={row.precision:.4f} R={row.recall:.4f} F1={row.f1:.4f} acc={row.accuracy:.4f}"
    )
    if args.out:
        write_results_csv([report], _out_dir(args.out) / "results.csv")
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    k_values = [int(k) for k in args.k_values.split(",")]
    heads = [HeadKind.parse(h).value for h in args.heads.split(",")]
    reports = k_shot_sweep(cfg, k_values, heads, out_dir=args.out)
    for rep in reports:
        print(f"{rep.head:20s} k={rep.k:<3d} F1 {rep.mean('f1'):.4f} +/- {rep.std('f1'):.4f}")
    return 0


def load_tweets(path: str):
    """Load a TSV that has at least ``id`` and ``text`` columns."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
    schema = {name: (name if name in header else None) for name in ("id", "event_id", "split", "text")}
    return load_corpus(path, schema).tweets


def cmd_score(args) -> int:
    model, _ = model_from_checkpoint(args.checkpoint)
    if args.head:
        model.head = HeadKind.parse(args.head)
    if not model.head.one_way and not args.negatives:
        raise UsageError(f"the {model.head.value} head needs --negatives")
    supports = load_tweets(args.supports)
    negatives = load_tweets(args.negatives) if args.negatives else []
    candidates = load_tweets(args.candidates)
    scored = score_candidates(model, supports, candidates, negatives, strip_hashtag=args.strip_hashtag)
    if args.out:
        write_scores(scored, args.out)
    else:
        sys.stdout.write("id\tp_pos\tlabel\n")
        for s in scored:
            sys.stdout.write(f"{s.id}\t{s.p_pos!r}\t{'positive' if s.label else 'negative'}\n")
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fewshot-crisis", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic corpus, anchor map and data config")
    p.add_argument("--setup", choices=sorted(benchmarks.SETUPS), default="separable")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one seed and save a checkpoint")
    add_config_flags(p)
    p.add_argument("--seed", type=int, default=None, help="default: first of the config seeds")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on validation episodes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", metavar="DIR")
    g = p.add_argument_group("config fields (override the checkpoint's)")
    for f in fields(TrainConfig):
        g.add_argument(_flag(f.name), dest=f"cfg_{f.name}", metavar=f.name.upper(), default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train and evaluate every (head, k, seed)")
    add_config_flags(p)
    p.add_argument("--k-values", default=",".join(map(str, DEFAULT_K_VALUES)))
    p.add_argument("--heads", default=",".join(h.value for h in HeadKind))
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="rank candidate tweets against support tweets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--supports", required=True, metavar="TSV")
    p.add_argument("--candidates", required=True, metavar="TSV")
    p.add_argument("--negatives", metavar="TSV", help="negative supports, required by two-way heads")
    p.add_argument("--head", help="override the checkpoint's head kind")
    p.add_argument("--strip-hashtag", metavar="TAG", help="remove this hashtag from supports first")
    p.add_argument("--out", metavar="TSV", help="default: stdout")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConfigurationError, CorpusError, CheckpointError, SamplingError, HeadError, KeyError, ValueError, OSError) as exc:
        print(f"fewshot-crisis: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
