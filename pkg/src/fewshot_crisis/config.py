"""Experiment configuration and its ``key = value`` text form."""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields, replace

from .encoder import EncoderConfig
from .episodes import EVENT_VS_ALL, REGIMES
from .heads import HeadKind

FULL_EPOCHS = 20
FULL_EPISODES = 12_800
FULL_VAL_EPISODES = 6_400
FULL_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_K_VALUES = (1, 2, 3, 5, 10)


@dataclass(frozen=True)
class TrainConfig:
    head: str = HeadKind.PROTOTYPICAL.value
    regime: str = EVENT_VS_ALL
    k_shot: int = 10
    epochs: int = FULL_EPOCHS
    episodes_per_epoch: int = FULL_EPISODES
    val_episodes: int = FULL_VAL_EPISODES
    seeds: tuple[int, ...] = FULL_SEEDS
    pos_query_prob: float = 0.5
    # encoder
    embed_dim: int = 300
    widths: tuple[int, ...] = (3, 4, 5)
    feature_maps: int = 100
    dropout: float = 0.5
    max_len: int = 40
    min_freq: int = 2
    max_vocab: int = 0
    # optimizer
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # data; empty means "not given"
    train_corpus: str = ""
    val_corpus: str = ""
    train_negatives: str = ""
    val_negatives: str = ""
    anchor_map: str = ""

    def __post_init__(self):
        object.__setattr__(self, "head", HeadKind.parse(self.head).value)
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        for name in ("k_shot", "epochs", "episodes_per_epoch", "val_episodes", "min_freq"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be a non-empty list of distinct integers")

    @property
    def head_kind(self) -> HeadKind:
        return HeadKind(self.head)

    def encoder_config(self, vocab_size: int, seed: int = 0) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim,
            widths=self.widths,
            feature_maps=self.feature_maps,
            dropout=self.dropout,
            max_len=self.max_len,
            seed=seed,
        )

    def replace(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "TrainConfig | None" = None) -> "TrainConfig":
        return (base or cls()).replace(**parse_kv(text))

    @classmethod
    def from_file(cls, path, base: "TrainConfig | None" = None) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), base)

    def fingerprint(self) -> str:
        """Hash of everything except the seed list."""
        text = self.replace(seeds=(0,)).to_text()
        return hashlib.sha256(text.encode()).hexdigest()[:12]


_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def coerce(name: str, raw: str):
    if name not in _TYPES:
        raise KeyError(f"unknown config key {name!r}")
    kind = _TYPES[name]
    raw = raw.strip()
    if kind.startswith("tuple"):
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_kv(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce(key, value)
    return out


# Small encoder and short schedule that fits CPU-only CI.
DESK = TrainConfig(
    epochs=2,
    episodes_per_epoch=2_000,
    val_episodes=1_000,
    seeds=(0, 1, 2),
    embed_dim=32,
    feature_maps=32,
    max_len=24,
    max_vocab=5_000,
)
FULL = TrainConfig()
PROFILES = {"full": FULL, "desk": DESK}
