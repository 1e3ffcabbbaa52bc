"""Kim-style convolutional sentence encoder shared by all few-shot heads.

Every sequence is truncated or PAD-padded to ``max_len`` before encoding, so
a tweet's embedding never depends on which other tweets share its batch.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np

from . import numeric as nm
from .corpus import PAD_ID


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    embed_dim: int = 300
    widths: tuple[int, ...] = (3, 4, 5)
    feature_maps: int = 100
    dropout: float = 0.5
    max_len: int = 40
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if list(self.widths) != sorted(self.widths) or not self.widths:
            raise ValueError("filter widths must be a non-empty ascending sequence")
        if min(self.vocab_size, self.embed_dim, self.feature_maps, self.widths[0]) < 1:
            raise ValueError("encoder sizes must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.max_len < self.widths[-1]:
            raise ValueError("max_len must be at least the largest filter width")

    @property
    def output_dim(self) -> int:
        return len(self.widths) * self.feature_maps

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class EncoderParams:
    """Embedding table plus one (filters, bias) pair per filter width."""

    def __init__(self, embedding: nm.Parameter, filters: list[nm.Parameter], biases: list[nm.Parameter]):
        self.embedding = embedding
        self.filters = filters
        self.biases = biases

    def parameters(self) -> list[nm.Parameter]:
        """All parameters in their declared (checkpoint) order."""
        out = [self.embedding]
        for f, b in zip(self.filters, self.biases):
            out += [f, b]
        return out

    def named(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}

    def astype(self, dtype) -> "EncoderParams":
        def cp(p):
            return nm.Parameter(p.value.astype(dtype), p.trainable, p.name)

        return EncoderParams(cp(self.embedding), [cp(f) for f in self.filters], [cp(b) for b in self.biases])

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


def init_encoder(
    config: EncoderConfig,
    dtype=np.float32,
    embeddings: np.ndarray | None = None,
) -> EncoderParams:
    """Random initialization; ``embeddings`` optionally supplies an external table."""
    rng = np.random.default_rng(config.seed)
    V, D, F = config.vocab_size, config.embed_dim, config.feature_maps
    if embeddings is not None:
        if embeddings.shape != (V, D):
            raise nm.ShapeError(f"external embedding table must be {(V, D)}, got {embeddings.shape}")
        table = np.array(embeddings, dtype=np.float64)
    else:
        table = rng.uniform(-0.25, 0.25, size=(V, D))
    table[PAD_ID] = 0.0
    filters, biases = [], []
    for w in config.widths:
        # Glorot-uniform: fan_in = w*D, fan_out = F
        s = np.sqrt(6.0 / (w * D + F))
        filters.append(nm.Parameter(rng.uniform(-s, s, size=(w, D, F)).astype(dtype), name=f"conv{w}.filters"))
        biases.append(nm.Parameter(np.zeros(F, dtype=dtype), name=f"conv{w}.bias"))
    emb = nm.Parameter(table.astype(dtype), name="embedding")
    return EncoderParams(emb, filters, biases)


def pad_ids(seqs: Sequence[Sequence[int]], config: EncoderConfig) -> np.ndarray:
    """Truncate/pad every id sequence to ``config.max_len``; returns ``[N, max_len]``."""
    out = np.full((len(seqs), config.max_len), PAD_ID, dtype=np.int64)
    for i, s in enumerate(seqs):
        if len(s) == 0:
            raise nm.ShapeError("cannot encode an empty token sequence")
        s = np.asarray(s[: config.max_len], dtype=np.int64)
        out[i, : len(s)] = s
    return out


def encode_batch(
    params: EncoderParams,
    config: EncoderConfig,
    seqs: Sequence[Sequence[int]],
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, Callable[[np.ndarray], None]]:
    """Encode ``N`` id sequences into ``[N, output_dim]`` embeddings.

    The returned closure takes the gradient w.r.t. the embeddings and
    accumulates parameter gradients (the PAD row stays at zero).
    """
    ids = pad_ids(seqs, config)
    x = nm.embedding_lookup(params.embedding, ids)  # [N, L, D]
    pooled, cache = [], []
    for filt, bias in zip(params.filters, params.biases):
        pre = nm.conv1d_valid(x, filt.value, bias.value)  # [N, L-w+1, F]
        act = nm.relu(pre)
        m, arg = nm.max_over_time(act)
        pooled.append(m)
        cache.append((pre, arg))
    h = np.concatenate(pooled, axis=-1)
    out, mask = nm.dropout(h, config.dropout, training, rng)

    def backward(grad_out: np.ndarray) -> None:
        g = nm.dropout_backward(mask, np.asarray(grad_out, dtype=h.dtype))
        F = config.feature_maps
        d_x = np.zeros_like(x)
        for j, (filt, bias) in enumerate(zip(params.filters, params.biases)):
            pre, arg = cache[j]
            g_act = nm.max_over_time_backward(arg, pre.shape[-2], g[..., j * F:(j + 1) * F])
            g_pre = nm.relu_backward(pre, g_act)
            dx, dw, db = nm.conv1d_valid_backward(x, filt.value, g_pre)
            filt.grad += dw
            bias.grad += db
            d_x += dx
        nm.embedding_backward(params.embedding, ids, d_x)
        params.embedding.grad[PAD_ID] = 0

    return out, backward


def encode(
    params: EncoderParams,
    config: EncoderConfig,
    ids: Sequence[int],
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, Callable[[np.ndarray], None]]:
    """Single-sequence form of ``encode_batch``; returns a ``[output_dim]`` vector."""
    out, backward = encode_batch(params, config, [ids], training, rng)
    return out[0], lambda g: backward(np.asarray(g)[None, :])


def activation_signature(params: EncoderParams, config: EncoderConfig, seqs) -> tuple:
    """Pooling argmaxes and the ReLU state of the pooled units.

    Changes exactly when a perturbation crosses a kink of the encoder.
    """
    ids = pad_ids(seqs, config)
    x = nm.embedding_lookup(params.embedding, ids)
    sig = []
    for filt, bias in zip(params.filters, params.biases):
        pre = nm.conv1d_valid(x, filt.value, bias.value)
        _, arg = nm.max_over_time(nm.relu(pre))
        pooled_pre = np.take_along_axis(pre, arg[..., None, :], axis=-2)
        sig.append((pooled_pre > 0).tobytes())
        sig.append(arg.tobytes())
    return tuple(sig)
