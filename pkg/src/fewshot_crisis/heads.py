"""Distance-based binary heads: matching, prototypical and one-way prototypical.

Each private ``_*_forward`` returns the scores plus a closure mapping the
gradient w.r.t. the logit pair ``(pos, neg)`` to gradients w.r.t. the input
embeddings. Head arithmetic runs in float64 regardless of the encoder dtype.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numeric as nm
from .encoder import EncoderConfig, EncoderParams, encode_batch

NORM_EPS = 1e-12


class HeadError(ValueError):
    pass


class HeadKind(str, enum.Enum):
    MATCHING = "matching"
    PROTOTYPICAL = "prototypical"
    ONEWAY = "oneway_prototypical"

    @property
    def one_way(self) -> bool:
        return self is HeadKind.ONEWAY

    @classmethod
    def parse(cls, value: "str | HeadKind") -> "HeadKind":
        if isinstance(value, cls):
            return value
        aliases = {"proto": cls.PROTOTYPICAL, "oneway": cls.ONEWAY, "one-way": cls.ONEWAY}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise HeadError(f"unknown head kind {value!r}") from None


@dataclass(frozen=True)
class ClassScores:
    p_pos: float
    p_neg: float
    logits: tuple[float, float]

    @property
    def prediction(self) -> bool:
        # ties go to the negative class
        return self.p_pos > 0.5

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "ClassScores":
        p = nm.softmax(np.asarray(logits, dtype=np.float64))
        return cls(float(p[0]), float(p[1]), (float(logits[0]), float(logits[1])))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < NORM_EPS or nb < NORM_EPS:
        return 0.0
    return float(a @ b / (na * nb))


def prototype(embs: np.ndarray) -> np.ndarray:
    embs = np.asarray(embs)
    if embs.ndim != 2 or len(embs) == 0:
        raise HeadError("a prototype needs a non-empty [n, d] set of embeddings")
    return embs.mean(axis=0)


# -- matching -------------------------------------------------------------------

def _matching_forward(q: np.ndarray, S: np.ndarray, labels: np.ndarray):
    q = np.asarray(q, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise HeadError("matching head needs at least one support of each class")
    qn = np.linalg.norm(q)
    sn = np.linalg.norm(S, axis=1)
    ok = (sn >= NORM_EPS) & (qn >= NORM_EPS)
    denom = np.where(ok, qn * sn, 1.0)
    cos = np.where(ok, S @ q / denom, 0.0)
    att = nm.softmax(cos)
    p = np.array([att[labels].sum(), att[~labels].sum()])
    logits = np.log(p)

    def backward(d_logits: np.ndarray):
        d_p = np.asarray(d_logits) / p
        d_att = np.where(labels, d_p[0], d_p[1])
        d_cos = att * (d_att - att @ d_att)
        d_cos = np.where(ok, d_cos, 0.0)
        # d cos_i / d q = s_i/(|q||s_i|) - cos_i q/|q|^2, symmetric for s_i
        qhat = q / qn if qn >= NORM_EPS else np.zeros_like(q)
        shat = S / np.where(ok, sn, 1.0)[:, None]
        c = d_cos / np.where(ok, qn * sn, 1.0)
        d_q = c @ S - (d_cos * cos).sum() * qhat / (qn if qn >= NORM_EPS else 1.0)
        d_S = c[:, None] * q[None, :] - (d_cos * cos / np.where(ok, sn, 1.0))[:, None] * shat
        return d_q, d_S

    return ClassScores(float(p[0]), float(p[1]), (float(logits[0]), float(logits[1]))), logits, backward


def matching_head(query: np.ndarray, supports: np.ndarray, labels: Sequence[bool]) -> ClassScores:
    """Attention-weighted nearest neighbours over cosine similarity.

    ``labels[i]`` is True for positive supports. The class probability is the
    total softmax attention on that class's supports; logits are their logs.
    """
    return _matching_forward(query, supports, labels)[0]


# -- prototypical ---------------------------------------------------------------

def _proto_forward(q: np.ndarray, p_pos: np.ndarray, p_neg: np.ndarray | None):
    q = np.asarray(q, dtype=np.float64)
    dp = q - np.asarray(p_pos, dtype=np.float64)
    dn = q if p_neg is None else q - np.asarray(p_neg, dtype=np.float64)
    logits = np.array([-(dp @ dp), -(dn @ dn)])

    def backward(d_logits: np.ndarray):
        gp, gn = d_logits
        d_q = -2.0 * (gp * dp + gn * dn)
        d_pos = 2.0 * gp * dp
        d_neg = None if p_neg is None else 2.0 * gn * dn
        return d_q, d_pos, d_neg

    return ClassScores.from_logits(logits), logits, backward


def proto_head(query: np.ndarray, pos_prototype: np.ndarray, neg_prototype: np.ndarray) -> ClassScores:
    """Softmax over negative squared Euclidean distances to the two prototypes."""
    return _proto_forward(query, pos_prototype, neg_prototype)[0]


def oneway_head(query: np.ndarray, pos_prototype: np.ndarray) -> ClassScores:
    """Prototypical head whose negative prototype is pinned to the origin."""
    return _proto_forward(query, pos_prototype, None)[0]


# -- episodes -------------------------------------------------------------------

@dataclass
class EpisodeResult:
    loss: float
    prediction: bool
    scores: ClassScores
    backward: object = None


def check_episode_shape(kind: HeadKind, n_pos: int, n_neg: int, balanced: bool = True) -> None:
    if n_pos < 1:
        raise HeadError("episode has no positive supports")
    if kind.one_way and n_neg:
        raise HeadError("one-way episodes must not contain negative supports")
    if not kind.one_way and n_neg < 1:
        raise HeadError(f"{kind.value} head needs negative supports")
    if balanced and not kind.one_way and n_neg != n_pos:
        raise HeadError(f"{kind.value} head needs k negative supports, got {n_neg} for k={n_pos}")


def head_forward(kind: HeadKind, pos: np.ndarray, neg: np.ndarray, query: np.ndarray, balanced: bool = True):
    """Scores, logits and a backward closure returning ``(d_pos, d_neg, d_query)``.

    ``balanced=False`` lets two-way heads take a negative set of any size.
    """
    kind = HeadKind.parse(kind)
    check_episode_shape(kind, len(pos), len(neg), balanced)
    if kind is HeadKind.MATCHING:
        S = np.concatenate([pos, neg], axis=0)
        labels = np.arange(len(S)) < len(pos)
        scores, logits, bw = _matching_forward(query, S, labels)

        def backward(d_logits):
            d_q, d_S = bw(d_logits)
            return d_S[: len(pos)], d_S[len(pos):], d_q

        return scores, logits, backward

    n = len(pos)
    pp = prototype(pos)
    pn = prototype(neg) if kind is HeadKind.PROTOTYPICAL else None
    scores, logits, bw = _proto_forward(query, pp, pn)

    def backward(d_logits):
        d_q, d_pp, d_pn = bw(d_logits)
        d_pos = np.broadcast_to(d_pp / n, pos.shape)
        d_neg = np.broadcast_to(d_pn / len(neg), neg.shape) if d_pn is not None else np.zeros(neg.shape)
        return d_pos, d_neg, d_q

    return scores, logits, backward


def episode_forward(
    params: EncoderParams,
    config: EncoderConfig,
    kind: HeadKind | str,
    pos_ids: Sequence[Sequence[int]],
    neg_ids: Sequence[Sequence[int]],
    query_ids: Sequence[int],
    label: bool,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> EpisodeResult:
    """Encode supports and query with the shared encoder, score, and compute
    the cross-entropy of the true class. ``backward()`` on the result
    accumulates encoder gradients."""
    kind = HeadKind.parse(kind)
    check_episode_shape(kind, len(pos_ids), len(neg_ids))
    k, m = len(pos_ids), len(neg_ids)
    emb, enc_backward = encode_batch(params, config, list(pos_ids) + list(neg_ids) + [query_ids], training, rng)
    scores, logits, head_backward = head_forward(kind, emb[:k], emb[k:k + m], emb[-1])
    loss, d_logits = nm.softmax_cross_entropy(logits, 0 if label else 1)

    def backward() -> None:
        d_pos, d_neg, d_q = head_backward(d_logits)
        d_emb = np.concatenate([d_pos, d_neg, d_q[None, :]], axis=0)
        enc_backward(d_emb)

    return EpisodeResult(loss, scores.prediction, scores, backward)
