"""Shared end-to-end gradient probe used by the encoder and acceptance tests."""
import numpy as np

from fewshot_crisis import numeric as nm
from fewshot_crisis.encoder import EncoderConfig, activation_signature, init_encoder
from fewshot_crisis.heads import HeadKind, episode_forward


def tiny_config(seed=0, dropout=0.5):
    return EncoderConfig(vocab_size=20, embed_dim=8, widths=(2, 3), feature_maps=4, dropout=dropout, max_len=7, seed=seed)


def trainable_views(params):
    """Parameter values and gradients, leaving out the PAD row, which is pinned to zero."""
    plist = params.parameters()
    inputs = [params.embedding.value[1:]] + [p.value for p in plist[1:]]
    analytic = [params.embedding.grad[1:].copy()] + [p.grad.copy() for p in plist[1:]]
    return inputs, analytic


def episode_gradient_error(kind, probe, k=2, coords=60):
    """Max relative error of the analytic episode-loss gradient on one random probe.

    Every probe draws fresh float64 weights, a random episode and a fixed
    dropout mask, then compares against central differences (eps 1e-3) on
    ``coords`` random parameter coordinates. Coordinates whose perturbation
    flips a ReLU or a pooling argmax are skipped, since the loss has a kink there.
    """
    kind = HeadKind.parse(kind)
    rng = np.random.default_rng(10_000 + probe)
    cfg = tiny_config(seed=probe)
    params = init_encoder(cfg, dtype=np.float64)
    if kind is HeadKind.MATCHING:
        # cosine curvature grows like 1/|e|^2, so at the default init scale
        # eps=1e-3 differences are too coarse; unit-scale rows keep outputs O(1).
        # The squared-distance heads have the opposite trend and keep the default.
        params.embedding.value[1:] = rng.normal(size=params.embedding.value[1:].shape)
    for b in params.biases:
        b.value[:] = rng.normal(scale=0.1, size=b.value.shape)

    def seq():
        return rng.integers(1, cfg.vocab_size, size=int(rng.integers(3, 10))).tolist()

    pos = [seq() for _ in range(k)]
    neg = [] if kind.one_way else [seq() for _ in range(k)]
    query = seq()
    label = bool(rng.random() < 0.5)
    drop_seed = int(rng.integers(2**31))

    def loss():
        return episode_forward(
            params, cfg, kind, pos, neg, query, label, training=True, rng=np.random.default_rng(drop_seed)
        ).loss

    res = episode_forward(params, cfg, kind, pos, neg, query, label, training=True, rng=np.random.default_rng(drop_seed))
    params.zero_grad()
    res.backward()
    inputs, analytic = trainable_views(params)
    return nm.grad_check(
        loss,
        inputs,
        analytic,
        eps=1e-3,
        coords=coords,
        rng=rng,
        signature=lambda: activation_signature(params, cfg, pos + neg + [query]),
    )
