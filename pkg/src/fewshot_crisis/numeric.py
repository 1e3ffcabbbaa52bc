"""Minimal numpy layer kernel: forward/backward pairs, Adam and a gradient checker.

Layers operate on the trailing axes, so a leading batch axis is allowed
everywhere: ``conv1d_valid`` takes ``[..., T, D]``, ``max_over_time`` takes
``[..., T, F]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class Parameter:
    def __init__(self, value: np.ndarray, trainable: bool = True, name: str = ""):
        self.value = value
        self.grad = np.zeros_like(value)
        self.trainable = trainable
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self):
        self.grad.fill(0)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


def check_finite(x: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite values in {where}")
    return x


# -- embedding ---------------------------------------------------------------

def embedding_lookup(table: Parameter, ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    V = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= V):
        raise IndexError(f"token id out of range [0, {V})")
    return table.value[ids]


def embedding_backward(table: Parameter, ids, grad_out: np.ndarray) -> None:
    """Scatter-add ``grad_out`` rows into ``table.grad``; repeated ids accumulate."""
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    D = table.shape[1]
    np.add.at(table.grad, ids, grad_out.reshape(-1, D).astype(table.grad.dtype, copy=False))


# -- convolution ---------------------------------------------------------------

def _windows(x: np.ndarray, width: int) -> np.ndarray:
    # [..., T, D] -> [..., T-W+1, W*D]
    win = np.lib.stride_tricks.sliding_window_view(x, width, axis=-2)  # [..., L, D, W]
    win = np.swapaxes(win, -1, -2)
    return win.reshape(*win.shape[:-2], width * x.shape[-1])


def conv1d_valid(x: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid 1-d convolution: ``out[t, f] = bias[f] + sum_{w,d} x[t+w, d] * filters[w, d, f]``."""
    W, D, F = filters.shape
    if x.shape[-1] != D:
        raise ShapeError(f"input depth {x.shape[-1]} != filter depth {D}")
    if x.shape[-2] < W:
        raise ShapeError(f"sequence length {x.shape[-2]} shorter than filter width {W}")
    return _windows(x, W) @ filters.reshape(W * D, F) + bias


def conv1d_valid_backward(x: np.ndarray, filters: np.ndarray, grad_out: np.ndarray):
    """Returns ``(d_input, d_filters, d_bias)`` for ``conv1d_valid``."""
    W, D, F = filters.shape
    L = grad_out.shape[-2]
    g2 = grad_out.reshape(-1, F)
    d_filters = (_windows(x, W).reshape(-1, W * D).T @ g2).reshape(W, D, F)
    d_bias = g2.sum(axis=0)
    d_win = (grad_out @ filters.reshape(W * D, F).T).reshape(*grad_out.shape[:-1], W, D)
    d_x = np.zeros_like(x, dtype=np.result_type(x, grad_out))
    for w in range(W):
        d_x[..., w:w + L, :] += d_win[..., w, :]
    return d_x, d_filters, d_bias


def conv1d_naive(x: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Loop reference for ``conv1d_valid`` on a single ``[T, D]`` input."""
    T, D = x.shape
    W, _, F = filters.shape
    out = np.zeros((T - W + 1, F), dtype=np.result_type(x, filters))
    for t in range(T - W + 1):
        for f in range(F):
            acc = bias[f]
            for w in range(W):
                for d in range(D):
                    acc += x[t + w, d] * filters[w, d, f]
            out[t, f] = acc
    return out


# -- elementwise / pooling -----------------------------------------------------

def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # subgradient 0 at x == 0
    return grad_out * (x > 0)


def max_over_time(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max over axis -2 with ties broken to the earliest step; returns (values, argmax)."""
    if x.shape[-2] == 0:
        raise ShapeError("max_over_time needs at least one time step")
    idx = np.argmax(x, axis=-2)
    return np.take_along_axis(x, idx[..., None, :], axis=-2)[..., 0, :], idx


def max_over_time_backward(argmax: np.ndarray, T: int, grad_out: np.ndarray) -> np.ndarray:
    F = grad_out.shape[-1]
    d_x = np.zeros((*grad_out.shape[:-1], T, F), dtype=grad_out.dtype)
    np.put_along_axis(d_x, argmax[..., None, :], grad_out[..., None, :], axis=-2)
    return d_x


def dropout(x: np.ndarray, rate: float, training: bool, rng: np.random.Generator | None):
    """Inverted dropout; returns ``(output, mask)`` where the mask already holds the
    ``1/(1-rate)`` scale (``None`` when dropout is inactive)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must lie in [0, 1)")
    if not training or rate == 0.0:
        return x, None
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * mask, mask


def dropout_backward(mask: np.ndarray | None, grad_out: np.ndarray) -> np.ndarray:
    return grad_out if mask is None else grad_out * mask


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    s = z - np.max(z, axis=-1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Loss ``-log softmax(logits)[label]`` and its gradient w.r.t. ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size < 2:
        raise ShapeError("softmax_cross_entropy expects a vector of >= 2 logits")
    if not 0 <= label < logits.size:
        raise IndexError(f"label {label} out of range")
    loss = -float(log_softmax(logits)[label])
    grad = softmax(logits)
    grad[label] -= 1.0
    return loss, grad


# -- optimizer ---------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[Parameter], **hyper) -> "AdamState":
        return cls(
            m=[np.zeros_like(p.value) for p in params],
            v=[np.zeros_like(p.value) for p in params],
            **hyper,
        )


def adam_step(params: Sequence[Parameter], state: AdamState) -> None:
    """One bias-corrected Adam update; zeroes every gradient afterwards."""
    if not state.m:
        state.m = [np.zeros_like(p.value) for p in params]
        state.v = [np.zeros_like(p.value) for p in params]
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, m, v in zip(params, state.m, state.v):
        if p.trainable:
            g = p.grad
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            upd = (state.lr / c1) * m / (np.sqrt(v / c2) + state.eps)
            p.value -= upd.astype(p.value.dtype, copy=False)
        p.zero_grad()


# -- gradient checking ---------------------------------------------------------

def grad_check(
    f: Callable[[], float],
    inputs: Sequence[np.ndarray],
    analytic: Sequence[np.ndarray],
    eps: float = 1e-3,
    coords: int | None = None,
    rng: np.random.Generator | None = None,
    signature: Callable[[], Hashable] | None = None,
) -> float:
    """Max relative error between ``analytic`` and central finite differences.

    ``f`` re-evaluates the scalar function reading ``inputs`` (float64 arrays,
    perturbed in place and restored). ``coords`` limits the check to that many
    random coordinates. When ``signature`` is given, coordinates whose
    perturbation changes it (an activation pattern crossing a kink) are
    skipped.
    """
    if not all(x.flags.c_contiguous for x in inputs):
        raise ValueError("grad_check perturbs inputs in place; pass C-contiguous arrays")
    rng = np.random.default_rng(0) if rng is None else rng
    flat = [(a, i) for a, x in enumerate(inputs) for i in range(x.size)]
    if coords is not None and coords < len(flat):
        flat = [flat[j] for j in rng.choice(len(flat), size=coords, replace=False)]
    base_sig = signature() if signature is not None else None
    worst = 0.0
    for a, i in flat:
        x = inputs[a].reshape(-1)
        old = x[i]
        x[i] = old + eps
        fp = f()
        sp = signature() if signature is not None else None
        x[i] = old - eps
        fm = f()
        sm = signature() if signature is not None else None
        x[i] = old
        if signature is not None and not (sp == base_sig == sm):
            continue
        num = (fp - fm) / (2 * eps)
        ana = float(analytic[a].reshape(-1)[i])
        err = abs(num - ana) / max(abs(num), abs(ana), 1e-8)
        worst = max(worst, err)
    return worst
