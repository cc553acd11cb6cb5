"""Primitive tensor ops with hand-derived backward passes.

Forward functions return (output, cache); the matching *_bwd function takes
the upstream gradient and the cache. Everything follows the input dtype: the
training path runs float32, while gradient checks run the same code in
float64. Accumulation is plain sequential numpy, so results are deterministic
for a fixed input.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "STD_FLOOR",
    "dense_fwd",
    "dense_bwd",
    "relu_fwd",
    "relu_bwd",
    "layer_norm_fwd",
    "layer_norm_bwd",
    "softmax",
    "softmax_bwd",
    "mha_fwd",
    "mha_bwd",
]

STD_FLOOR = 1e-8


def dense_fwd(x, w, b):
    return x @ w + b, (x, w)


def dense_bwd(dy, cache):
    x, w = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def relu_fwd(x):
    return np.maximum(x, 0.0), x


def relu_bwd(dy, x):
    return np.where(x > 0, dy, 0.0)


def layer_norm_fwd(x, gain, bias):
    """Row-wise layer norm with population std; std below STD_FLOOR -> 1."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    std = np.sqrt(var)
    floored = std < STD_FLOOR
    std = np.where(floored, 1.0, std)
    xhat = xc / std
    return xhat * gain + bias, (xhat, std, floored, gain)


def layer_norm_bwd(dy, cache):
    xhat, std, floored, gain = cache
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    dxhat = dy * gain
    mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
    # On the floored path std is the constant 1, so the variance term vanishes.
    var_term = np.where(floored, 0.0, xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True))
    dx = (dxhat - mean_dxhat - var_term) / std
    return dx, dgain, dbias


def softmax(z, axis=-1):
    s = z - z.max(axis=axis, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_bwd(dy, p, axis=-1):
    return p * (dy - (dy * p).sum(axis=axis, keepdims=True))


def mha_fwd(x, wq, bq, wk, bk, wv, bv, wo, bo, num_heads):
    """Scaled dot-product attention over num_heads heads, no mask.

    x: (T, d). Scores are scaled by 1/sqrt(d/num_heads).
    """
    t, d = x.shape
    dh = d // num_heads

    def split(m):
        return m.reshape(t, num_heads, dh).transpose(1, 0, 2)  # (H, T, dh)

    qh = split(x @ wq + bq)
    kh = split(x @ wk + bk)
    vh = split(x @ wv + bv)
    scale = 1.0 / math.sqrt(dh)
    attn = softmax((qh @ kh.transpose(0, 2, 1)) * scale)
    merged = (attn @ vh).transpose(1, 0, 2).reshape(t, d)
    out = merged @ wo + bo
    return out, (x, wq, wk, wv, wo, qh, kh, vh, attn, merged, scale)


def mha_bwd(dy, cache, num_heads):
    x, wq, wk, wv, wo, qh, kh, vh, attn, merged, scale = cache
    t, d = x.shape
    dh = d // num_heads

    dwo = merged.T @ dy
    dbo = dy.sum(axis=0)
    dctx = (dy @ wo.T).reshape(t, num_heads, dh).transpose(1, 0, 2)

    dattn = dctx @ vh.transpose(0, 2, 1)
    dvh = attn.transpose(0, 2, 1) @ dctx
    dscores = softmax_bwd(dattn, attn)
    dqh = (dscores @ kh) * scale
    dkh = (dscores.transpose(0, 2, 1) @ qh) * scale

    def merge(mh):
        return mh.transpose(1, 0, 2).reshape(t, d)

    dq, dk, dv = merge(dqh), merge(dkh), merge(dvh)
    dx = dq @ wq.T + dk @ wk.T + dv @ wv.T
    grads = (x.T @ dq, dq.sum(axis=0), x.T @ dk, dk.sum(axis=0),
             x.T @ dv, dv.sum(axis=0), dwo, dbo)
    return dx, grads
