"""The sign classifier: assembly, initialization, training, prediction.

Architecture: per-frame feature extractor (dense -> LayerNorm -> ReLU per
extractor width), learned positional embeddings, a stack of pre-norm
transformer encoder layers (h1 = h + MHA(LN(h)); out = h1 + FFN(LN(h1)),
full bidirectional attention), mean-pooling over time, and a final dense
head with no activation. Weights live in a flat name -> float32 array dict;
gradients are computed by hand through every op.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, ShapeError, ValidationError
from ..landmarks import LabelMap
from .config import ModelConfig
from .ops import (
    dense_bwd,
    dense_fwd,
    layer_norm_bwd,
    layer_norm_fwd,
    mha_bwd,
    mha_fwd,
    relu_bwd,
    relu_fwd,
    softmax,
)

__all__ = [
    "Prediction",
    "param_specs",
    "init_weights",
    "count_parameters",
    "feature_extract",
    "encoder_layer",
    "forward",
    "backward",
    "cross_entropy",
    "loss_and_grads",
    "train_step",
    "predict",
]

# Initialization kinds: dense weights U[-sqrt(1/fan_in), +sqrt(1/fan_in)],
# biases/LN offsets zero, LN gains one, positional embedding N(0, 0.02).
_DENSE, _ZEROS, _ONES, _POS = "dense", "zeros", "ones", "pos"


def param_specs(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """Canonical (name, shape, init kind) listing of every parameter."""
    specs: list[tuple[str, tuple[int, ...], str]] = []
    fan_in = cfg.input_dim
    for i, width in enumerate(cfg.extractor_dims):
        specs.append((f"extractor.{i}.dense.w", (fan_in, width), _DENSE))
        specs.append((f"extractor.{i}.dense.b", (width,), _ZEROS))
        specs.append((f"extractor.{i}.ln.gain", (width,), _ONES))
        specs.append((f"extractor.{i}.ln.bias", (width,), _ZEROS))
        fan_in = width
    d = cfg.model_dim
    specs.append(("pos_embedding", (cfg.max_seq_len, d), _POS))
    for i in range(cfg.num_layers):
        p = f"layer.{i}"
        specs.append((f"{p}.ln1.gain", (d,), _ONES))
        specs.append((f"{p}.ln1.bias", (d,), _ZEROS))
        for proj in ("wq", "wk", "wv", "wo"):
            specs.append((f"{p}.attn.{proj}", (d, d), _DENSE))
            specs.append((f"{p}.attn.b{proj[1]}", (d,), _ZEROS))
        specs.append((f"{p}.ln2.gain", (d,), _ONES))
        specs.append((f"{p}.ln2.bias", (d,), _ZEROS))
        specs.append((f"{p}.ffn.w1", (d, cfg.ff_dim), _DENSE))
        specs.append((f"{p}.ffn.b1", (cfg.ff_dim,), _ZEROS))
        specs.append((f"{p}.ffn.w2", (cfg.ff_dim, d), _DENSE))
        specs.append((f"{p}.ffn.b2", (d,), _ZEROS))
    specs.append(("head.w", (d, cfg.num_classes), _DENSE))
    specs.append(("head.b", (cfg.num_classes,), _ZEROS))
    return specs


def init_weights(cfg: ModelConfig, seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    store: dict[str, np.ndarray] = {}
    for name, shape, kind in param_specs(cfg):
        if kind == _DENSE:
            lim = math.sqrt(1.0 / shape[0])
            arr = rng.uniform(-lim, lim, size=shape)
        elif kind == _POS:
            arr = rng.normal(0.0, 0.02, size=shape)
        elif kind == _ONES:
            arr = np.ones(shape)
        else:
            arr = np.zeros(shape)
        store[name] = arr.astype(np.float32)
    return store


def count_parameters(cfg: ModelConfig) -> int:
    """Closed-form parameter count; must equal the init_weights element sum.

    dense(i->o) = i*o + o; LayerNorm(d) = 2d; MHA = 4 dense(d->d);
    FFN = dense(d->ff) + dense(ff->d); plus the (T, d) positional embedding,
    two LayerNorms per layer, and the d->num_classes head.
    """

    def dense(i: int, o: int) -> int:
        return i * o + o

    total = 0
    fan_in = cfg.input_dim
    for width in cfg.extractor_dims:
        total += dense(fan_in, width) + 2 * width
        fan_in = width
    d = cfg.model_dim
    total += cfg.max_seq_len * d
    per_layer = 2 * (2 * d) + 4 * dense(d, d) + dense(d, cfg.ff_dim) + dense(cfg.ff_dim, d)
    total += cfg.num_layers * per_layer
    total += dense(d, cfg.num_classes)
    return total


def _check_weights(w: dict[str, np.ndarray], cfg: ModelConfig) -> None:
    for name, shape, _ in param_specs(cfg):
        if name not in w:
            raise ShapeError(f"missing tensor {name!r}")
        if tuple(w[name].shape) != shape:
            raise ShapeError(
                f"tensor {name!r} has shape {tuple(w[name].shape)}, expected {shape}"
            )


def _check_input(x: np.ndarray, cfg: ModelConfig) -> None:
    if x.ndim != 2 or x.shape[1] != cfg.input_dim:
        raise ShapeError(
            f"input of shape {tuple(x.shape)} does not match extractor.0.dense.w "
            f"(input_dim {cfg.input_dim})"
        )
    if not 1 <= x.shape[0] <= cfg.max_seq_len:
        raise ShapeError(
            f"sequence length {x.shape[0]} outside [1, {cfg.max_seq_len}] "
            f"(pos_embedding rows)"
        )


def _extract_fwd(x, w, cfg):
    h = x
    caches = []
    for i in range(len(cfg.extractor_dims)):
        p = f"extractor.{i}"
        z, c_dense = dense_fwd(h, w[f"{p}.dense.w"], w[f"{p}.dense.b"])
        n, c_ln = layer_norm_fwd(z, w[f"{p}.ln.gain"], w[f"{p}.ln.bias"])
        h, c_relu = relu_fwd(n)
        caches.append((c_dense, c_ln, c_relu))
    return h, caches


def _extract_bwd(dy, caches, cfg, grads):
    for i in reversed(range(len(cfg.extractor_dims))):
        c_dense, c_ln, c_relu = caches[i]
        p = f"extractor.{i}"
        dn = relu_bwd(dy, c_relu)
        dz, dgain, dbias = layer_norm_bwd(dn, c_ln)
        dy, dw, db = dense_bwd(dz, c_dense)
        grads[f"{p}.ln.gain"] += dgain
        grads[f"{p}.ln.bias"] += dbias
        grads[f"{p}.dense.w"] += dw
        grads[f"{p}.dense.b"] += db
    return dy


def _encoder_fwd(h, w, cfg, i):
    p = f"layer.{i}"
    ln1, c_ln1 = layer_norm_fwd(h, w[f"{p}.ln1.gain"], w[f"{p}.ln1.bias"])
    attn_out, c_att = mha_fwd(
        ln1,
        w[f"{p}.attn.wq"], w[f"{p}.attn.bq"],
        w[f"{p}.attn.wk"], w[f"{p}.attn.bk"],
        w[f"{p}.attn.wv"], w[f"{p}.attn.bv"],
        w[f"{p}.attn.wo"], w[f"{p}.attn.bo"],
        cfg.num_heads,
    )
    h1 = h + attn_out
    ln2, c_ln2 = layer_norm_fwd(h1, w[f"{p}.ln2.gain"], w[f"{p}.ln2.bias"])
    f1, c_d1 = dense_fwd(ln2, w[f"{p}.ffn.w1"], w[f"{p}.ffn.b1"])
    a1, c_relu = relu_fwd(f1)
    f2, c_d2 = dense_fwd(a1, w[f"{p}.ffn.w2"], w[f"{p}.ffn.b2"])
    return h1 + f2, (c_ln1, c_att, c_ln2, c_d1, c_relu, c_d2)


def _encoder_bwd(dy, cache, cfg, i, grads):
    c_ln1, c_att, c_ln2, c_d1, c_relu, c_d2 = cache
    p = f"layer.{i}"
    # out = h1 + FFN(LN2(h1))
    da1, dw2, db2 = dense_bwd(dy, c_d2)
    df1 = relu_bwd(da1, c_relu)
    dln2, dw1, db1 = dense_bwd(df1, c_d1)
    dh1_ffn, dg2, dbeta2 = layer_norm_bwd(dln2, c_ln2)
    dh1 = dy + dh1_ffn
    # h1 = h + MHA(LN1(h))
    dln1, attn_grads = mha_bwd(dh1, c_att, cfg.num_heads)
    dh_ln1, dg1, dbeta1 = layer_norm_bwd(dln1, c_ln1)
    dh = dh1 + dh_ln1

    dwq, dbq, dwk, dbk, dwv, dbv, dwo, dbo = attn_grads
    grads[f"{p}.ln1.gain"] += dg1
    grads[f"{p}.ln1.bias"] += dbeta1
    grads[f"{p}.attn.wq"] += dwq
    grads[f"{p}.attn.bq"] += dbq
    grads[f"{p}.attn.wk"] += dwk
    grads[f"{p}.attn.bk"] += dbk
    grads[f"{p}.attn.wv"] += dwv
    grads[f"{p}.attn.bv"] += dbv
    grads[f"{p}.attn.wo"] += dwo
    grads[f"{p}.attn.bo"] += dbo
    grads[f"{p}.ln2.gain"] += dg2
    grads[f"{p}.ln2.bias"] += dbeta2
    grads[f"{p}.ffn.w1"] += dw1
    grads[f"{p}.ffn.b1"] += db1
    grads[f"{p}.ffn.w2"] += dw2
    grads[f"{p}.ffn.b2"] += db2
    return dh


def feature_extract(x: np.ndarray, w: dict[str, np.ndarray],
                    cfg: ModelConfig) -> np.ndarray:
    """Per-row dense -> LayerNorm -> ReLU chain; (T, D) -> (T, model_dim)."""
    _check_input(x, cfg)
    _check_weights(w, cfg)
    out, _ = _extract_fwd(x, w, cfg)
    return out


def encoder_layer(h: np.ndarray, w: dict[str, np.ndarray], cfg: ModelConfig,
                  layer_idx: int) -> np.ndarray:
    """One pre-norm transformer encoder layer; (T, d) -> (T, d)."""
    if h.ndim != 2 or h.shape[1] != cfg.model_dim:
        raise ShapeError(
            f"encoder input of shape {tuple(h.shape)} does not match "
            f"layer.{layer_idx} (model_dim {cfg.model_dim})"
        )
    _check_weights(w, cfg)
    out, _ = _encoder_fwd(h, w, cfg, layer_idx)
    return out


def _forward_cached(x, w, cfg):
    _check_input(x, cfg)
    _check_weights(w, cfg)
    t = x.shape[0]
    feat, c_ext = _extract_fwd(x, w, cfg)
    h = feat + w["pos_embedding"][:t]
    layer_caches = []
    for i in range(cfg.num_layers):
        h, c = _encoder_fwd(h, w, cfg, i)
        layer_caches.append(c)
    pooled = h.mean(axis=0)
    logits = pooled @ w["head.w"] + w["head.b"]
    return logits, (c_ext, layer_caches, pooled, t)


def forward(x: np.ndarray, w: dict[str, np.ndarray],
            cfg: ModelConfig) -> np.ndarray:
    """Logits for one sample; (T, D) in, (num_classes,) out, no activation."""
    logits, _ = _forward_cached(x, w, cfg)
    return logits


def backward(dlogits: np.ndarray, cache, w: dict[str, np.ndarray],
             cfg: ModelConfig, grads: dict[str, np.ndarray]) -> None:
    """Accumulate parameter gradients for one sample into grads."""
    c_ext, layer_caches, pooled, t = cache
    grads["head.w"] += np.outer(pooled, dlogits)
    grads["head.b"] += dlogits
    dpooled = w["head.w"] @ dlogits
    dh = np.repeat((dpooled / t)[None, :], t, axis=0)
    for i in reversed(range(cfg.num_layers)):
        dh = _encoder_bwd(dh, layer_caches[i], cfg, i, grads)
    grads["pos_embedding"][:t] += dh
    _extract_bwd(dh, c_ext, cfg, grads)


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """Softmax cross-entropy via log-sum-exp, stable for large logits."""
    m = logits.max()
    return float(m + np.log(np.exp(logits - m).sum()) - logits[label])


def loss_and_grads(batch: list[tuple[np.ndarray, int]], w: dict[str, np.ndarray],
                   cfg: ModelConfig) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its full parameter gradient.

    Samples are processed sequentially in batch order so gradient
    accumulation is deterministic.
    """
    if not batch:
        raise ValidationError("empty batch")
    grads = {name: np.zeros_like(w[name]) for name, _, _ in param_specs(cfg)}
    total = 0.0
    inv_b = 1.0 / len(batch)
    for x, label in batch:
        if not 0 <= label < cfg.num_classes:
            raise ValidationError(f"label {label} outside [0, {cfg.num_classes})")
        logits, cache = _forward_cached(x, w, cfg)
        total += cross_entropy(logits, label)
        dlogits = softmax(logits)
        dlogits[label] -= 1.0
        dlogits *= inv_b
        backward(dlogits, cache, w, cfg, grads)
    return total * inv_b, grads


def train_step(batch: list[tuple[np.ndarray, int]], w: dict[str, np.ndarray],
               cfg: ModelConfig, lr: float) -> tuple[dict[str, np.ndarray], float]:
    """One plain-SGD step over a batch; returns (new weights, mean CE loss).

    lr == 0 leaves the weights unchanged.
    """
    loss, grads = loss_and_grads(batch, w, cfg)
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite training loss {loss}")
    new_w = {name: w[name] - lr * grads[name] for name in w}
    return new_w, loss


@dataclass(frozen=True)
class Prediction:
    class_id: int
    gloss: str
    confidence: float  # softmax probability of the argmax class


def predict(x: np.ndarray, w: dict[str, np.ndarray], cfg: ModelConfig,
            labels: LabelMap | None = None) -> Prediction:
    """Classify one sample; ties resolve to the lowest class id."""
    logits = forward(x, w, cfg)
    probs = softmax(logits.astype(np.float64))
    class_id = int(np.argmax(logits))
    gloss = labels.gloss_for(class_id) if labels is not None else f"class_{class_id:03d}"
    return Prediction(class_id, gloss, float(probs[class_id]))
