"""GIN-based RTPool network with hand-written reverse pass.

Parameters live in a flat ``dict[str, np.ndarray]`` keyed ``gin{l}.eps``,
``gin{l}.W1`` ... ``readout.W``, ``cls.W``, ``cls.b``.  Layer ``gin0`` updates
the input graph, ``gin{l+1}`` updates level ``l+1`` after pooling.

Pooling matrices and adjacencies enter as constants; nothing flows back into
them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import PoolingHierarchy
from .errors import NonFiniteActivation, NonFiniteLoss, ShapeMismatch

Params = dict


def init_params(in_dim: int, hidden: int, num_layers: int, num_classes: int, seed: int) -> Params:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero epsilons."""
    rng = np.random.default_rng(seed)

    def uniform(fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    params: Params = {}
    for l in range(num_layers + 1):
        f_in = in_dim if l == 0 else hidden
        params[f"gin{l}.eps"] = np.zeros(())
        params[f"gin{l}.W1"] = uniform(f_in, (f_in, hidden))
        params[f"gin{l}.b1"] = uniform(f_in, (hidden,))
        params[f"gin{l}.W2"] = uniform(hidden, (hidden, hidden))
        params[f"gin{l}.b2"] = uniform(hidden, (hidden,))
    params["readout.W"] = uniform(hidden, (hidden, 1))
    params["cls.W"] = uniform(hidden, (hidden, num_classes))
    params["cls.b"] = uniform(hidden, (num_classes,))
    return params


def num_gin_layers(params: Params) -> int:
    return sum(1 for name in params if name.endswith(".eps"))


def gin_forward(adj: np.ndarray, z: np.ndarray, eps, w1, b1, w2, b2, cache: dict | None = None) -> np.ndarray:
    """H = MLP((1 + eps) Z + A Z) with MLP = affine, rectifier, affine."""
    if adj.shape != (z.shape[0], z.shape[0]):
        raise ShapeMismatch(f"adjacency {adj.shape} does not match {z.shape[0]} feature rows")
    if z.shape[1] != w1.shape[0]:
        raise ShapeMismatch(f"feature width {z.shape[1]} != layer input width {w1.shape[0]}")
    s = (1.0 + eps) * z + adj @ z
    u = s @ w1 + b1
    r = np.maximum(u, 0.0)
    h = r @ w2 + b2
    if cache is not None:
        cache.update(adj=adj, z=z, s=s, u=u, r=r)
    return h


def _gin_backward(cache: dict, eps, w1, w2, dh: np.ndarray):
    r, u, s, z, adj = cache["r"], cache["u"], cache["s"], cache["z"], cache["adj"]
    grads = {"W2": r.T @ dh, "b2": dh.sum(axis=0)}
    du = (dh @ w2.T) * (u > 0)
    grads["W1"] = s.T @ du
    grads["b1"] = du.sum(axis=0)
    ds = du @ w1.T
    grads["eps"] = np.asarray(np.sum(ds * z))
    dz = (1.0 + eps) * ds + adj.T @ ds
    return grads, dz


def dropout_mask(width: int, rate: float, seed: int, step: int) -> np.ndarray:
    """Inverted-dropout mask, fixed by (seed, step)."""
    if rate <= 0:
        return np.ones(width)
    rng = np.random.default_rng([int(seed), int(step)])
    keep = rng.random(width) >= rate
    return keep / (1.0 - rate)


@dataclass
class ForwardCache:
    layers: list
    pooled_from: list
    h_last: np.ndarray
    u: np.ndarray
    h_final: np.ndarray
    mask: np.ndarray
    h_drop: np.ndarray


def rtpool_forward(hierarchy: PoolingHierarchy, h0: np.ndarray, params: Params,
                   mask: np.ndarray | None = None) -> tuple[np.ndarray, ForwardCache]:
    """Logits for one graph.  ``mask`` is the dropout mask on H_final (None in eval mode)."""
    h0 = np.asarray(h0, dtype=np.float64)
    if h0.shape[0] != hierarchy.graphs[0].num_vertices:
        raise ShapeMismatch(f"{h0.shape[0]} feature rows for {hierarchy.graphs[0].num_vertices} input vertices")
    if num_gin_layers(params) != hierarchy.num_layers + 1:
        raise ShapeMismatch(f"parameters cover {num_gin_layers(params) - 1} pooling layers, "
                            f"hierarchy has {hierarchy.num_layers}")
    layers, pooled_from = [], []
    cache: dict = {}
    h = gin_forward(hierarchy.graphs[0].adjacency, h0, *_gin_params(params, 0), cache=cache)
    layers.append(cache)
    for l, c_hat in enumerate(hierarchy.matrices):
        pooled_from.append(h)
        z = c_hat @ h
        cache = {}
        h = gin_forward(hierarchy.graphs[l + 1].adjacency, z, *_gin_params(params, l + 1), cache=cache)
        layers.append(cache)
    u = (h @ params["readout.W"])[:, 0]
    h_final = h.T @ u
    if mask is None:
        mask = np.ones_like(h_final)
    h_drop = h_final * mask
    logits = h_drop @ params["cls.W"] + params["cls.b"]
    if not np.all(np.isfinite(logits)):
        raise NonFiniteActivation("non-finite activation in forward pass")
    return logits, ForwardCache(layers, pooled_from, h, u, h_final, mask, h_drop)


def _gin_params(params: Params, l: int):
    return (params[f"gin{l}.eps"], params[f"gin{l}.W1"], params[f"gin{l}.b1"],
            params[f"gin{l}.W2"], params[f"gin{l}.b2"])


def readout(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """H^T (H W): one entry per feature channel, zero for an empty level."""
    return h.T @ (h @ w)[:, 0]


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    shifted = logits - logits.max()
    log_z = np.log(np.exp(shifted).sum())
    probs = np.exp(shifted - log_z)
    grad = probs.copy()
    grad[label] -= 1.0
    return float(log_z - shifted[label]), grad


def backward(hierarchy: PoolingHierarchy, params: Params, cache: ForwardCache, dlogits: np.ndarray) -> dict:
    grads = {name: np.zeros_like(v) for name, v in params.items()}
    grads["cls.W"] += np.outer(cache.h_drop, dlogits)
    grads["cls.b"] += dlogits
    dh_final = (params["cls.W"] @ dlogits) * cache.mask
    h, u = cache.h_last, cache.u
    w = params["readout.W"]
    # h_final = H^T u, u = H w
    du = h @ dh_final
    dh = np.outer(u, dh_final) + np.outer(du, w[:, 0])
    grads["readout.W"] += (h.T @ du)[:, None]
    for l in range(hierarchy.num_layers, -1, -1):
        eps, w1, _, w2, _ = _gin_params(params, l)
        g, dz = _gin_backward(cache.layers[l], eps, w1, w2, dh)
        for key, val in g.items():
            grads[f"gin{l}.{key}"] += val
        if l > 0:
            dh = hierarchy.matrices[l - 1].T @ dz
    return grads


def weight_penalty(params: Params, weight_decay: float) -> float:
    return 0.5 * weight_decay * sum(float(np.sum(v * v)) for v in params.values())


def loss_and_grad(batch, params: Params, weight_decay: float = 0.0, dropout: float = 0.0,
                  seed: int = 0, step: int = 0) -> tuple[float, dict]:
    """Mean softmax cross-entropy over ``batch`` plus ``weight_decay/2 * |params|^2``.

    ``batch`` is a sequence of ``(hierarchy, features, label)`` triples.  The
    dropout mask of sample ``i`` is fixed by ``(seed, step, i)``.
    """
    if not len(batch):
        raise ValueError("empty batch")
    total = 0.0
    grads = {name: np.zeros_like(v) for name, v in params.items()}
    width = params["cls.W"].shape[0]
    for i, (hier, feats, label) in enumerate(batch):
        num_classes = params["cls.b"].shape[0]
        if not 0 <= int(label) < num_classes:
            raise ValueError(f"label {label} outside 0..{num_classes - 1}")
        mask = dropout_mask(width, dropout, seed, step * 1_000_003 + i) if dropout > 0 else None
        logits, cache = rtpool_forward(hier, feats, params, mask)
        loss, dlogits = softmax_cross_entropy(logits, int(label))
        total += loss
        for name, g in backward(hier, params, cache, dlogits).items():
            grads[name] += g
    n = len(batch)
    loss = total / n + weight_penalty(params, weight_decay)
    for name in grads:
        grads[name] = grads[name] / n + weight_decay * params[name]
    if not np.isfinite(loss):
        raise NonFiniteLoss("loss is not finite")
    return loss, grads


def predict(hierarchy: PoolingHierarchy, features: np.ndarray, params: Params) -> int:
    logits, _ = rtpool_forward(hierarchy, features, params)
    return int(np.argmax(logits))
