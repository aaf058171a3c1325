"""Mini-batch training, evaluation and repeated-split aggregation."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .errors import EmptyDataset
from .model import Params, init_params, loss_and_grad, predict

log = logging.getLogger(__name__)


@dataclass
class ModelConfig:
    """Hyperparameters and pipeline switches with their default values."""

    batch_size: int = 16
    epochs: int = 500
    learning_rate: float = 0.001
    num_pooling_layers: int = 2
    step: int = 1  # delta k between consecutive pooling orders
    final_dropout: float = 0.5
    weight_decay: float = 0.0001
    hidden: int = 32
    seed: int = 0
    optimizer: str = "adam"
    graph_kind: str = "delaunay"
    connect_overlaps: bool = False
    edge_rule: str = "nerve"
    repetitions: int = 5
    test_fraction: float = 0.1

    def __post_init__(self):
        positive = ("batch_size", "learning_rate", "num_pooling_layers", "step", "hidden", "repetitions")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0 <= self.final_dropout < 1:
            raise ValueError("final_dropout must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.graph_kind not in ("delaunay", "generated"):
            raise ValueError(f"unknown graph kind {self.graph_kind!r}")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")

    @property
    def max_order(self) -> int:
        return self.step * self.num_pooling_layers + 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class _Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: Params, grads: dict):
        self.t += 1
        for name, g in grads.items():
            m = self.m.get(name, 0.0) * self.beta1 + (1 - self.beta1) * g
            v = self.v.get(name, 0.0) * self.beta2 + (1 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            params[name] = params[name] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _num_classes(samples) -> int:
    return int(max(label for _, _, label in samples)) + 1


def train(samples: Sequence, config: ModelConfig, num_classes: int | None = None,
          params: Params | None = None) -> tuple[Params, list[EpochMetrics]]:
    """Fit on ``(hierarchy, features, label)`` samples; fixed seed gives a fixed trajectory.

    Weight decay enters the gradient (L2 penalty) for both optimizers.
    """
    if not len(samples):
        raise EmptyDataset("cannot train on an empty dataset")
    num_classes = num_classes or _num_classes(samples)
    if params is None:
        in_dim = samples[0][1].shape[1]
        params = init_params(in_dim, config.hidden, samples[0][0].num_layers, num_classes, config.seed)
    params = {k: v.copy() for k, v in params.items()}
    history: list[EpochMetrics] = []
    rng = np.random.default_rng([config.seed, 1])
    adam = _Adam(config.learning_rate) if config.optimizer == "adam" else None
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(samples))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [samples[i] for i in order[start:start + config.batch_size]]
            loss, grads = loss_and_grad(batch, params, config.weight_decay, config.final_dropout,
                                        config.seed, step)
            if adam is not None:
                adam.step(params, grads)
            else:
                for name, g in grads.items():
                    params[name] = params[name] - config.learning_rate * g
            losses.append(loss * len(batch))
            step += 1
        metrics = EpochMetrics(epoch, float(sum(losses) / len(samples)), evaluate(samples, params))
        history.append(metrics)
        if epoch % 50 == 0 or epoch == config.epochs - 1:
            log.debug("epoch %d loss %.4f acc %.3f", epoch, metrics.loss, metrics.accuracy)
    return params, history


def evaluate(samples: Sequence, params: Params) -> float:
    """Argmax accuracy with dropout off."""
    if not len(samples):
        raise EmptyDataset("cannot evaluate an empty dataset")
    hits = sum(predict(h, x, params) == int(y) for h, x, y in samples)
    return hits / len(samples)


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle into train/test index arrays (at least one test item when n > 1)."""
    order = np.random.default_rng([seed, 2]).permutation(n)
    n_test = max(1, int(round(n * test_fraction))) if n > 1 else 0
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyDataset("nothing to aggregate")
    return float(arr.mean()), float(arr.std())


def repeated_runs(samples: Sequence, config: ModelConfig, num_classes: int | None = None) -> dict:
    """Train/test on ``config.repetitions`` seeded 90/10 splits and summarise."""
    num_classes = num_classes or _num_classes(samples)
    runs = []
    for rep in range(config.repetitions):
        seed = config.seed + rep
        tr, te = split_indices(len(samples), config.test_fraction, seed)
        cfg = ModelConfig.from_dict({**config.to_dict(), "seed": seed})
        params, history = train([samples[i] for i in tr], cfg, num_classes)
        runs.append({
            "seed": seed,
            "train_accuracy": evaluate([samples[i] for i in tr], params),
            "test_accuracy": evaluate([samples[i] for i in te], params),
            "final_loss": history[-1].loss if history else None,
            "params": params,
        })
    mean, std = aggregate([r["test_accuracy"] for r in runs])
    return {"runs": runs, "test_mean": mean, "test_std": std}
