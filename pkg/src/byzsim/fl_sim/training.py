"""Federated training loop for multinomial logistic regression under Byzantine attack.

The model scores class k as ``[x, 1] @ W[:, k]`` with the last class pinned
to a zero column. Only the first C-1 columns are trained, so every update
vector has ``(d + 1) * (C - 1)`` entries. Pinning removes the direction along
which adding a constant to every weight leaves all predictions unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..aggregators import AggregatorSpec, make_aggregator
from ..attacks import AttackSpec, craft_attack, flip_labels
from .data import Dataset, dirichlet_partition, iid_partition, synth_dataset
from .metrics import detection_accuracy


@dataclass
class ModelState:
    weights: np.ndarray  # (d + 1, C); last column stays zero

    @classmethod
    def zeros(cls, d: int, num_classes: int) -> "ModelState":
        return cls(np.zeros((d + 1, num_classes)))

    @property
    def num_params(self) -> int:
        return self.weights.shape[0] * (self.weights.shape[1] - 1)

    def flat(self) -> np.ndarray:
        return self.weights[:, :-1].ravel().copy()

    def step(self, direction: np.ndarray, lr: float) -> "ModelState":
        w = self.weights.copy()
        w[:, :-1] -= lr * direction.reshape(w.shape[0], w.shape[1] - 1)
        return ModelState(w)


def add_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss_and_grad(model: ModelState, features: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy and its gradient w.r.t. the free weights (flattened)."""
    xb = add_bias(features)
    logp = _log_softmax(xb @ model.weights)
    n = labels.shape[0]
    loss = -float(logp[np.arange(n), labels].mean())
    p = np.exp(logp)
    p[np.arange(n), labels] -= 1.0
    grad = xb.T @ p / n
    return loss, grad[:, :-1].ravel()


def loss(model: ModelState, data: Dataset) -> float:
    return loss_and_grad(model, data.features, data.labels)[0]


def accuracy(model: ModelState, data: Dataset) -> float:
    pred = np.argmax(add_bias(data.features) @ model.weights, axis=1)
    return float(np.mean(pred == data.labels))


def local_update(model: ModelState, shard: Dataset, batch_size: int, seed) -> np.ndarray:
    """Mini-batch gradient of the local loss at the current global weights."""
    n = len(shard)
    if n == 0:
        raise ValueError("client shard is empty")
    rng = np.random.default_rng(seed)
    idx = np.arange(n) if batch_size >= n else np.sort(rng.choice(n, size=batch_size, replace=False))
    return loss_and_grad(model, shard.features[idx], shard.labels[idx])[1]


@dataclass
class TrainingConfig:
    num_clients: int = 20
    num_byzantine: int = 6
    lr: float = 0.5
    batch_size: int = 64
    rounds: int = 200
    dirichlet_beta: float | None = None  # None means IID
    attack: AttackSpec = field(default_factory=AttackSpec)
    defense: AggregatorSpec = field(default_factory=AggregatorSpec)
    seed: int = 0
    optimizer: str = "sgd"
    weight_decay: float = 0.0
    # synthetic task
    samples_per_client: int = 100
    test_samples: int = 2000
    dim: int = 20
    num_classes: int = 10
    class_separation: float = 8.0
    feature_offset: float = 1.0

    def validate(self):
        k, q = self.num_clients, self.num_byzantine
        if k < 1 or not 0 <= q < k / 2:
            raise ValueError(f"need 0 <= q < K/2, got K={k}, q={q}")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.rounds < 1 or self.batch_size < 1:
            raise ValueError("rounds and batch size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.dirichlet_beta is not None and not self.dirichlet_beta > 0:
            raise ValueError("dirichlet beta must be positive")

    @property
    def byzantine_indices(self) -> frozenset:
        # the last q clients; client 0 stays benign so it can be a mimic target
        return frozenset(range(self.num_clients - self.num_byzantine, self.num_clients))


@dataclass(frozen=True)
class RoundLog:
    round: int
    loss: float
    accuracy: float
    benign_set: frozenset
    detection_accuracy: float


def client_seed(master_seed: int, client: int, rnd: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, client, rnd])


def make_synthetic_task(config: TrainingConfig):
    total = config.num_clients * config.samples_per_client + config.test_samples
    data = synth_dataset(config.seed, total, config.dim, config.num_classes, config.class_separation,
                         offset=config.feature_offset)
    n_train = config.num_clients * config.samples_per_client
    return data.subset(np.arange(n_train)), data.subset(np.arange(n_train, total))


class _Adam:
    def __init__(self, size: int, b1=0.9, b2=0.999, eps=1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0
        self.b1, self.b2, self.eps = b1, b2, eps

    def direction(self, g: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * g
        self.v = self.b2 * self.v + (1 - self.b2) * g * g
        m_hat = self.m / (1 - self.b1 ** self.t)
        v_hat = self.v / (1 - self.b2 ** self.t)
        return m_hat / (np.sqrt(v_hat) + self.eps)


def run_federated(config: TrainingConfig, train: Dataset | None = None, test: Dataset | None = None) -> list:
    """Run ``config.rounds`` rounds of attacked federated training; one RoundLog per round."""
    config.validate()
    if train is None or test is None:
        train, test = make_synthetic_task(config)
    k = config.num_clients
    byz = config.byzantine_indices
    byz_sorted = sorted(byz)

    if config.dirichlet_beta is None:
        parts = iid_partition(len(train), k, config.seed)
    else:
        parts = dirichlet_partition(train.labels, k, config.dirichlet_beta, config.seed, min_size=1)
    shards = [train.subset(p) for p in parts]
    if config.attack.kind == "label_flip":
        for i in byz_sorted:
            s = shards[i]
            shards[i] = Dataset(s.features, flip_labels(s.labels, s.num_classes), s.num_classes)

    model = ModelState.zeros(train.features.shape[1], train.num_classes)
    aggregator = make_aggregator(config.defense, k)
    adam = _Adam(model.num_params) if config.optimizer == "adam" else None
    logs = []
    for t in range(1, config.rounds + 1):
        honest = np.vstack([
            local_update(model, shards[i], config.batch_size, client_seed(config.seed, i, t)) for i in range(k)
        ])
        updates = craft_attack(config.attack, honest, byz_sorted, client_seed(config.seed, k, t))
        g = aggregator(updates)
        if config.weight_decay:
            g = g + config.weight_decay * model.flat()
        model = model.step(adam.direction(g) if adam else g, config.lr)
        benign = aggregator.benign_set
        logs.append(RoundLog(t, loss(model, train), accuracy(model, test), benign,
                             detection_accuracy(benign, byz, k)))
    return logs


def with_overrides(config: TrainingConfig, **kwargs) -> TrainingConfig:
    return replace(config, **kwargs)
