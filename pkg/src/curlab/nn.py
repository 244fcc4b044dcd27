"""Probabilistic dense classifiers trained by SGD with Nesterov momentum.

Softmax regression is the degenerate case with no hidden layers; hidden
layers use rectified linear activations. Forward/backward run on the
selected kernel backend (compiled or NumPy, see curlab.kernels).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .augment import AugmentConfig, apply_augment
from .rng import derive_rng


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None, round_index: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.round_index = round_index


@dataclass
class ModelParams:
    """Dense parameters; sizes = (input, hidden..., classes)."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.sizes) < 2:
            raise ValueError("architecture needs at least input and output sizes")
        for i, s in enumerate(self.sizes):
            if s < 1:
                raise ValueError(f"layer {i} has zero width")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.sizes) - 1:
            raise ValueError("parameter count does not match architecture")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"layer {i} parameter shapes do not match architecture")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i} has non-finite parameters")

    @property
    def n_classes(self) -> int:
        return self.sizes[-1]

    @property
    def n_features(self) -> int:
        return self.sizes[0]

    def copy(self) -> "ModelParams":
        return ModelParams(self.sizes, [w.copy() for w in self.weights],
                           [b.copy() for b in self.biases])

    def allclose(self, other: "ModelParams", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        return self.sizes == other.sizes and all(
            np.allclose(a, b, rtol=rtol, atol=atol)
            for a, b in zip(self.weights + self.biases, other.weights + other.biases))


@dataclass
class Grads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_params(sizes: tuple[int, ...] | list[int], seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases; deterministic under seed."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ValueError("architecture needs at least input and output sizes")
    for i, s in enumerate(sizes):
        if s < 1:
            raise ValueError(f"layer {i} has zero width")
    rng = derive_rng(seed, "init")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(sizes, weights, biases)


def forward_probs(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != params.n_features:
        raise ValueError(f"expected a vector of {params.n_features} features, got shape {x.shape}")
    return predict_proba(params, x[None, :])[0]


def predict_proba(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Class probabilities for a batch, shape (n, K)."""
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.n_features:
        raise ValueError(f"expected (n, {params.n_features}) features, got shape {features.shape}")
    return kernels.forward(params.weights, params.biases, features)


def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Argmax classes; exact ties resolve to the lowest class index."""
    return np.argmax(predict_proba(params, features), axis=1)


def classification_error(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(predict(params, features) != labels))


def cross_entropy(probs: np.ndarray, target: int | np.ndarray) -> float:
    """-sum_k target_k * log(probs_k), with log clamped at probs >= 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    logp = np.log(np.maximum(probs, kernels.LOG_CLAMP))
    if np.isscalar(target) or np.ndim(target) == 0:
        return float(-logp[int(target)])
    target = np.asarray(target, dtype=np.float64)
    if target.shape != probs.shape:
        raise ValueError("soft target shape must match probs")
    return float(-(target * logp).sum())


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def backward(params: ModelParams, features: np.ndarray,
             targets: np.ndarray) -> tuple[float, Grads]:
    """Mean cross-entropy over the batch and its exact analytic gradients.

    targets is either an int label vector or an (n, K) soft-target matrix.
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) == 0:
        raise ValueError("batch must be a non-empty 2-D array")
    targets = np.asarray(targets)
    if targets.ndim == 1:
        targets = one_hot(targets, params.n_classes)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    loss, gw, gb = kernels.backward(params.weights, params.biases, features, targets)
    return loss, Grads(gw, gb)


@dataclass
class OptimizerState:
    """Nesterov-momentum velocity buffers plus the optimizer hyperparameters."""

    velocities_w: list[np.ndarray]
    velocities_b: list[np.ndarray]
    momentum: float
    weight_decay: float
    lr0: float
    epoch: int = 0

    @classmethod
    def for_params(cls, params: ModelParams, momentum: float, weight_decay: float,
                   lr0: float) -> "OptimizerState":
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")
        return cls([np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(b) for b in params.biases],
                   momentum, weight_decay, lr0)


def sgd_step(params: ModelParams, grads: Grads, state: OptimizerState, lr: float) -> None:
    """One Nesterov step, in place:

        g~ = g + weight_decay * theta
        v  = momentum * v - lr * g~
        theta = theta + momentum * v - lr * g~
    """
    mu, wd = state.momentum, state.weight_decay
    for theta, g, v in zip(params.weights + params.biases,
                           grads.weights + grads.biases,
                           state.velocities_w + state.velocities_b):
        if not np.isfinite(g).all():
            raise DivergenceError("non-finite gradient")
        gt = g + wd * theta
        v *= mu
        v -= lr * gt
        theta += mu * v - lr * gt


def cosine_lr(epoch: int, total_epochs: int, lr0: float, lr_min: float = 0.0) -> float:
    """Cosine annealing from lr0 at epoch 0 to lr_min at epoch == total_epochs."""
    if not 0 <= epoch <= total_epochs:
        raise ValueError("epoch must be in [0, total_epochs]")
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + math.cos(math.pi * epoch / total_epochs))


@dataclass
class SwaState:
    """Running average of parameter snapshots on a fixed epoch cycle."""

    average: ModelParams
    count: int
    start_epoch: int
    cycle: int

    @classmethod
    def fresh(cls, params: ModelParams, start_epoch: int, cycle: int) -> "SwaState":
        zero = ModelParams(params.sizes, [np.zeros_like(w) for w in params.weights],
                           [np.zeros_like(b) for b in params.biases])
        return cls(zero, 0, start_epoch, cycle)

    def due(self, epoch: int) -> bool:
        return epoch >= self.start_epoch and (epoch - self.start_epoch) % self.cycle == 0


def swa_update(state: SwaState, params: ModelParams) -> SwaState:
    """Fold a snapshot into the running mean: avg <- (avg*n + params)/(n+1)."""
    n = state.count
    for avg, p in zip(state.average.weights + state.average.biases,
                      params.weights + params.biases):
        avg *= n / (n + 1)
        avg += p / (n + 1)
    state.count = n + 1
    return state


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run (one curriculum round)."""

    epochs: int = 200
    batch_size: int = 64
    lr: float = 0.1
    lr_min: float = 0.0
    momentum: float = 0.9
    weight_decay: float = 5e-4
    swa_start: int = 120
    swa_cycle: int = 5
    use_swa: bool = True
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr_min > self.lr:
            raise ValueError("lr_min must be <= lr")
        if self.swa_cycle < 1:
            raise ValueError("swa_cycle must be >= 1")


@dataclass
class TrainLog:
    losses: list[float] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)
    swa_snapshots: int = 0


def train(features: np.ndarray, targets: np.ndarray, config: TrainConfig,
          params: ModelParams, seed: int) -> tuple[ModelParams, TrainLog]:
    """Shuffled mini-batch SGD under the cosine schedule; mutates `params`.

    Returns the SWA-averaged parameters when SWA accumulated at least one
    snapshot, else the final-epoch parameters. targets may be hard labels or
    (n, K) soft vectors; with epochs == 0 the initial params come back
    unchanged.
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    n = len(features)
    if n == 0:
        raise ValueError("training set must be non-empty")
    targets = np.asarray(targets)
    soft = targets if targets.ndim == 2 else one_hot(targets, params.n_classes)
    soft = np.ascontiguousarray(soft, dtype=np.float64)

    state = OptimizerState.for_params(params, config.momentum, config.weight_decay, config.lr)
    swa = SwaState.fresh(params, config.swa_start, config.swa_cycle) if config.use_swa else None
    shuffle_rng = derive_rng(seed, "shuffle")
    augment_rng = derive_rng(seed, "augment")
    log = TrainLog()

    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config.epochs, config.lr, config.lr_min)
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            rows = order[start:start + config.batch_size]
            bx, bt = apply_augment(features[rows], soft[rows], config.augment, augment_rng)
            loss, grads = backward(params, bx, bt)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            try:
                sgd_step(params, grads, state, lr)
            except DivergenceError as exc:
                raise DivergenceError(f"non-finite gradient at epoch {epoch}", epoch=epoch) from exc
            epoch_loss += loss * len(rows)
        state.epoch = epoch + 1
        log.losses.append(epoch_loss / n)
        log.lrs.append(lr)
        if swa is not None and swa.due(epoch):
            swa_update(swa, params)

    if swa is not None and swa.count > 0:
        log.swa_snapshots = swa.count
        return swa.average, log
    return params, log


def save_checkpoint(path: str | Path, params: ModelParams, swa: SwaState | None = None,
                    config_hash: str | None = None) -> None:
    """Self-describing JSON container: arch, row-major flat arrays, SWA, hash."""
    payload = {
        "format": "curlab-checkpoint-v1",
        "sizes": list(params.sizes),
        "weights": [w.ravel(order="C").tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "swa": None if swa is None else {
            "count": swa.count,
            "start_epoch": swa.start_epoch,
            "cycle": swa.cycle,
            "weights": [w.ravel(order="C").tolist() for w in swa.average.weights],
            "biases": [b.tolist() for b in swa.average.biases],
        },
        "config_hash": config_hash,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[ModelParams, SwaState | None, str | None]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "curlab-checkpoint-v1":
        raise ValueError(f"{path}: not a curlab checkpoint")
    sizes = tuple(payload["sizes"])

    def unflatten(flat_ws, flat_bs):
        ws = [np.asarray(w, dtype=np.float64).reshape(sizes[i], sizes[i + 1])
              for i, w in enumerate(flat_ws)]
        bs = [np.asarray(b, dtype=np.float64) for b in flat_bs]
        return ws, bs

    ws, bs = unflatten(payload["weights"], payload["biases"])
    params = ModelParams(sizes, ws, bs)
    swa = None
    if payload.get("swa") is not None:
        s = payload["swa"]
        aws, abs_ = unflatten(s["weights"], s["biases"])
        swa = SwaState(ModelParams(sizes, aws, abs_), s["count"], s["start_epoch"], s["cycle"])
    return params, swa, payload.get("config_hash")
