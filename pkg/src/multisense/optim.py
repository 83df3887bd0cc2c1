"""Adam updates, validation-loss early stopping and the mini-batch training loop."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, StateError, TrainingError
from .graph import Graph
from .layers import softmax_cross_entropy, softmax_cross_entropy_grad

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 600
    patience: int = 20
    min_delta: float = 0.01
    batch_size: int = 64
    seed: int = 0


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "AdamState":
        return cls(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)


def adam_step(pairs: list[tuple[np.ndarray, np.ndarray]], state: AdamState) -> AdamState:
    """Apply one bias-corrected Adam update in place to every (param, grad) pair.

    Moment buffers are created on the first call; afterwards the list of
    parameter shapes must not change.
    """
    if not state.m:
        state.m = [np.zeros_like(p) for p, _ in pairs]
        state.v = [np.zeros_like(p) for p, _ in pairs]
    if len(pairs) != len(state.m) or any(p.shape != m.shape or g.shape != m.shape
                                         for (p, g), m in zip(pairs, state.m)):
        raise StateError("parameter list does not match the optimizer state")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.t
    corr2 = 1.0 - b2 ** state.t
    for (p, g), m, v in zip(pairs, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
    return state


@dataclass
class EarlyStopping:
    """Stop once the validation loss has failed to beat its best by more than
    ``min_delta`` for ``patience`` consecutive epochs.

    ``best_loss`` is the lowest loss seen so far, whether or not that epoch
    counted as an improvement, so a slow steady decline of less than
    ``min_delta`` per epoch still runs out of patience.
    """

    patience: int = 20
    min_delta: float = 0.01
    best_loss: float = math.inf
    epochs_since_improvement: int = 0

    # absorbs representation error so that e.g. 1.00 -> 0.99 counts as exactly 0.01
    _slack = 1e-12

    def update(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; True means stop."""
        if not math.isfinite(val_loss):
            raise TrainingError(f"validation loss is {val_loss}; training diverged")
        if self.best_loss - val_loss - self.min_delta > self._slack:
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1
        self.best_loss = min(self.best_loss, val_loss)
        return self.epochs_since_improvement >= self.patience


@dataclass
class ArrayDataset:
    """Batched model inputs keyed by entry-point name, plus integer labels."""

    inputs: dict[str, np.ndarray]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def take(self, idx) -> "ArrayDataset":
        return ArrayDataset({k: v[idx] for k, v in self.inputs.items()}, self.labels[idx])


@dataclass
class TrainResult:
    graph: Graph
    history: list[tuple[int, float, float]]  # (epoch, train_loss, val_loss)
    stopped_early: bool = False

    @property
    def epochs_ran(self) -> int:
        return len(self.history)


def iter_batches(n: int, batch_size: int):
    for start in range(0, n, batch_size):
        yield slice(start, min(start + batch_size, n))


def evaluate_loss(graph: Graph, data: ArrayDataset, batch_size: int = 256) -> float:
    total = 0.0
    for sl in iter_batches(len(data), batch_size):
        part = data.take(sl)
        loss, _ = softmax_cross_entropy(graph.forward(part.inputs, keep_cache=False), part.labels)
        total += loss * len(part)
    return total / len(data)


def train(graph: Graph, train_data: ArrayDataset, val_data: ArrayDataset, cfg: TrainConfig) -> TrainResult:
    """Mini-batch Adam on mean cross-entropy with per-epoch validation early stopping.

    The weights of the last epoch run are kept.
    """
    if len(train_data) == 0 or len(val_data) == 0:
        raise ArgumentError("training and validation sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.from_config(cfg)
    stopper = EarlyStopping(cfg.patience, cfg.min_delta)
    history: list[tuple[int, float, float]] = []
    stopped = False
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_data))
        running = 0.0
        for sl in iter_batches(len(order), cfg.batch_size):
            batch = train_data.take(order[sl])
            loss, probs = softmax_cross_entropy(graph.forward(batch.inputs), batch.labels)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            graph.backward(softmax_cross_entropy_grad(probs, batch.labels), input_grads=False)
            adam_step([(p, g) for _, _, p, g in graph.parameters()], state)
            running += loss * len(batch)
        val_loss = evaluate_loss(graph, val_data)
        history.append((epoch, running / len(train_data), val_loss))
        logger.debug("epoch %d train %.4f val %.4f", epoch, history[-1][1], val_loss)
        if stopper.update(val_loss):
            stopped = True
            break
    return TrainResult(graph, history, stopped)
