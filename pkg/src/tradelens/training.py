"""Cross-entropy training with mini-batch SGD (+momentum), evaluation
metrics, and the loss-curve artifact.

Training is deterministic: (seed, data, config) fully determines the trained
parameters. Weight init draws from seed, per-epoch shuffles from seed + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .layers import (
    ConvSpec,
    GapSpec,
    LayerSpec,
    LeakyReluSpec,
    MaxPoolSpec,
    SoftmaxSpec,
    _conv_input_backward_batch,
    _conv_param_backward_batch,
    _scatter_batch,
    gap_backward,
    leaky_relu_backward,
    softmax_cross_entropy_backward,
)
from .network import Network, default_architecture
from .data import DatasetSplit, InputWindow

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "EvalReport",
    "cross_entropy_loss",
    "build_network",
    "train",
    "evaluate",
    "write_loss_curve",
]

_PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    epochs: int = 15
    batch_size: int = 32
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    leaky_slope: float = 0.01
    architecture: Optional[Sequence[LayerSpec]] = None
    n_states: int = 2

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError("momentum must lie in [0, 1)")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ConfigurationError("leaky_slope must lie in (0, 1)")
        if self.n_states < 2:
            raise ConfigurationError("n_states must be >= 2")

    def resolved_architecture(self) -> list[LayerSpec]:
        if self.architecture is not None:
            return list(self.architecture)
        arch = default_architecture(self.n_states)
        return [
            LeakyReluSpec(self.leaky_slope) if isinstance(s, LeakyReluSpec) else s
            for s in arch
        ]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    eval_accuracy: Optional[float]


@dataclass
class EvalReport:
    """Argmax-prediction quality summary; confusion is indexed [true, predicted]."""

    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    confusion: np.ndarray
    n_samples: int

    @property
    def class_counts(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    def format_text(self) -> str:
        k = self.confusion.shape[0]
        lines = [
            "samples:  %d" % self.n_samples,
            "accuracy: %.4f" % self.accuracy,
            "class balance: %s"
            % " ".join(
                "%d:%.3f" % (s, c / self.n_samples) for s, c in enumerate(self.class_counts)
            ),
        ]
        for s in range(k):
            lines.append(
                "state %d: precision %.4f  recall %.4f" % (s, self.precision[s], self.recall[s])
            )
        lines.append("confusion (rows=true, cols=predicted):")
        for s in range(k):
            lines.append("  " + " ".join("%6d" % c for c in self.confusion[s]))
        return "\n".join(lines)

    def to_csv_text(self) -> str:
        k = self.confusion.shape[0]
        out = ["metric,value"]
        out.append("n_samples,%d" % self.n_samples)
        out.append("accuracy,%s" % repr(self.accuracy))
        for s in range(k):
            out.append("precision_%d,%s" % (s, repr(float(self.precision[s]))))
            out.append("recall_%d,%s" % (s, repr(float(self.recall[s]))))
        for t in range(k):
            for p in range(k):
                out.append("confusion_%d_%d,%d" % (t, p, self.confusion[t, p]))
        return "\n".join(out) + "\n"


def cross_entropy_loss(probs: np.ndarray, label: int) -> float:
    """-log of the labeled probability, floored at 1e-12 before the log."""
    probs = np.asarray(probs)
    if not 0 <= label < probs.shape[-1]:
        raise ValueError("label %d outside the %d known states" % (label, probs.shape[-1]))
    return float(-math.log(max(float(probs[label]), _PROB_FLOOR)))


def build_network(cfg: TrainConfig, in_channels: int = 1) -> Network:
    """Seeded network matching the config's architecture and state count."""
    arch = cfg.resolved_architecture()
    convs = [s for s in arch if isinstance(s, ConvSpec)]
    if convs and convs[-1].out_channels != cfg.n_states:
        raise ConfigurationError(
            "architecture's final conv emits %d channels but n_states is %d"
            % (convs[-1].out_channels, cfg.n_states)
        )
    return Network.initialize(arch, in_channels=in_channels, seed=cfg.seed)


def _windows_to_arrays(windows: Sequence[InputWindow]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([w.values for w in windows]).astype(np.float64)[:, None, :, :]
    labels = [w.label for w in windows]
    if any(l is None for l in labels):
        raise ValueError("every window must carry a label")
    return x, np.asarray(labels, dtype=np.int64)


def _batch_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, _PROB_FLOOR)).mean())


def _backward_sweep(net: Network, caches: list, grad_logits: np.ndarray):
    """Walk the layers in reverse from the logits, collecting parameter grads."""
    grads = [None] * len(net.specs)
    g = grad_logits
    for i in range(len(net.specs) - 1, -1, -1):
        spec = net.specs[i]
        cache = caches[i]
        if isinstance(spec, SoftmaxSpec):
            continue  # fused with the cross-entropy gradient
        if isinstance(spec, GapSpec):
            g = gap_backward(g, cache["input"].shape)
        elif isinstance(spec, ConvSpec):
            grads[i] = _conv_param_backward_batch(g, cache["input"], net.banks[i])
            g = _conv_input_backward_batch(g, net.banks[i])
        elif isinstance(spec, LeakyReluSpec):
            g = leaky_relu_backward(g, cache["input"], spec.slope)
        elif isinstance(spec, MaxPoolSpec):
            g = _scatter_batch(g, cache["switches"], cache["input"].shape)
    return grads


def train(net: Network, split: DatasetSplit, cfg: TrainConfig) -> list[EpochRecord]:
    """Mini-batch SGD over the split's training windows; mutates net in place.

    Per-epoch eval accuracy is recorded when the split has evaluation windows.
    Raises ConfigurationError before the first epoch if any label falls
    outside the network's state count.
    """
    x_train, y_train = _windows_to_arrays(split.train)
    if y_train.max(initial=0) >= net.n_states:
        raise ConfigurationError(
            "label %d outside the network's %d states" % (y_train.max(), net.n_states)
        )
    x_eval = y_eval = None
    if split.eval:
        x_eval, y_eval = _windows_to_arrays(split.eval)

    shuffle_rng = np.random.default_rng(cfg.seed + 1)
    velocity = [
        (np.zeros_like(b.weights), np.zeros_like(b.biases)) if b is not None else None
        for b in net.banks
    ]
    n = len(y_train)
    records = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            probs, caches = net.forward_batch(xb, keep_cache=True)
            loss_sum += _batch_loss(probs, yb) * len(idx)
            grad_logits = softmax_cross_entropy_backward(probs, yb) / len(idx)
            grads = _backward_sweep(net, caches, grad_logits)
            for i, g in enumerate(grads):
                if g is None:
                    continue
                dw, db = g
                vw, vb = velocity[i]
                vw *= cfg.momentum
                vw -= cfg.learning_rate * dw
                vb *= cfg.momentum
                vb -= cfg.learning_rate * db
                net.banks[i].weights += vw
                net.banks[i].biases += vb
        eval_acc = None
        if x_eval is not None:
            eval_acc = float(
                (net.predict_proba(x_eval).argmax(axis=1) == y_eval).mean()
            )
        records.append(EpochRecord(epoch, loss_sum / n, eval_acc))
    return records


def evaluate(net: Network, windows: Sequence[InputWindow]) -> EvalReport:
    """Score argmax predictions over labeled windows. Never mutates net."""
    if not windows:
        raise ValueError("cannot evaluate on an empty window list")
    x, y = _windows_to_arrays(windows)
    k = net.n_states
    if y.max() >= k:
        raise ValueError("label %d outside the network's %d states" % (y.max(), k))
    preds = net.predict_proba(x).argmax(axis=1)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y, preds), 1)
    predicted_counts = confusion.sum(axis=0)
    true_counts = confusion.sum(axis=1)
    diag = np.diag(confusion).astype(np.float64)
    precision = np.divide(
        diag, predicted_counts, out=np.zeros(k), where=predicted_counts > 0
    )
    recall = np.divide(diag, true_counts, out=np.zeros(k), where=true_counts > 0)
    return EvalReport(
        accuracy=float(diag.sum() / len(y)),
        precision=precision,
        recall=recall,
        confusion=confusion,
        n_samples=len(y),
    )


def write_loss_curve(records: Sequence[EpochRecord], path) -> None:
    """CSV artifact: epoch,train_loss,eval_accuracy (accuracy blank if unknown)."""
    lines = ["epoch,train_loss,eval_accuracy"]
    for r in records:
        acc = "" if r.eval_accuracy is None else repr(r.eval_accuracy)
        lines.append("%d,%s,%s" % (r.epoch, repr(r.train_loss), acc))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")
