"""Training loop: stratified split, mini-batch BCE optimization, reporting.

Gradients for a batch are accumulated one sample at a time, each backward
pass scaled by 1/batch so the parameter gradients hold the batch mean when
the optimizer steps.  All shuffling and dropout randomness derives from the
config seed, making a full fit bit-reproducible on one platform.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from aquasight.dataset import ImageSample
from aquasight.network import Network
from aquasight.rng import make_rng
from aquasight.tensor import BCE_EPS, Tensor, binary_cross_entropy

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd-momentum")


class TrainingDivergedError(RuntimeError):
    """Loss went non-finite; message names the epoch and batch."""


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 5e-4
    optimizer: str = "adam"
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    split_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be a positive integer, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be a positive integer, got {self.batch_size}")
        # zero is allowed so a null update can be expressed; negatives are not
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ValueError("adam betas must be in (0, 1)")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError(f"split_fraction must be in (0, 1), got {self.split_fraction}")


@dataclass
class TrainReport:
    """Per-epoch losses and timings plus final validation figures."""

    train_losses: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    validation_loss: Optional[float] = None
    validation_accuracy: Optional[float] = None
    train_size: int = 0
    validation_size: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.train_losses)

    @property
    def final_train_loss(self) -> Optional[float]:
        return self.train_losses[-1] if self.train_losses else None

    def to_json_dict(self) -> dict:
        return {
            "format": "aquasight-train-report",
            "version": 1,
            "epochs_run": self.epochs_run,
            "train_size": self.train_size,
            "validation_size": self.validation_size,
            "train_loss_per_epoch": self.train_losses,
            "epoch_seconds": self.epoch_seconds,
            "final_train_loss": self.final_train_loss,
            "validation_loss": self.validation_loss,
            "validation_accuracy": self.validation_accuracy,
        }

    def to_text(self) -> str:
        def fmt(value: Optional[float]) -> str:
            return "undefined" if value is None else f"{value:.6f}"

        lines = [
            f"epochs_run {self.epochs_run}",
            f"train_size {self.train_size}",
            f"validation_size {self.validation_size}",
            f"final_train_loss {fmt(self.final_train_loss)}",
            f"validation_loss {fmt(self.validation_loss)}",
            f"validation_accuracy {fmt(self.validation_accuracy)}",
            f"total_seconds {sum(self.epoch_seconds):.3f}",
        ]
        for i, (loss, secs) in enumerate(zip(self.train_losses, self.epoch_seconds), start=1):
            lines.append(f"epoch {i} loss {loss:.6f} seconds {secs:.3f}")
        return "\n".join(lines) + "\n"


def bce_loss(predictions: Sequence[float], labels: Sequence[int]) -> float:
    """Mean binary cross-entropy with predictions clamped to [eps, 1-eps]."""
    if len(predictions) == 0:
        raise ValueError("predictions must be nonempty")
    if len(predictions) != len(labels):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels")
    p = np.clip(np.asarray(predictions, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(labels, dtype=np.float64)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be 0 or 1")
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def split(samples: Sequence[ImageSample], fraction: float, seed: int):
    """Deterministic stratified partition into (train, validation).

    The train side takes floor(fraction * N) samples, apportioned per class
    by largest remainder so each class's share is within one sample of its
    exact quota.  105 samples at 0.75 give the historical 78/27.
    """
    if len(samples) == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(samples)
    train_total = int(math.floor(fraction * n))
    if train_total == 0 or train_total == n:
        raise ValueError(
            f"fraction {fraction} leaves an empty side for {n} samples")

    by_class: dict[int, list[int]] = {}
    for i, sample in enumerate(samples):
        by_class.setdefault(sample.label, []).append(i)

    labels = sorted(by_class)
    quotas = {c: int(math.floor(fraction * len(by_class[c]))) for c in labels}
    remainders = sorted(
        labels,
        key=lambda c: (fraction * len(by_class[c])) - quotas[c],
        reverse=True,
    )
    short = train_total - sum(quotas.values())
    for c in remainders[:short]:
        quotas[c] += 1

    rng = make_rng(seed, "split")
    train_idx: list[int] = []
    val_idx: list[int] = []
    for c in labels:
        order = np.array(by_class[c])
        rng.shuffle(order)
        train_idx.extend(order[:quotas[c]].tolist())
        val_idx.extend(order[quotas[c]:].tolist())
    mixed = np.array(train_idx)
    rng.shuffle(mixed)
    train = [samples[i] for i in mixed.tolist()]
    validation = [samples[i] for i in sorted(val_idx)]
    return train, validation


class _Adam:
    def __init__(self, config: TrainConfig):
        self.cfg = config
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: list[tuple[str, Tensor]]) -> None:
        cfg = self.cfg
        self.t += 1
        for name, p in params:
            g = p.grad
            m = self.m.setdefault(name, np.zeros_like(p.data))
            v = self.v.setdefault(name, np.zeros_like(p.data))
            m += (1.0 - cfg.beta1) * (g - m)
            v += (1.0 - cfg.beta2) * (g * g - v)
            m_hat = m / (1.0 - cfg.beta1 ** self.t)
            v_hat = v / (1.0 - cfg.beta2 ** self.t)
            p.data -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


class _SgdMomentum:
    def __init__(self, config: TrainConfig):
        self.cfg = config
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: list[tuple[str, Tensor]]) -> None:
        cfg = self.cfg
        for name, p in params:
            vel = self.velocity.setdefault(name, np.zeros_like(p.data))
            vel *= cfg.momentum
            vel += p.grad
            p.data -= cfg.learning_rate * vel


def _make_optimizer(config: TrainConfig):
    return _Adam(config) if config.optimizer == "adam" else _SgdMomentum(config)


def fit(
    net: Network,
    train_samples: Sequence[ImageSample],
    config: TrainConfig,
    validation_samples: Optional[Sequence[ImageSample]] = None,
) -> TrainReport:
    """Optimize the network on the training set; evaluate once at the end if
    a validation set is given.  The network is left in eval mode on return."""
    if net.mode != "train":
        raise ValueError("network must be in train mode before fit")
    if len(train_samples) == 0:
        raise ValueError("training set is empty")

    net.seed_dropout(config.seed)
    shuffle_rng = make_rng(config.seed, "shuffle")
    optimizer = _make_optimizer(config)
    params = net.sorted_params()

    report = TrainReport(train_size=len(train_samples),
                         validation_size=len(validation_samples or ()))
    n = len(train_samples)
    try:
        for epoch in range(1, config.epochs + 1):
            started = time.perf_counter()
            order = shuffle_rng.permutation(n)
            epoch_loss = 0.0
            for batch_no, start in enumerate(range(0, n, config.batch_size), start=1):
                batch = order[start:start + config.batch_size]
                net.zero_grad()
                batch_loss = 0.0
                for i in batch:
                    sample = train_samples[int(i)]
                    out = net.forward(Tensor(sample.pixels))
                    loss = binary_cross_entropy(out, float(sample.label))
                    batch_loss += float(loss.data)
                    loss.backward(upstream=1.0 / len(batch))
                if not math.isfinite(batch_loss):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, batch {batch_no}")
                optimizer.step(params)
                epoch_loss += batch_loss
            report.train_losses.append(epoch_loss / n)
            report.epoch_seconds.append(time.perf_counter() - started)
            log.info("epoch %d/%d loss %.6f (%.2fs)", epoch, config.epochs,
                     report.train_losses[-1], report.epoch_seconds[-1])
    finally:
        net.eval()

    if validation_samples:
        raws = [net.forward(Tensor(s.pixels)).data.item() for s in validation_samples]
        labels = [s.label for s in validation_samples]
        report.validation_loss = bce_loss(raws, labels)
        correct = sum(1 for r, y in zip(raws, labels) if (1 if r >= 0.5 else 0) == y)
        report.validation_accuracy = correct / len(labels)
        log.info("validation loss %.6f accuracy %.6f",
                 report.validation_loss, report.validation_accuracy)
    return report


def write_report(report: TrainReport, text_path, json_path) -> None:
    """Persist a report in both documented forms next to the weights."""
    from pathlib import Path

    Path(text_path).write_text(report.to_text())
    Path(json_path).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
