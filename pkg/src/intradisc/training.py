"""Mini-batch Adam training with global-norm clipping and dev-loss early stopping."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .encoder import Params

log = logging.getLogger(__name__)

SCRATCH_LR = 1e-3
CONTEXTUAL_LR = 5e-5


class TrainConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    """Non-finite loss or gradients; carries where it happened."""

    def __init__(self, epoch: int, batch: int, norm: float, loss: float):
        super().__init__(f"non-finite training state at epoch {epoch}, batch {batch}: loss={loss}, grad norm={norm}")
        self.epoch, self.batch, self.norm, self.loss = epoch, batch, norm, loss


@dataclass
class TrainConfig:
    learning_rate: Optional[float] = None  # None: 1e-3 from scratch, 5e-5 with contextual vectors
    batch_size: int = 32
    max_grad_norm: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 5
    max_epochs: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise TrainConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise TrainConfigError("batch_size and max_epochs must be positive")
        if not self.max_grad_norm > 0 or not self.eps > 0:
            raise TrainConfigError("max_grad_norm and eps must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise TrainConfigError("Adam betas must lie in (0, 1)")
        if self.patience < 1:
            raise TrainConfigError("patience must be at least 1")

    def lr_for(self, encoder_mode: str) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return CONTEXTUAL_LR if encoder_mode == "contextual" else SCRATCH_LR

    def to_dict(self) -> dict:
        return asdict(self)


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm: float):
    """Scale all gradients by ``max_norm / norm`` when the global norm exceeds ``max_norm``."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


class Adam:
    def __init__(self, params: Params, keys: Iterable[str], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.keys = list(keys)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(params[k]) for k in self.keys}
        self.v = {k: np.zeros_like(params[k]) for k in self.keys}
        self.t = 0

    def step(self, params: Params, grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1 - b2**self.t) / (1 - b1**self.t)
        for k in self.keys:
            g = grads[k]
            self.m[k] *= b1
            self.m[k] += (1 - b1) * g
            self.v[k] *= b2
            self.v[k] += (1 - b2) * g * g
            params[k] -= lr_t * self.m[k] / (np.sqrt(self.v[k]) + self.eps)


class EarlyStopping:
    """Tracks the best dev loss; ``step`` returns True once ``patience`` epochs pass without improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def step(self, epoch: int, loss: float) -> bool:
        if loss < self.best:
            self.best, self.best_epoch, self.bad_epochs = loss, epoch, 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_loss: float
    wall_time: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit(
    params: Params,
    trainable: Sequence[str],
    loss_and_grads: Callable[[list], tuple],
    dev_loss: Callable[[list], float],
    train_items: list,
    dev_items: list,
    cfg: TrainConfig,
    lr: float,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
):
    """Train ``params`` in place; returns ``(best_params, records)``.

    Batches are drawn from a seeded permutation each epoch, so runs are
    reproducible for a fixed seed and data order.
    """
    cfg.validate()
    if not train_items or not dev_items:
        raise TrainConfigError("training and dev sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(params, trainable, lr, cfg.beta1, cfg.beta2, cfg.eps)
    stopper = EarlyStopping(cfg.patience)
    best = {k: v.copy() for k, v in params.items()}
    records: List[EpochRecord] = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_items))
        total, count = 0.0, 0
        for b, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = [train_items[i] for i in order[start : start + cfg.batch_size]]
            loss, grads = loss_and_grads(batch)
            grads = {k: grads[k] for k in trainable}
            grads, norm = clip_by_global_norm(grads, cfg.max_grad_norm)
            if not (np.isfinite(loss) and np.isfinite(norm)):
                raise TrainingError(epoch, b, norm, loss)
            opt.step(params, grads)
            total += loss * len(batch)
            count += len(batch)
        d_loss = dev_loss(dev_items)
        rec = EpochRecord(epoch, total / count, d_loss, time.perf_counter() - t0)
        records.append(rec)
        log.info("epoch %d train %.4f dev %.4f", epoch, rec.train_loss, rec.dev_loss)
        if on_epoch:
            on_epoch(rec)
        stop = stopper.step(epoch, d_loss)
        if stopper.best_epoch == epoch:
            best = {k: v.copy() for k, v in params.items()}
        if stop:
            break
    return best, records
