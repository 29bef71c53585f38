"""Mini-batch Adam training with early stopping on validation AUC-PRC."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import EmptySplit
from ..evaluation import auc_prc
from .adam import AdamState, adam_step
from .network import RecurrentNet, RnnHyper, bce


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_score: list = field(default_factory=list)
    monitor: str = "auc_prc"
    stopped_epoch: int = 0
    best_epoch: int = 0
    metadata: dict = field(default_factory=dict)


class EarlyStopping:
    """Stop after ``patience`` epochs without an improvement larger than ``min_delta``."""

    def __init__(self, patience: int = 10, min_delta: float = 1e-6):
        self.patience = patience
        self.min_delta = min_delta
        self.best = -np.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, score: float, epoch: int) -> tuple[bool, bool]:
        """Returns (improved, should_stop)."""
        if score > self.best + self.min_delta:
            self.best, self.best_epoch, self.wait = score, epoch, 0
            return True, False
        self.wait += 1
        return False, self.wait >= self.patience


def _as_arrays(data):
    if hasattr(data, "values") and hasattr(data, "labels"):
        return np.asarray(data.values, dtype=float), np.asarray(data.labels, dtype=float)
    X, y = data
    return np.asarray(X, dtype=float), np.asarray(y, dtype=float)


def train(net: RecurrentNet, train_set, val_set, hyper: RnnHyper,
          monitor: Callable[[RecurrentNet], float] | None = None):
    """Fit ``net`` in place and return ``(net, history)`` with the best weights restored.

    The validation monitor is AUC-PRC; if the validation set has no positives
    it falls back to negative validation loss, noted in ``history.monitor``.
    """
    X, y = _as_arrays(train_set)
    Xv, yv = _as_arrays(val_set)
    if X.shape[0] == 0 or Xv.shape[0] == 0:
        raise EmptySplit("training and validation sets must be non-empty")

    hist = TrainHistory(metadata={
        "init": "glorot_uniform kernels and recurrent kernels, zero biases",
        "seed": hyper.seed,
        "batch_size": hyper.batch_size,
    })
    if monitor is None:
        if yv.sum() > 0:
            monitor = lambda m: auc_prc(yv, m.predict_proba(Xv))
        else:
            hist.monitor = "neg_val_loss"
            monitor = lambda m: -bce(m.predict_proba(Xv), yv)
    else:
        hist.monitor = getattr(monitor, "__name__", "custom")

    params = dict(net.named_params())
    state = AdamState()
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(hyper.seed).spawn(1)[0])
    stopper = EarlyStopping(hyper.patience, hyper.min_delta)
    best = net.get_flat()
    n, bs = X.shape[0], hyper.batch_size

    for epoch in range(1, hyper.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            loss, grads = net.loss_and_grad(X[idx], y[idx])
            adam_step(params, grads, state, hyper.learning_rate)
            total += loss * idx.size
        hist.train_loss.append(total / n)
        score = float(monitor(net))
        hist.val_score.append(score)
        improved, stop = stopper.update(score, epoch)
        if improved:
            best = net.get_flat()
        hist.stopped_epoch = epoch
        if stop:
            break

    hist.best_epoch = stopper.best_epoch
    net.set_flat(best)
    return net, hist
