"""ADAM with a step-decay learning-rate schedule, shared by every trained component."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 80
    batch_size: int = 256
    lr: float = 0.5
    halving_period: int = 3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_mode: str = "rt"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.halving_period < 1:
            raise ValueError("epochs, batch size and halving period must be positive")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.init_mode not in ("rt", "random"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")

    def rate(self, epoch: int) -> float:
        """Step size for 0-based ``epoch``: halved every ``halving_period`` epochs."""
        return self.lr * 0.5 ** (epoch // self.halving_period)


_CHUNK = 1 << 14


class Adam:
    """In-place ADAM over a dict of named arrays."""

    def __init__(self, params: dict[str, np.ndarray], beta1=0.9, beta2=0.999, eps=1e-8):
        if not all(p.flags.c_contiguous for p in params.values()):
            raise ValueError("ADAM updates parameters in place and needs C-contiguous arrays")
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self._scratch = np.empty(_CHUNK)

    def step(self, grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k, p in self.params.items():
            g = grads[k].reshape(-1)
            flat = (p.reshape(-1), self.m[k].reshape(-1), self.v[k].reshape(-1), g)
            tmp = self._scratch
            # cache-sized chunks keep the many elementwise passes out of main memory
            for s in range(0, g.size, _CHUNK):
                pc, mc, vc, gc = (a[s:s + _CHUNK] for a in flat)
                t = tmp[:len(gc)]
                mc *= b1
                np.multiply(gc, 1.0 - b1, out=t)
                mc += t
                vc *= b2
                np.multiply(gc, gc, out=t)
                t *= 1.0 - b2
                vc += t
                np.divide(vc, c2, out=t)
                np.sqrt(t, out=t)
                t += self.eps
                np.divide(mc, t, out=t)
                t *= lr / c1
                pc -= t


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    """Shuffled index batches; the last short batch is kept."""
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def check_finite(loss: float, lr: float, epoch: int) -> None:
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss at epoch {epoch + 1} (learning rate {lr:g})")


def fit(params: dict[str, np.ndarray], loss_and_grad, inputs: np.ndarray, targets: np.ndarray,
        config: TrainConfig, log=None) -> list[float]:
    """Mini-batch ADAM over ``config.epochs`` epochs; returns the mean training loss per epoch.

    ``loss_and_grad(params, x_batch, t_batch)`` returns ``(loss, grads)``
    with the loss averaged over the batch. Shuffling uses ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    opt = Adam(params, config.beta1, config.beta2, config.eps)
    n = len(inputs)
    history = []
    for epoch in range(config.epochs):
        lr = config.rate(epoch)
        total = 0.0
        for idx in minibatches(n, config.batch_size, rng):
            loss, grads = loss_and_grad(params, inputs[idx], targets[idx])
            check_finite(loss, lr, epoch)
            total += loss * len(idx)
            opt.step(grads, lr)
        history.append(total / n)
        if log is not None:
            log(epoch, history[-1])
    return history
