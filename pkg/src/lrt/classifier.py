"""Distance-band classifier and the classifier-weighted combination of band reconstructions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from . import optim
from .lrtnet import LrtParams, lrt_forward
from .optim import TrainConfig

log = logging.getLogger(__name__)

N_HIDDEN = 300
N_BANDS = 3

CLASSIFIER_TRAIN = TrainConfig(epochs=80, batch_size=128, lr=0.1, halving_period=3)


@dataclass
class ClassifierParams:
    W1: np.ndarray  # (hidden, n_omega)
    b1: np.ndarray
    W2: np.ndarray  # (bands, hidden)
    b2: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    @property
    def n_bands(self) -> int:
        return len(self.b2)

    @classmethod
    def zeros(cls, n_omega: int, n_hidden: int = N_HIDDEN, n_bands: int = N_BANDS):
        return cls(np.zeros((n_hidden, n_omega)), np.zeros(n_hidden),
                   np.zeros((n_bands, n_hidden)), np.zeros(n_bands))

    @classmethod
    def random(cls, n_omega: int, seed: int, n_hidden: int = N_HIDDEN, n_bands: int = N_BANDS):
        """Centered uniform initialization with half-width ``1/sqrt(fan_in)``."""
        rng = np.random.default_rng(seed)
        s1, s2 = 1.0 / math.sqrt(n_omega), 1.0 / math.sqrt(n_hidden)
        return cls(rng.uniform(-s1, s1, (n_hidden, n_omega)), rng.uniform(-s1, s1, n_hidden),
                   rng.uniform(-s2, s2, (n_bands, n_hidden)), rng.uniform(-s2, s2, n_bands))


def _logits(theta: ClassifierParams, Y: np.ndarray):
    pre = Y @ theta.W1.T + theta.b1
    hidden = np.maximum(pre, 0.0)
    return pre, hidden, hidden @ theta.W2.T + theta.b2


def classify(theta: ClassifierParams, y) -> np.ndarray:
    """Band probabilities: softmax of a one-hidden-layer ReLU network."""
    y = np.asarray(y, dtype=np.float64)
    _, _, s = _logits(theta, np.atleast_2d(y))
    lam = softmax(s, axis=1)
    return lam[0] if y.ndim == 1 else lam


def one_hot(bands, n_bands: int = N_BANDS) -> np.ndarray:
    bands = np.asarray(bands, dtype=np.int64)
    eta = np.zeros((len(bands), n_bands))
    eta[np.arange(len(bands)), bands - 1] = 1.0
    return eta


def cross_entropy_loss(theta: ClassifierParams, Y, eta) -> float:
    _, _, s = _logits(theta, np.atleast_2d(np.asarray(Y, dtype=np.float64)))
    return float(-(np.atleast_2d(eta) * log_softmax(s, axis=1)).sum(axis=1).mean())


def cross_entropy_loss_and_grad(theta: ClassifierParams, Y, eta):
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    eta = np.atleast_2d(np.asarray(eta, dtype=np.float64))
    pre, hidden, s = _logits(theta, Y)
    logp = log_softmax(s, axis=1)
    loss = float(-(eta * logp).sum(axis=1).mean())
    g_s = (np.exp(logp) * eta.sum(axis=1, keepdims=True) - eta) / len(Y)
    g_hidden = g_s @ theta.W2
    g_pre = g_hidden * (pre > 0)
    grads = {"W1": g_pre.T @ Y, "b1": g_pre.sum(axis=0),
             "W2": g_s.T @ hidden, "b2": g_s.sum(axis=0)}
    return loss, grads


def accuracy(theta: ClassifierParams, Y, bands) -> float:
    pred = classify(theta, np.atleast_2d(Y)).argmax(axis=1) + 1
    return float(np.mean(pred == np.asarray(bands)))


def input_scale(Y) -> float:
    """Fixed preconditioning factor ``1/std`` of the training measurements."""
    sd = float(np.std(Y))
    return 1.0 / sd if sd > 0 else 1.0


def train_classifier(Y: np.ndarray, bands: np.ndarray, config: TrainConfig = CLASSIFIER_TRAIN,
                     theta0: ClassifierParams | None = None, callback=None,
                     scale: float | None = None):
    """Cross-entropy training on the union of the band sets.

    Training runs on ``scale * Y`` (default ``1/std(Y)``; measurements are
    O(1e-4..1e-2)) and the factor is folded into ``W1`` afterwards, so the
    returned network acts on raw measurements. ``theta0`` is given in the
    scaled coordinates. Returns the parameters, the per-epoch loss and the
    per-epoch training accuracy.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if len(Y) == 0:
        raise ValueError("empty training set")
    scale = input_scale(Y) if scale is None else float(scale)
    Y = Y * scale
    theta = (theta0 or ClassifierParams.random(Y.shape[1], config.seed)).copy()
    eta = one_hot(bands, theta.n_bands)
    accuracies = []

    def loss_and_grad(p, yb, tb):
        return cross_entropy_loss_and_grad(theta, yb, tb)

    def report(epoch, loss):
        accuracies.append(accuracy(theta, Y, bands))
        log.info("classifier epoch %d loss %.5f accuracy %.4f", epoch + 1, loss, accuracies[-1])
        if callback is not None:
            callback(epoch, loss, accuracies[-1])

    history = optim.fit(theta.as_dict(), loss_and_grad, Y, eta, config, report)
    theta.W1 *= scale
    return theta, history, accuracies


def combine(lam, outputs) -> np.ndarray:
    """Convex combination ``sum_l lam_l * outputs[l]`` (per sample for batched input)."""
    lam = np.asarray(lam, dtype=np.float64)
    outputs = np.asarray(outputs, dtype=np.float64)
    if lam.ndim == 1:
        return np.tensordot(lam, outputs, axes=(0, 0))
    return np.einsum("bl,lbn->bn", lam, outputs)


def lrt_pipeline(y, phis: list[LrtParams], classifier: ClassifierParams) -> np.ndarray:
    """Classify the measurement, run every band network, and blend by the class probabilities."""
    if len(phis) != classifier.n_bands:
        raise ValueError(f"{len(phis)} band networks for a {classifier.n_bands}-band classifier")
    lam = classify(classifier, y)
    outs = [lrt_forward(theta, y)[0] for theta in phis]
    return combine(lam, outs)
