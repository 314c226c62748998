"""Unrolled range-test network: affine layer, block norms, min-pooling, bias and sigmoid.

Parameters are ``W`` of shape ``(N*(M+1)*m, n_omega)``, ``b`` of length
``N*(M+1)*m`` and ``c`` of length ``N``; rows of ``W`` are ordered grid point
major, rotation next, boundary node minor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import optim
from .optim import TrainConfig
from .rangetest import OperatorBank

log = logging.getLogger(__name__)


@dataclass
class LrtParams:
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n_rot: int
    m: int

    def __post_init__(self):
        n_rows = self.n_points * self.n_rot * self.m
        if self.W.shape[0] != n_rows or self.b.shape != (n_rows,):
            raise ValueError(f"W/b do not match N={self.n_points}, M+1={self.n_rot}, m={self.m}")

    @property
    def n_points(self) -> int:
        return len(self.c)

    @property
    def n_omega(self) -> int:
        return self.W.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b, "c": self.c}

    def copy(self) -> "LrtParams":
        return LrtParams(self.W.copy(), self.b.copy(), self.c.copy(), self.n_rot, self.m)


@dataclass
class LrtForwardTrace:
    pre_norm: np.ndarray  # (B, N, M+1, m)
    norms: np.ndarray  # (B, N, M+1)
    argmin: np.ndarray  # (B, N)
    minima: np.ndarray  # (B, N)
    logits: np.ndarray
    output: np.ndarray


def lrt_forward(theta: LrtParams, y) -> tuple[np.ndarray, LrtForwardTrace]:
    """Network output for one measurement ``(n_omega,)`` or a batch ``(B, n_omega)``."""
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    Y = y[None, :] if single else y
    z = Y @ theta.W.T
    z += theta.b
    z = z.reshape(len(Y), theta.n_points, theta.n_rot, theta.m)
    norms = np.sqrt(np.einsum("bijm,bijm->bij", z, z))
    j_star = norms.argmin(axis=2)  # first index on ties
    minima = np.take_along_axis(norms, j_star[..., None], axis=2)[..., 0]
    logits = minima - theta.c
    out = expit(logits)
    trace = LrtForwardTrace(z, norms, j_star, minima, logits, out)
    return (out[0] if single else out), trace


def lrt_loss(theta: LrtParams, Y, chi) -> float:
    out, _ = lrt_forward(theta, np.atleast_2d(Y))
    chi = np.atleast_2d(np.asarray(chi, dtype=np.float64))
    return float(((chi - out) ** 2).mean())


def lrt_loss_and_grad(theta: LrtParams, Y, chi) -> tuple[float, dict[str, np.ndarray]]:
    """Batch-mean of ``|chi - Phi(y)|^2 / N`` and its exact gradient.

    Min-pooling passes the gradient to the argmin rotation only; the norm
    gradient at a zero block is taken as zero.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    chi = np.atleast_2d(np.asarray(chi, dtype=np.float64))
    out, tr = lrt_forward(theta, Y)
    n_batch, n_pts = out.shape
    diff = out - chi
    loss = float((diff * diff).mean())

    g_logit = (2.0 / (n_pts * n_batch)) * diff * out * (1.0 - out)
    bi, ii = np.meshgrid(np.arange(n_batch), np.arange(n_pts), indexing="ij")
    z_star = tr.pre_norm[bi, ii, tr.argmin]  # (B, N, m)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(tr.minima[..., None] > 0, z_star / tr.minima[..., None], 0.0)
    g_z = np.zeros_like(tr.pre_norm)
    g_z[bi, ii, tr.argmin] = g_logit[..., None] * unit
    g_z = g_z.reshape(n_batch, -1)
    grads = {"W": g_z.T @ Y, "b": g_z.sum(axis=0), "c": -g_logit.sum(axis=0)}
    return loss, grads


def lrt_grad(theta: LrtParams, Y, chi) -> dict[str, np.ndarray]:
    return lrt_loss_and_grad(theta, Y, chi)[1]


def rt_initialization(bank: OperatorBank, C: float, weighted: bool = True) -> LrtParams:
    """Network weights reproducing the deterministic range test: ``(W'/C, 0, 1)``.

    Each block's rows are scaled by the square roots of its quadrature
    weights so that plain Euclidean block norms equal the weighted
    boundary norms of the indicator.
    """
    n, k, m, n_omega = bank.pinv.shape
    scale = np.sqrt(bank.weights) if weighted else np.ones_like(bank.weights)
    W = (bank.pinv * (scale / C)[..., None]).reshape(n * k * m, n_omega).astype(np.float64)
    return LrtParams(W=W, b=np.zeros(n * k * m), c=np.ones(n), n_rot=k, m=m)


def random_initialization(n_points: int, n_rot: int, m: int, n_omega: int, seed: int,
                          scale: float | None = None) -> LrtParams:
    """Centered uniform ``W``, ``b`` with half-width ``1/sqrt(n_omega)``; ``c = 1``."""
    rng = np.random.default_rng(seed)
    s = 1.0 / math.sqrt(n_omega) if scale is None else scale
    rows = n_points * n_rot * m
    W = rng.uniform(-s, s, size=(rows, n_omega))
    b = rng.uniform(-s, s, size=rows)
    return LrtParams(W=W, b=b, c=np.ones(n_points), n_rot=n_rot, m=m)


def train_phi(Y: np.ndarray, chi: np.ndarray, config: TrainConfig, theta0: LrtParams,
              callback=None) -> tuple[LrtParams, list[float]]:
    """Mini-batch ADAM training of one band network, starting from ``theta0`` (copied)."""
    if len(Y) == 0:
        raise ValueError("empty training set")
    theta = theta0.copy()
    params = theta.as_dict()

    def loss_and_grad(p, yb, tb):
        return lrt_loss_and_grad(theta, yb, tb)

    def report(epoch, loss):
        log.info("phi epoch %d loss %.6f lr %.4g", epoch + 1, loss, config.rate(epoch))
        if callback is not None:
            callback(epoch, loss)

    history = optim.fit(params, loss_and_grad, np.asarray(Y, dtype=np.float64),
                        np.asarray(chi, dtype=np.float64), config, report)
    return theta, history
