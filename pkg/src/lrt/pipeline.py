"""Training and prediction for every component, driven by a resolved configuration dict."""

from __future__ import annotations

import logging

import numpy as np

from . import config as C
from .classifier import train_classifier
from .data import Dataset, generate_test, generate_training
from .evalkit import baseline_predict, lrt_predict, train_baseline_mlp
from .io import ShapeHeader
from .lrtnet import LrtParams, random_initialization, rt_initialization, train_phi
from .rangetest import OperatorBank, build_operator_bank, grid_minima, reconstruct, resolve_threshold

log = logging.getLogger(__name__)


def shape_header(cfg: dict) -> ShapeHeader:
    return ShapeHeader(N=cfg["geometry.nx"] * cfg["geometry.ny"], M=cfg["geometry.M"],
                       m=cfg["geometry.m_nodes"], n_omega=cfg["geometry.n_omega"])


def make_training(cfg: dict, seed: int | None = None) -> Dataset:
    seed = cfg["dataset.seed"] if seed is None else seed
    return generate_training(cfg["dataset.counts"], C.grid(cfg), cfg["dataset.delta"], seed,
                             C.sample_spec(cfg), cfg["geometry.n_omega"])


def make_test(cfg: dict, seed: int | None = None) -> Dataset:
    seed = cfg["dataset.seed"] if seed is None else seed
    return generate_test(cfg["dataset.test_count"], C.grid(cfg), cfg["dataset.delta"], seed,
                         C.sample_spec(cfg), cfg["geometry.n_omega"])


def make_bank(cfg: dict) -> OperatorBank:
    return build_operator_bank(C.rt_config(cfg))


def band_threshold(bank: OperatorBank, Y: np.ndarray, cfg: dict) -> float:
    """Fixed threshold for the network initialization.

    A configured numeric threshold is used as is; otherwise it is the median
    over the band's training measurements of the per-sample percentile rule.
    """
    rt = C.rt_config(cfg)
    if rt.C is not None:
        return rt.C
    return float(np.median([resolve_threshold(grid_minima(bank, y, rt.weighted), rt) for y in Y]))


def initial_phi(cfg: dict, bank: OperatorBank | None, Y: np.ndarray, init_mode: str,
                seed: int) -> LrtParams:
    if init_mode == "rt":
        if bank is None:
            raise ValueError("range-test initialization needs an operator bank")
        return rt_initialization(bank, band_threshold(bank, Y, cfg), cfg["rt.weighted"])
    h = shape_header(cfg)
    return random_initialization(h.N, h.M + 1, h.m, h.n_omega, seed)


def train_band(cfg: dict, bank: OperatorBank | None, train: Dataset, band: int,
               noisy: bool = True, init_mode: str | None = None, callback=None):
    """Train one band network; returns the parameters and the per-epoch mean loss."""
    tc = C.train_config(cfg, "phi", seed=cfg["train.phi.seed"] + band)
    init_mode = init_mode or tc.init_mode
    part = train.band(band)
    Y = part.inputs(noisy)
    theta0 = initial_phi(cfg, bank, Y, init_mode, tc.seed)
    return train_phi(Y, part.chi, tc, theta0, callback)


def train_classifier_for(cfg: dict, train: Dataset, noisy: bool = True):
    theta, history, acc = train_classifier(train.inputs(noisy), train.bands,
                                           C.train_config(cfg, "classifier"))
    log.info("classifier training accuracy %.4f", acc[-1])
    return theta, history


def train_baseline_band(cfg: dict, train: Dataset, band: int, noisy: bool = True):
    part = train.band(band)
    tc = C.train_config(cfg, "baseline", seed=cfg["train.baseline.seed"] + band)
    return train_baseline_mlp(part.inputs(noisy), part.chi.astype(np.float64), tc)


def train_baseline(cfg: dict, train: Dataset, noisy: bool = True):
    """Three band networks and their loss histories, concatenated band by band."""
    nets, history = [], []
    for band in (1, 2, 3):
        theta, hist = train_baseline_band(cfg, train, band, noisy)
        nets.append(theta)
        history += list(hist)
    return nets, history


def predict(method: str, Y, *, phis=None, classifier=None, mlps=None, bank=None,
            cfg: dict | None = None) -> np.ndarray:
    """Batched reconstructions with ``method`` in ``lrt``, ``rt`` or ``mlp``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if method == "lrt":
        return lrt_predict(Y, phis, classifier)
    if method == "mlp":
        return baseline_predict(Y, mlps, classifier)
    if method == "rt":
        rt = C.rt_config(cfg)
        return np.array([reconstruct(bank, y, rt)[0] for y in Y])
    raise ValueError(f"unknown method {method!r}")
