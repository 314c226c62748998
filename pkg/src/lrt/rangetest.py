"""Deterministic range test over a grid of rotated test domains."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import R_OMEGA, Grid, Polygon
from .potential import (FactorizationError, assemble_R, sample_circle,
                        sample_polygon_boundary, tikhonov_pinv, weighted_norm)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RtConfig:
    """Range-test parameters.

    ``C`` is either a fixed threshold or ``None``, in which case the
    threshold is the ``percentile``-th percentile of the grid minima of each
    reconstruction.
    """

    grid: Grid
    alpha: float = 1e-8
    C: float | None = None
    percentile: float = 90.0
    M: int = 8
    m_nodes: int = 20
    n_omega: int = 400
    side: float = 3.2
    r_omega: float = R_OMEGA
    weighted: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.C is not None and not self.C > 0:
            raise ValueError("threshold C must be positive")
        if not 0 < self.percentile <= 100:
            raise ValueError("percentile must be in (0, 100]")


@dataclass
class OperatorBank:
    """Pseudo-inverses ``W(alpha, G_i^j)`` stacked as ``(N, M+1, m, n_omega)``.

    ``weights[i, j]`` holds the boundary quadrature weights of ``G_i^j``.
    """

    pinv: np.ndarray
    weights: np.ndarray
    alpha: float

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.pinv.shape

    def block(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        return self.pinv[i, j], self.weights[i, j]


def test_domains(anchor, config: RtConfig) -> list[Polygon]:
    base = geometry.square_template(anchor, config.side)
    return geometry.make_test_domain_family(anchor, base, config.M, config.r_omega).domains


test_domains.__test__ = False


def build_operator_bank(config: RtConfig, dtype=np.float64) -> OperatorBank:
    """Assemble ``R`` and its Tikhonov pseudo-inverse for every grid point and rotation."""
    grid = config.grid
    omega = sample_circle(config.r_omega, config.n_omega)
    n, k = grid.n, config.M + 1
    pinv = np.empty((n, k, config.m_nodes, config.n_omega), dtype=dtype)
    weights = np.empty((n, k, config.m_nodes))
    for i, anchor in enumerate(grid.points):
        for j, G in enumerate(test_domains(anchor, config)):
            samp = sample_polygon_boundary(G, config.m_nodes)
            R = assemble_R(samp, omega, config.r_omega)
            try:
                pinv[i, j] = tikhonov_pinv(R, config.alpha, samp.weights, omega.weights)
            except FactorizationError as exc:
                raise FactorizationError(f"grid point {i}, rotation {j}: {exc}") from exc
            weights[i, j] = samp.weights
    log.info("operator bank: %d grid points x %d rotations, %d x %d blocks",
             n, k, config.m_nodes, config.n_omega)
    return OperatorBank(pinv=pinv, weights=weights, alpha=config.alpha)


def indicator(block: np.ndarray, weights, y, weighted: bool = True) -> float:
    """Norm of the regularized preimage ``W(alpha, G) y`` on the test-domain boundary."""
    psi = block @ np.asarray(y, dtype=np.float64)
    if weighted:
        return float(weighted_norm(psi, weights))
    return float(np.linalg.norm(psi))


def indicator_table(bank: OperatorBank, y, weighted: bool = True) -> np.ndarray:
    """All indicator values, shape ``(N, M+1)``."""
    psi = np.einsum("ijmn,n->ijm", bank.pinv, np.asarray(y, dtype=np.float64))
    if weighted:
        return weighted_norm(psi, bank.weights)
    return np.sqrt((psi * psi).sum(-1))


def grid_minima(bank: OperatorBank, y, weighted: bool = True) -> np.ndarray:
    return indicator_table(bank, y, weighted).min(axis=1)


def rt_reconstruct(I, C: float) -> np.ndarray:
    """Ramp ``min(I / C, 1)``: 1 where the indicator reaches the threshold."""
    if not C > 0:
        raise ValueError("threshold C must be positive")
    I = np.asarray(I, dtype=np.float64)
    return np.where(I >= C, 1.0, I / C)


def resolve_threshold(I, config: RtConfig) -> float:
    if config.C is not None:
        return float(config.C)
    return float(np.percentile(I, config.percentile))


def reconstruct(bank: OperatorBank, y, config: RtConfig) -> tuple[np.ndarray, float]:
    """Grid reconstruction and the threshold that produced it."""
    I = grid_minima(bank, y, config.weighted)
    C = resolve_threshold(I, config)
    return rt_reconstruct(I, C), C
