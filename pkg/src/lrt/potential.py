"""Dirichlet Green function of the disk, boundary quadrature and the Tikhonov-regularized inverse of R.

``R`` maps a density on the boundary of a test domain ``G`` to the normal
derivative, on the outer circle, of its single-layer potential built with the
disk's Dirichlet Green function. Discrete adjoints are taken in the
quadrature-weighted inner products, ``R* = D_G^{-1} R^T D_Omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .geometry import R_OMEGA, Polygon


class FactorizationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class BoundarySampling:
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def length(self) -> float:
        return float(self.weights.sum())


def green_kernel(x, y, r_omega: float = R_OMEGA) -> np.ndarray:
    """Dirichlet Green function ``K(x, y)`` of the disk, broadcasting over leading axes.

    ``K(x, y) = (1/2pi) ln(|y| |x - y*| / (R |x - y|))`` with image point
    ``y* = R^2 y / |y|^2``; for ``y = 0`` the limit ``(1/2pi) ln(R / |x|)`` is used.
    Written in the symmetric form ``|y|^2 |x - y*|^2 = |x|^2 |y|^2 - 2 R^2 x.y + R^4``
    which needs no image point and is regular at the origin.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d2 = ((x - y) ** 2).sum(-1)
    if np.any(d2 == 0.0):
        raise ValueError("green_kernel is singular at x == y")
    x2 = (x ** 2).sum(-1)
    y2 = (y ** 2).sum(-1)
    r2 = r_omega * r_omega
    num = x2 * y2 - 2.0 * r2 * (x * y).sum(-1) + r2 * r2
    return np.log(num / (r2 * d2)) / (4.0 * math.pi)


def poisson_kernel(x, y, r_omega: float = R_OMEGA) -> np.ndarray:
    """Outward normal derivative of ``K(., y)`` at ``x`` on the circle: ``-(R^2 - |y|^2) / (2 pi R |x - y|^2)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d2 = ((x - y) ** 2).sum(-1)
    y2 = (y ** 2).sum(-1)
    return -(r_omega * r_omega - y2) / (2.0 * math.pi * r_omega * d2)


def sample_circle(r_omega: float = R_OMEGA, n: int = 400) -> BoundarySampling:
    """Equispaced trapezoid nodes at angles ``2 pi m / n``."""
    if n < 4:
        raise ValueError("need at least 4 nodes on the circle")
    theta = 2.0 * math.pi * np.arange(n) / n
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(n, 2.0 * math.pi * r_omega / n)
    return BoundarySampling(points=r_omega * normals, weights=weights, normals=normals)


def allocate_nodes(lengths, m: int) -> np.ndarray:
    """Split ``m`` nodes over edges proportionally to length (largest remainder, one node minimum)."""
    lengths = np.asarray(lengths, dtype=np.float64)
    n_edges = len(lengths)
    if m < n_edges:
        raise ValueError(f"need at least one node per edge ({m} < {n_edges})")
    share = lengths / lengths.sum() * m
    counts = np.maximum(np.floor(share).astype(int), 1)
    remainder = share - np.floor(share)
    # stable order: larger remainder first, earlier edge on ties
    order = sorted(range(n_edges), key=lambda e: (-remainder[e], e))
    k = 0
    while counts.sum() < m:
        counts[order[k % n_edges]] += 1
        k += 1
    while counts.sum() > m:
        for e in reversed(order):
            if counts[e] > 1 and counts.sum() > m:
                counts[e] -= 1
    return counts


def sample_polygon_boundary(G: Polygon, m: int) -> BoundarySampling:
    """Midpoint-rule nodes on the polygon boundary, edge by edge starting at vertex 0."""
    v = G.vertices
    e = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(e[:, 0], e[:, 1])
    counts = allocate_nodes(lengths, m)
    pts, wts, nrm = [], [], []
    for k, n_k in enumerate(counts):
        t = (np.arange(n_k) + 0.5) / n_k
        pts.append(v[k] + t[:, None] * e[k])
        wts.append(np.full(n_k, lengths[k] / n_k))
        nrm.append(np.tile([e[k, 1] / lengths[k], -e[k, 0] / lengths[k]], (n_k, 1)))
    return BoundarySampling(np.vstack(pts), np.concatenate(wts), np.vstack(nrm))


def assemble_R(G_sampling: BoundarySampling, omega_sampling: BoundarySampling,
               r_omega: float = R_OMEGA) -> np.ndarray:
    """Discretized ``R``: entry ``(a, b) = dK/dnu(x_a, y_b) * w_b``; shape ``(n_omega, n_G)``."""
    P = poisson_kernel(omega_sampling.points[:, None, :], G_sampling.points[None, :, :], r_omega)
    return P * G_sampling.weights[None, :]


def adjoint(R: np.ndarray, G_weights, omega_weights) -> np.ndarray:
    """Weighted adjoint ``D_G^{-1} R^T D_Omega``."""
    return (R * np.asarray(omega_weights)[:, None]).T / np.asarray(G_weights)[:, None]


def tikhonov_pinv(R: np.ndarray, alpha: float, G_weights=None, omega_weights=None) -> np.ndarray:
    """``(alpha I + R*R)^{-1} R*`` with the weighted adjoint.

    Solved as ``(alpha D_G + R^T D_Omega R) X = R^T D_Omega``, which is the
    same system multiplied through by ``D_G`` and is symmetric positive
    definite, so a Cholesky factorization applies.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    n_omega, n_g = R.shape
    wg = np.ones(n_g) if G_weights is None else np.asarray(G_weights, dtype=np.float64)
    wo = np.ones(n_omega) if omega_weights is None else np.asarray(omega_weights, dtype=np.float64)
    RtD = R.T * wo[None, :]
    A = RtD @ R
    A[np.diag_indices_from(A)] += alpha * wg
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise FactorizationError(
            f"normal matrix not positive definite (alpha={alpha:g}, |R|_2={np.linalg.norm(R, 2):.3e})"
        ) from exc
    return linalg.cho_solve(factor, RtD, check_finite=False)


def weighted_norm(v, weights) -> float:
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if v.shape[-1] != w.shape[-1]:
        raise ValueError("vector and weights differ in length")
    return np.sqrt((w * v * v).sum(-1))
