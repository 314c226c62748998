"""Analytic self-checks: closed-form forward data, kernel identities and gradient checks.

Each check returns an ``OracleResult``; ``run_all`` stops at the first failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierParams, cross_entropy_loss, cross_entropy_loss_and_grad, one_hot
from .forward import Fidelity, annulus_flux, circle_curve, equal_area_ngon, solve_omega, solve_omega_curve
from .geometry import R_OMEGA, square_template
from .lrtnet import LrtParams, lrt_forward, lrt_loss, lrt_loss_and_grad
from .potential import (adjoint, assemble_R, green_kernel, poisson_kernel, sample_circle,
                        sample_polygon_boundary, tikhonov_pinv)

RADII = (0.4, 0.5, 0.6)
# tiny network used by the gradient checks
TINY = {"N": 4, "M": 1, "m": 3, "n_omega": 5}


@dataclass
class OracleResult:
    name: str
    value: float
    tol: float
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tol:.0e}, {self.seconds:.2f} s)"


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def annulus_polygon_error(rho: float, n_omega: int = 400) -> float:
    """Relative error of the forward solver on an equal-area 64-gon against the disk formula."""
    y = solve_omega(equal_area_ngon(rho, 64), "data_grade", n_omega).values
    return _rel(y, annulus_flux(rho, n_omega))


def annulus_circle_error(rho: float, n_omega: int = 400) -> float:
    y = solve_omega_curve(circle_curve(rho), (0.0, 0.0), Fidelity(64, 128), n_omega).values
    return _rel(y, annulus_flux(rho, n_omega))


def poisson_mass_error(n_points: int = 50, seed: int = 0, n_omega: int = 400) -> float:
    """Largest deviation of the boundary integral of the Poisson kernel from -1 for ``|y| <= 9``."""
    rng = np.random.default_rng(seed)
    r = 9.0 * np.sqrt(rng.uniform(0, 1, n_points))
    phi = rng.uniform(0, 2 * math.pi, n_points)
    ys = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    omega = sample_circle(R_OMEGA, n_omega)
    mass = poisson_kernel(omega.points[:, None, :], ys[None, :, :]).T @ omega.weights
    return float(np.abs(mass + 1.0).max())


def green_boundary_max(n_points: int = 50, seed: int = 1) -> float:
    rng = np.random.default_rng(seed)
    r = 9.5 * np.sqrt(rng.uniform(0, 1, n_points))
    phi = rng.uniform(0, 2 * math.pi, n_points)
    ys = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    xs = sample_circle(R_OMEGA, 97).points
    return float(np.abs(green_kernel(xs[:, None, :], ys[None, :, :])).max())


def tikhonov_residual(alpha: float = 1e-4, m: int = 60, n_omega: int = 400) -> float:
    """Relative Frobenius residual of ``(alpha I + R*R) X = R*`` for a square test domain."""
    samp = sample_polygon_boundary(square_template((0.3, -0.2), 3.2), m)
    omega = sample_circle(R_OMEGA, n_omega)
    R = assemble_R(samp, omega)
    X = tikhonov_pinv(R, alpha, samp.weights, omega.weights)
    Rs = adjoint(R, samp.weights, omega.weights)
    lhs = alpha * X + Rs @ (R @ X)
    return float(np.linalg.norm(lhs - Rs) / np.linalg.norm(Rs))


def _fd_check(loss, params: dict[str, np.ndarray], analytic: dict[str, np.ndarray], h: float) -> float:
    num, ana = [], []
    for key, p in params.items():
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss()
            p[idx] = old - h
            down = loss()
            p[idx] = old
            num.append((up - down) / (2 * h))
            ana.append(analytic[key][idx])
    num, ana = np.array(num), np.array(ana)
    return float(np.linalg.norm(num - ana) / max(np.linalg.norm(num), 1e-300))


def tiny_lrt_problem(seed: int, batch: int = 3, min_gap: float = 1e-3):
    """Random tiny network and batch whose min-pooling has no near ties."""
    rng = np.random.default_rng(seed)
    n, k, m, n_omega = TINY["N"], TINY["M"] + 1, TINY["m"], TINY["n_omega"]
    while True:
        theta = LrtParams(W=rng.normal(size=(n * k * m, n_omega)), b=rng.normal(size=n * k * m),
                          c=rng.normal(size=n), n_rot=k, m=m)
        Y = rng.normal(size=(batch, n_omega))
        chi = rng.integers(0, 2, size=(batch, n)).astype(np.float64)
        norms = np.sort(lrt_forward(theta, Y)[1].norms, axis=2)
        if np.all(norms[..., 1] - norms[..., 0] > min_gap):
            return theta, Y, chi


def lrtnet_gradient_error(restarts: int = 20, h: float = 1e-6) -> float:
    worst = 0.0
    for s in range(restarts):
        theta, Y, chi = tiny_lrt_problem(s)
        _, grads = lrt_loss_and_grad(theta, Y, chi)
        err = _fd_check(lambda: lrt_loss(theta, Y, chi), theta.as_dict(), grads, h)
        worst = max(worst, err)
    return worst


def classifier_gradient_error(restarts: int = 20, h: float = 1e-6, n_hidden: int = 6) -> float:
    worst = 0.0
    for s in range(restarts):
        rng = np.random.default_rng(1000 + s)
        theta = ClassifierParams(rng.normal(size=(n_hidden, TINY["n_omega"])), rng.normal(size=n_hidden),
                                 rng.normal(size=(3, n_hidden)), rng.normal(size=3))
        Y = rng.normal(size=(4, TINY["n_omega"]))
        eta = one_hot(rng.integers(1, 4, size=4))
        _, grads = cross_entropy_loss_and_grad(theta, Y, eta)
        err = _fd_check(lambda: cross_entropy_loss(theta, Y, eta), theta.as_dict(), grads, h)
        worst = max(worst, err)
    return worst


def checks():
    """``(name, thunk, tolerance)`` for every oracle."""
    out = []
    for rho in RADII:
        out.append((f"annulus 64-gon rho={rho}", lambda rho=rho: annulus_polygon_error(rho), 1e-3))
        out.append((f"annulus circle rho={rho}", lambda rho=rho: annulus_circle_error(rho), 1e-6))
    out += [
        ("poisson kernel mass", poisson_mass_error, 1e-8),
        ("green kernel on boundary", green_boundary_max, 1e-10),
        ("tikhonov residual", tikhonov_residual, 1e-8),
        ("lrtnet gradient", lrtnet_gradient_error, 1e-5),
        ("classifier gradient", classifier_gradient_error, 1e-6),
    ]
    return out


def run_all(fail_fast: bool = True, report=print) -> list[OracleResult]:
    results = []
    for name, fn, tol in checks():
        t = time.perf_counter()
        res = OracleResult(name, fn(), tol, time.perf_counter() - t)
        results.append(res)
        report(res.line())
        if fail_fast and not res.ok:
            break
    return results
