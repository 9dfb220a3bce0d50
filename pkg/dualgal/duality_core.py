"""Finite-dimensional dual problems.

Each solver maximizes (or, for the entropy case, minimizes the negated) dual function over
the Lagrange multipliers and recovers the primal unknowns through the dual-to-primal map.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import logsumexp, softmax

from . import config
from .errors import ArgumentError, Degenerate, DomainError, InconsistentSystem, NoConvergence, SingularDtP

logger = logging.getLogger("dualgal.duality")


@dataclass(frozen=True, eq=False)
class LinearDualResult:
    lambda_star: np.ndarray
    x_H: np.ndarray
    residual: float


@dataclass(frozen=True)
class QuadPairResult:
    lambda_star: Tuple[float, float]
    x: float
    y: float
    beta: float
    base: Tuple[float, float]
    iterations: int = 0
    grad_norm: float = 0.0
    dual_values: Tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class MaxentResult:
    phi: np.ndarray
    lambda_star: np.ndarray
    partition: float


def solve_linear_dual(A, b, tol: float = config.LINEAR_DUAL_TOL) -> LinearDualResult:
    """Solve Ax = b through the dual normal equations (A A^T) lambda = b, x = A^T lambda."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if A.shape[0] != b.shape[0]:
        raise ArgumentError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ArgumentError("A and b must be finite")
    gram = A @ A.T
    lam, _, rank, _ = scipy.linalg.lstsq(gram, b, cond=config.RANK_CUTOFF, lapack_driver="gelsd")
    x_H = A.T @ lam
    residual = float(np.linalg.norm(A @ x_H - b) / max(1.0, float(np.linalg.norm(b))))
    logger.debug("linear dual: rank %s of %s, residual %.3e", rank, gram.shape[0], residual)
    if residual > tol:
        raise InconsistentSystem(residual, tol, what="Ax = b")
    return LinearDualResult(lambda_star=lam, x_H=x_H, residual=residual)


# -- two quadratic equations -------------------------------------------------
#   x^2 + y^2 = 3,  x^2 - y^2 = 1,  H = beta [(x - xb)^2 + (y - yb)^2]

def _quad_denominators(beta: float, lam: np.ndarray) -> Tuple[float, float]:
    return beta - lam[0] - lam[1], beta - lam[0] + lam[1]


def _quad_primal(beta: float, base: Tuple[float, float], lam: np.ndarray) -> Tuple[float, float]:
    d1, d2 = _quad_denominators(beta, lam)
    return beta * base[0] / d1, beta * base[1] / d2


def _quad_dual(beta: float, base: Tuple[float, float], lam: np.ndarray) -> float:
    x, y = _quad_primal(beta, base, lam)
    h = beta * ((x - base[0]) ** 2 + (y - base[1]) ** 2)
    return h + lam[0] * (3.0 - x * x - y * y) + lam[1] * (1.0 - x * x + y * y)


def _singular(beta: float, lam: np.ndarray) -> bool:
    return min(abs(d) for d in _quad_denominators(beta, lam)) < config.DTP_SINGULAR


def solve_quadratic_pair(beta: float, base: Tuple[float, float],
                         tol: float = config.QUAD_PAIR_TOL) -> QuadPairResult:
    """Damped Newton ascent on the dual function of the two-quadratic system from lambda = 0."""
    beta = float(beta)
    if beta == 0.0:
        raise ArgumentError("beta must be nonzero")
    base = (float(base[0]), float(base[1]))
    lam = np.zeros(2)
    if _singular(beta, lam):
        raise SingularDtP(f"DtP map singular at the initial guess for beta={beta}")
    value = _quad_dual(beta, base, lam)
    history = [value]
    for it in range(config.MAX_NEWTON_ITERS):
        x, y = _quad_primal(beta, base, lam)
        grad = np.array([3.0 - x * x - y * y, 1.0 - x * x + y * y])
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            logger.debug("quadratic pair converged in %s iterations", it)
            return QuadPairResult((float(lam[0]), float(lam[1])), x, y, beta, base, it,
                                  gnorm, tuple(history))
        d1, d2 = _quad_denominators(beta, lam)
        hxx, hyy = 2.0 * x * x / d1, 2.0 * y * y / d2
        hess = np.array([[-hxx - hyy, -hxx + hyy], [-hxx + hyy, -hxx - hyy]])
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise Degenerate("dual Hessian is singular") from None
        if grad @ step <= 0.0:
            step = grad  # Hessian not negative definite here; fall back to gradient ascent
        t = 1.0
        for _ in range(60):
            trial = lam + t * step
            d1_new, d2_new = _quad_denominators(beta, trial)
            crossed = np.sign(d1_new) != np.sign(d1) or np.sign(d2_new) != np.sign(d2)
            if not crossed and not _singular(beta, trial):
                trial_value = _quad_dual(beta, base, trial)
                if trial_value >= value - 1e-14 * max(1.0, abs(value)):
                    lam, value = trial, trial_value
                    history.append(value)
                    break
            t *= 0.5
        else:
            raise SingularDtP(f"no admissible ascent step from lambda={lam.tolist()}")
    raise NoConvergence(f"quadratic pair: no convergence in {config.MAX_NEWTON_ITERS} iterations")


# -- maximum-entropy coordinates ---------------------------------------------

def _check_polygon(vertices: np.ndarray, point: np.ndarray) -> None:
    if vertices.ndim != 2 or vertices.shape[1] != 2 or vertices.shape[0] < 3:
        raise ArgumentError("polygon needs at least three 2D vertices")
    edges = np.roll(vertices, -1, axis=0) - vertices
    if np.any(edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1]
              - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0] <= 0.0):
        raise ArgumentError("polygon must be convex and counterclockwise")
    rel = point[None, :] - vertices
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    scale = np.max(np.linalg.norm(edges, axis=1)) ** 2
    if np.any(cross <= 1e-14 * scale):
        raise DomainError(f"point {point.tolist()} is not strictly inside the polygon")


def maxent_coordinates(vertices: Sequence[Sequence[float]], point: Sequence[float],
                       tol: float = config.MAXENT_TOL) -> MaxentResult:
    """Maximum-entropy coordinates of a point in a convex polygon by minimizing ln Z."""
    verts = np.asarray(vertices, dtype=float)
    p = np.asarray(point, dtype=float)
    _check_polygon(verts, p)
    shifted = verts - p[None, :]
    lam = np.zeros(2)

    def log_z(lm: np.ndarray) -> float:
        return float(logsumexp(-shifted @ lm))

    f = log_z(lam)
    for it in range(config.MAX_NEWTON_ITERS):
        phi = softmax(-shifted @ lam)
        mean = phi @ shifted
        grad = -mean
        if np.linalg.norm(grad) <= tol:
            logger.debug("maxent converged in %s iterations", it)
            return MaxentResult(phi=phi, lambda_star=lam, partition=float(np.exp(f)))
        hess = (shifted * phi[:, None]).T @ shifted - np.outer(mean, mean)
        if np.linalg.det(hess) <= 0.0 or np.linalg.cond(hess) > 1e14:
            raise Degenerate("entropy Hessian is numerically singular (point too close to boundary)")
        step = -np.linalg.solve(hess, grad)
        t = 1.0
        # full Newton steps once the gradient is small
        while t > 1e-12 and np.linalg.norm(grad) > 1e-6:
            f_new = log_z(lam + t * step)
            if f_new <= f + 1e-4 * t * (grad @ step):
                break
            t *= 0.5
        lam = lam + t * step
        f = log_z(lam)
    raise NoConvergence(f"maxent: no convergence in {config.MAX_NEWTON_ITERS} iterations")
