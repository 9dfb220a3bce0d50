from __future__ import annotations
import functools
import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from . import config
from .errors import ArgumentError

logger = logging.getLogger("dualgal.quadrature")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on the reference interval [-1, 1]."""
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def count(self) -> int:
        return len(self.nodes)


def _legendre(count: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # P_count(x) and P_{count-1}(x) by the three-term recurrence
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, count + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p, p_prev


@functools.lru_cache(maxsize=None)
def gauss_legendre_rule(count: int) -> QuadratureRule:
    """count-point rule; Newton iteration on P_count from Chebyshev-like initial guesses."""
    if int(count) != count or not 1 <= count <= config.MAX_GAUSS_POINTS:
        raise ArgumentError(f"Gauss point count must be in [1, {config.MAX_GAUSS_POINTS}], got {count}")
    count = int(count)
    k = np.arange(count)
    x = np.cos(np.pi * (4 * k + 3) / (4 * count + 2))
    for _ in range(100):
        p, p_prev = _legendre(count, x)
        dp = count * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= config.GAUSS_NEWTON_TOL:
            break
    p, p_prev = _legendre(count, x)
    dp = count * (x * p - p_prev) / (x * x - 1.0)

    order = np.argsort(x)
    x, dp = x[order], dp[order]
    nodes = 0.5 * (x - x[::-1])
    weights = 2.0 / ((1.0 - nodes * nodes) * dp * dp)
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def merge_breakpoints(*site_lists: Sequence[float], tol: float = config.SITE_MERGE_TOL) -> np.ndarray:
    """Sorted union of breakpoint lists; sites closer than tol are one site."""
    pts = np.sort(np.concatenate([np.asarray(s, dtype=float).ravel() for s in site_lists]))
    if pts.size == 0:
        raise ArgumentError("empty breakpoint list")
    keep = np.concatenate([[True], np.diff(pts) > tol * max(1.0, float(np.abs(pts).max()))])
    return pts[keep]


def gauss_points(breakpoints: Sequence[float], rule: QuadratureRule) -> Tuple[np.ndarray, np.ndarray]:
    """Mapped nodes and weights over all spans, span by span in increasing order."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2:
        raise ArgumentError("empty breakpoint list")
    if np.any(np.diff(bp) <= 0.0):
        raise ArgumentError("breakpoints must be strictly increasing")
    half = 0.5 * np.diff(bp)
    mid = 0.5 * (bp[:-1] + bp[1:])
    points = (mid[:, None] + half[:, None] * rule.nodes[None, :]).ravel()
    weights = (half[:, None] * rule.weights[None, :]).ravel()
    return points, weights


def integrate_over_spans(breakpoints: Sequence[float], rule: QuadratureRule,
                         integrand: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Sum over spans of the mapped rule. integrand maps m points to an array with leading axis m."""
    points, weights = gauss_points(breakpoints, rule)
    return np.tensordot(weights, np.asarray(integrand(points), dtype=float), axes=1)


def integrate_over_cells(breakpoints_x: Sequence[float], breakpoints_t: Sequence[float],
                         rule: QuadratureRule,
                         integrand: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """Tensor-product rule over the cells of two breakpoint lists.

    integrand receives meshgrid arrays (ij indexing) of shape (mx, mt) and returns an array
    with leading shape (mx, mt).
    """
    xs, wx = gauss_points(breakpoints_x, rule)
    ts, wt = gauss_points(breakpoints_t, rule)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    vals = np.asarray(integrand(X, T), dtype=float)
    return np.tensordot(np.outer(wx, wt), vals, axes=2)


def integrate_until_stable(breakpoints: Sequence[float],
                           integrand: Callable[[np.ndarray], np.ndarray],
                           start: int, tol: float = config.STABLE_QUAD_TOL) -> np.ndarray:
    """Raise the per-span point count until two successive results agree to tol."""
    count = max(1, min(int(start), config.MAX_GAUSS_POINTS))
    prev = integrate_over_spans(breakpoints, gauss_legendre_rule(count), integrand)
    while count < config.MAX_GAUSS_POINTS:
        count += 1
        cur = integrate_over_spans(breakpoints, gauss_legendre_rule(count), integrand)
        scale = max(1.0, float(np.max(np.abs(cur), initial=0.0)))
        if np.max(np.abs(cur - prev), initial=0.0) <= tol * scale:
            logger.debug("quadrature stable at %s points per span", count)
            return cur
        prev = cur
    logger.warning("quadrature did not stabilise within %s points per span", count)
    return prev
