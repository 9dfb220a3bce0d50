from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from . import config
from .assembly import AssembledSystem
from .errors import ArgumentError, InconsistentSystem

logger = logging.getLogger("dualgal.solver")


class SolveMethod(str, Enum):
    DEFINITE_FACTORIZATION = "definite_factorization"
    MIN_NORM_LEAST_SQUARES = "min_norm_least_squares"


@dataclass(frozen=True, eq=False)
class SolveReport:
    d: np.ndarray
    method: SolveMethod
    residual: float
    rank_estimate: int


def relative_residual(K: np.ndarray, f: np.ndarray, d: np.ndarray) -> float:
    return float(np.linalg.norm(K @ d - f) / max(1.0, float(np.linalg.norm(f))))


def dual_objective(system: AssembledSystem, d: np.ndarray) -> float:
    """Discrete dual functional -1/2 d^T K d + f^T d (concave, maximized by the solve)."""
    d = np.asarray(d, dtype=float)
    return float(-0.5 * d @ (system.K @ d) + system.f @ d)


def _cholesky(K: np.ndarray, f: np.ndarray):
    try:
        factor = scipy.linalg.cho_factor(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        logger.debug("Cholesky failed: matrix not positive definite")
        return None
    pivots = np.diag(factor[0]) ** 2
    diag_max = float(np.max(np.diag(K)))
    if pivots.min() < config.PIVOT_FLOOR * diag_max:
        logger.debug("Cholesky pivot ratio %.3e below floor", pivots.min() / diag_max)
        return None
    return scipy.linalg.cho_solve(factor, f, check_finite=False)


def _jacobi_scale(K: np.ndarray) -> np.ndarray:
    diag = np.diag(K)
    scale = np.ones_like(diag)
    positive = diag > 0.0
    scale[positive] = 1.0 / np.sqrt(diag[positive])
    return scale


def _min_norm(K: np.ndarray, f: np.ndarray, equilibrate: bool = True):
    """Least-squares solve; with equilibrate the minimum norm is taken in D^1/2-scaled coordinates."""
    s = _jacobi_scale(K) if equilibrate else np.ones(f.size)
    Ks = K * s[:, None] * s[None, :]
    fs = f * s
    y, _, rank, _ = scipy.linalg.lstsq(Ks, fs, cond=config.RANK_CUTOFF, lapack_driver="gelsd")
    # one step of iterative refinement
    y = y + scipy.linalg.lstsq(Ks, fs - Ks @ y, cond=config.RANK_CUTOFF, lapack_driver="gelsd")[0]
    return s * y, int(rank)


def solve_symmetric_consistent(system: AssembledSystem, tol: float = config.SOLVE_TOL,
                               equilibrate: bool = True) -> SolveReport:
    """Cholesky when K is numerically definite, minimum-norm least squares otherwise.

    The least-squares path scales K symmetrically by its diagonal first unless equilibrate is
    False, in which case the result is the plain pseudoinverse solution.
    """
    K, f = system.K, system.f
    if K.shape != (f.size, f.size):
        raise ArgumentError(f"K has shape {K.shape} but f has {f.size} entries")
    if f.size == 0:
        return SolveReport(np.zeros(0), SolveMethod.DEFINITE_FACTORIZATION, 0.0, 0)

    d = _cholesky(K, f)
    if d is not None:
        residual = relative_residual(K, f, d)
        if residual <= tol:
            logger.info("solved %s dof by Cholesky, residual %.3e", f.size, residual)
            return SolveReport(d, SolveMethod.DEFINITE_FACTORIZATION, residual, f.size)
        logger.warning("Cholesky residual %.3e above tol, retrying with least squares", residual)
    else:
        logger.info("K not numerically definite, using minimum-norm least squares")

    d, rank = _min_norm(K, f, equilibrate)
    residual = relative_residual(K, f, d)
    if residual > tol:
        raise InconsistentSystem(residual, tol, what="dual system Kd = f")
    logger.info("solved %s dof by least squares (rank %s), residual %.3e", f.size, rank, residual)
    return SolveReport(d, SolveMethod.MIN_NORM_LEAST_SQUARES, residual, rank)
