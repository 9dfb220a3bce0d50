from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ArgumentError, DomainError

logger = logging.getLogger("dualgal.basis")

# relative slack allowed outside the domain before a point is rejected
DOMAIN_SLACK = 1e-12

Interval = Tuple[float, float]


class BasisKind(str, Enum):
    BSPLINE = "bspline"
    REPU_MU = "repu_mu"
    REPU_LAMBDA = "repu_lambda"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True, eq=False)
class KnotVector:
    degree: int
    knots: np.ndarray
    n_spans: int

    @property
    def domain(self) -> Interval:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def sites(self) -> np.ndarray:
        # distinct breakpoints x_0 < ... < x_n
        return self.knots[self.degree:len(self.knots) - self.degree]

    @property
    def interior(self) -> np.ndarray:
        return self.sites[1:-1]


def _check_interval(domain: Sequence[float]) -> Interval:
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ArgumentError(f"empty domain [{lo}, {hi}]")
    return lo, hi


def _uniform_sites(n: int, domain: Interval) -> np.ndarray:
    lo, hi = domain
    sites = lo + (hi - lo) * (np.arange(n + 1) / n)
    sites[-1] = hi
    return sites


def make_open_knot_vector(degree: int, n: int, domain: Sequence[float] = (0.0, 1.0)) -> KnotVector:
    """Open uniform knot vector: end knots repeated degree+1 times, n equal spans."""
    if int(degree) != degree or degree < 1:
        raise ArgumentError(f"B-spline degree must be an integer >= 1, got {degree}")
    if int(n) != n or n < 1:
        raise ArgumentError(f"number of spans must be an integer >= 1, got {n}")
    degree, n = int(degree), int(n)
    lo, hi = _check_interval(domain)
    sites = _uniform_sites(n, (lo, hi))
    knots = np.concatenate([np.full(degree, lo), sites, np.full(degree, hi)])
    knots.setflags(write=False)
    return KnotVector(degree=degree, knots=knots, n_spans=n)


@dataclass(frozen=True, eq=False)
class BasisSet1D:
    """A univariate family of functions with analytic first derivatives.

    ``breakpoints`` are the sites where the functions lose smoothness (distinct knots for
    B-splines, the RePU sites, or just the interval ends for explicit polynomials).
    """
    kind: BasisKind
    degree: int
    breakpoints: np.ndarray
    knots: Optional[KnotVector] = None
    coefficients: Optional[np.ndarray] = None

    @property
    def domain(self) -> Interval:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def n_spans(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def n_funcs(self) -> int:
        if self.kind is BasisKind.BSPLINE:
            return self.n_spans + self.degree
        if self.kind is BasisKind.POLYNOMIAL:
            assert self.coefficients is not None
            return self.coefficients.shape[0]
        return 2 * self.n_spans

    @property
    def poly_degree(self) -> int:
        """Highest polynomial degree of any function on a single span."""
        if self.kind is BasisKind.REPU_LAMBDA:
            return self.degree + 1
        return self.degree


def make_bspline_basis(degree: int, n: int, domain: Sequence[float] = (0.0, 1.0)) -> BasisSet1D:
    kv = make_open_knot_vector(degree, n, domain)
    return BasisSet1D(BasisKind.BSPLINE, kv.degree, kv.sites, knots=kv)


def make_repu_basis(kind: BasisKind, degree: int, n: int,
                    domain: Sequence[float] = (0.0, 1.0)) -> BasisSet1D:
    kind = BasisKind(kind)
    if kind not in (BasisKind.REPU_MU, BasisKind.REPU_LAMBDA):
        raise ArgumentError(f"not a RePU family: {kind.value}")
    if int(degree) != degree or degree < 1:
        raise ArgumentError(f"RePU power must be an integer >= 1, got {degree}")
    if int(n) != n or n < 1:
        raise ArgumentError(f"number of spans must be an integer >= 1, got {n}")
    sites = _uniform_sites(int(n), _check_interval(domain))
    sites.setflags(write=False)
    return BasisSet1D(kind, int(degree), sites)


def make_polynomial_basis(coefficients: Sequence[Sequence[float]],
                          domain: Sequence[float] = (0.0, 1.0)) -> BasisSet1D:
    """Explicit polynomials, one row of ascending monomial coefficients per function."""
    coeffs = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if coeffs.size == 0:
        raise ArgumentError("polynomial basis needs at least one function")
    nonzero = np.flatnonzero(np.any(coeffs != 0.0, axis=0))
    degree = int(nonzero[-1]) if nonzero.size else 0
    if degree < 1:
        raise ArgumentError("polynomial basis must contain a non-constant function")
    coeffs = coeffs[:, :degree + 1].copy()
    coeffs.setflags(write=False)
    ends = np.array(_check_interval(domain))
    ends.setflags(write=False)
    return BasisSet1D(BasisKind.POLYNOMIAL, degree, ends, coefficients=coeffs)


def _as_points(basis: BasisSet1D, x) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = basis.domain
    slack = DOMAIN_SLACK * (hi - lo)
    if xs.size and (np.any(~np.isfinite(xs)) or xs.min() < lo - slack or xs.max() > hi + slack):
        raise DomainError(f"point outside [{lo}, {hi}]")
    return np.clip(xs, lo, hi)


# -- B-splines ---------------------------------------------------------------

def _find_span(knots: np.ndarray, degree: int, n_funcs: int, x: float) -> int:
    # right-continuous; the closed right end belongs to the last span
    if x >= knots[n_funcs]:
        return n_funcs - 1
    span = int(np.searchsorted(knots, x, side="right")) - 1
    return min(max(span, degree), n_funcs - 1)


def _nonzero_values(knots: np.ndarray, degree: int, span: int, x: float) -> np.ndarray:
    # Cox-de Boor triangle; values of B_{span-degree..span, degree}(x)
    values = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    values[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            temp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        values[j] = saved
    return values


def _nonzero_derivatives(knots: np.ndarray, degree: int, span: int, x: float) -> np.ndarray:
    lower = _nonzero_values(knots, degree - 1, span, x)
    derivs = np.zeros(degree + 1)
    for r in range(degree + 1):
        j = span - degree + r
        acc = 0.0
        if r >= 1:
            acc += lower[r - 1] / (knots[j + degree] - knots[j])
        if r <= degree - 1:
            acc -= lower[r] / (knots[j + degree + 1] - knots[j + 1])
        derivs[r] = degree * acc
    return derivs


def _bspline_local(basis: BasisSet1D, x: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    assert basis.knots is not None
    knots, p = basis.knots.knots, basis.degree
    span = _find_span(knots, p, basis.n_funcs, x)
    indices = np.arange(span - p, span + 1)
    return indices, _nonzero_values(knots, p, span, x), _nonzero_derivatives(knots, p, span, x)


def eval_bspline_1d(basis: BasisSet1D, x: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices, values and first derivatives of the degree+1 B-splines nonzero at x."""
    if basis.kind is not BasisKind.BSPLINE:
        raise ArgumentError(f"eval_bspline_1d needs a B-spline basis, got {basis.kind.value}")
    xs = _as_points(basis, x)
    if xs.size != 1:
        raise ArgumentError("eval_bspline_1d takes a single point")
    return _bspline_local(basis, float(xs[0]))


# -- RePU --------------------------------------------------------------------

def repu(z, p: int) -> np.ndarray:
    """sigma(z; p) = max(0, z)**p."""
    return np.maximum(np.asarray(z, dtype=float), 0.0) ** p


def repu_derivative(z, p: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(z > 0.0, p * np.maximum(z, 0.0) ** (p - 1), 0.0)


def _repu_tabulate(basis: BasisSet1D, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p, sites = basis.degree, basis.breakpoints
    z_up = xs[:, None] - sites[None, :-1]      # sigma(x - x_i), i = 0..n-1
    z_down = sites[None, 1:] - xs[:, None]     # sigma(x_i - x), i = 1..n
    s_up, ds_up = repu(z_up, p), repu_derivative(z_up, p)
    s_down, ds_down = repu(z_down, p), -repu_derivative(z_down, p)
    if basis.kind is BasisKind.REPU_MU:
        return np.hstack([s_up, s_down]), np.hstack([ds_up, ds_down])
    lo, hi = basis.domain
    length = hi - lo
    w_left = ((hi - xs) / length)[:, None]
    w_right = ((xs - lo) / length)[:, None]
    values = np.hstack([w_left * s_up, w_right * s_down])
    derivs = np.hstack([w_left * ds_up - s_up / length, w_right * ds_down + s_down / length])
    return values, derivs


def eval_repu_family(basis: BasisSet1D, x: float) -> Tuple[np.ndarray, np.ndarray]:
    """Values and first derivatives of every member of a RePU family at x."""
    if basis.kind not in (BasisKind.REPU_MU, BasisKind.REPU_LAMBDA):
        raise ArgumentError(f"eval_repu_family needs a RePU basis, got {basis.kind.value}")
    values, derivs = _repu_tabulate(basis, _as_points(basis, x)[:1])
    return values[0], derivs[0]


# -- dense tables ------------------------------------------------------------

def tabulate(basis: BasisSet1D, x) -> Tuple[np.ndarray, np.ndarray]:
    """Dense (points x functions) tables of values and first derivatives."""
    xs = _as_points(basis, x)
    if basis.kind is BasisKind.BSPLINE:
        values = np.zeros((xs.size, basis.n_funcs))
        derivs = np.zeros_like(values)
        for k, xk in enumerate(xs):
            idx, v, d = _bspline_local(basis, float(xk))
            values[k, idx] = v
            derivs[k, idx] = d
        return values, derivs
    if basis.kind is BasisKind.POLYNOMIAL:
        assert basis.coefficients is not None
        coeffs = basis.coefficients
        values = npoly.polyvander(xs, basis.degree) @ coeffs.T
        dcoeffs = npoly.polyder(coeffs, axis=1)
        derivs = npoly.polyvander(xs, basis.degree - 1) @ dcoeffs.T
        return values, derivs
    return _repu_tabulate(basis, xs)


def _nonzero_1d(basis: BasisSet1D, x: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if basis.kind is BasisKind.BSPLINE:
        return eval_bspline_1d(basis, x)
    values, derivs = tabulate(basis, x)
    return np.arange(basis.n_funcs), values[0], derivs[0]


# -- tensor products ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TensorBasis2D:
    basis_x: BasisSet1D
    basis_t: BasisSet1D

    @property
    def shape(self) -> Tuple[int, int]:
        return self.basis_x.n_funcs, self.basis_t.n_funcs

    @property
    def n_funcs(self) -> int:
        nx, nt = self.shape
        return nx * nt

    @property
    def poly_degree(self) -> int:
        return max(self.basis_x.poly_degree, self.basis_t.poly_degree)

    def flat_index(self, i: int, j: int) -> int:
        return i * self.basis_t.n_funcs + j


def eval_tensor_2d(basis: TensorBasis2D, x: float, t: float
                   ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Flat row-major indices, values, d/dx and d/dt of the products nonzero at (x, t)."""
    ix, vx, dx = _nonzero_1d(basis.basis_x, x)
    it, vt, dt = _nonzero_1d(basis.basis_t, t)
    indices = (ix[:, None] * basis.basis_t.n_funcs + it[None, :]).ravel()
    return (indices, np.outer(vx, vt).ravel(), np.outer(dx, vt).ravel(),
            np.outer(vx, dt).ravel())


def tabulate_tensor(basis: TensorBasis2D, x, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense tables (values, d/dx, d/dt) at paired scattered points (x_k, t_k)."""
    vx, dx = tabulate(basis.basis_x, x)
    vt, dt = tabulate(basis.basis_t, t)
    if vx.shape[0] != vt.shape[0]:
        raise ArgumentError("x and t must have the same number of points")
    k = vx.shape[0]

    def prod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("ki,kj->kij", a, b).reshape(k, -1)

    return prod(vx, vt), prod(dx, vt), prod(vx, dt)


def tabulate_tensor_grid(basis: TensorBasis2D, xs, ts) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense tables over the grid xs x ts; point (a, b) sits in row a*len(ts) + b."""
    vx, dx = tabulate(basis.basis_x, xs)
    vt, dt = tabulate(basis.basis_t, ts)
    m = vx.shape[0] * vt.shape[0]

    def prod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("ai,bj->abij", a, b).reshape(m, -1)

    return prod(vx, vt), prod(dx, vt), prod(vx, dt)
