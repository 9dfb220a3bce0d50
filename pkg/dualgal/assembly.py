from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .basis import (BasisKind, BasisSet1D, TensorBasis2D, make_bspline_basis, make_polynomial_basis,
                    make_repu_basis, tabulate, tabulate_tensor_grid)
from .errors import ArgumentError
from .models import ProblemKind, ProblemSpec
from .quadrature import (gauss_legendre_rule, gauss_points, integrate_over_spans, integrate_until_stable,
                         merge_breakpoints)

logger = logging.getLogger("dualgal.assembly")

Basis = Union[BasisSet1D, TensorBasis2D]

# a basis value below this (relative) counts as vanishing on a Dirichlet face
FACE_ZERO = 1e-14
LIFT_TOL = 1e-10

__all__ = ["BasisConfig", "DualAnsatz", "AssembledSystem", "ProblemSpec", "ProblemKind",
           "build_dual_ansatz", "assemble", "assemble_ivp_ode", "cross_blocks"]


@dataclass(frozen=True)
class BasisConfig:
    """How to build one dual field: family bspline | repu | polynomial."""
    family: str = "bspline"
    degree: int = 1
    n: int = 1
    coefficients: Optional[Tuple[Tuple[float, ...], ...]] = None


@dataclass(frozen=True, eq=False)
class DualAnsatz:
    """Paired dual spaces with Dirichlet masks.

    ``*_free`` are boolean masks over basis indices; ``*_fixed`` hold the lifted coefficients
    of the constrained functions (zero where free).
    """
    lambda_basis: Basis
    mu_basis: Optional[Basis]
    lambda_free: np.ndarray
    mu_free: np.ndarray
    lambda_fixed: np.ndarray
    mu_fixed: np.ndarray

    @property
    def n_lambda(self) -> int:
        return int(np.count_nonzero(self.lambda_free))

    @property
    def n_mu(self) -> int:
        return int(np.count_nonzero(self.mu_free))

    @property
    def dof(self) -> int:
        return self.n_lambda + self.n_mu

    @property
    def free(self) -> np.ndarray:
        return np.concatenate([self.lambda_free, self.mu_free])

    @property
    def fixed(self) -> np.ndarray:
        return np.concatenate([self.lambda_fixed, self.mu_fixed])

    def full_coefficients(self, d: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Scatter free coefficients d (lambda block first) into full (lambda, mu) vectors."""
        d = np.asarray(d, dtype=float)
        if d.shape != (self.dof,):
            raise ArgumentError(f"expected {self.dof} coefficients, got shape {d.shape}")
        full = self.fixed.copy()
        full[self.free] = d
        n_lam = self.lambda_free.size
        return full[:n_lam], full[n_lam:]


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    K: np.ndarray
    f: np.ndarray
    dof_map: Tuple[Tuple[str, int], ...]
    n_lambda: int

    @property
    def size(self) -> int:
        return self.f.size


# -- ansatz --------------------------------------------------------------------

def _make_1d(cfg: BasisConfig, field: str, domain: Tuple[float, float]) -> BasisSet1D:
    family = cfg.family.lower()
    if family == "bspline":
        return make_bspline_basis(cfg.degree, cfg.n, domain)
    if family == "repu":
        kind = BasisKind.REPU_LAMBDA if field == "lambda" else BasisKind.REPU_MU
        return make_repu_basis(kind, cfg.degree, cfg.n, domain)
    if family == "polynomial":
        if not cfg.coefficients:
            raise ArgumentError("polynomial basis config needs coefficients")
        return make_polynomial_basis(cfg.coefficients, domain)
    raise ArgumentError(f"unknown basis family: {cfg.family!r}")


def _face_rows(basis: BasisSet1D, faces: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    rows = tabulate(basis, np.asarray(faces, dtype=float))[0]
    scale = max(1.0, float(np.max(np.abs(rows), initial=0.0)))
    touching = np.any(np.abs(rows) > FACE_ZERO * scale, axis=0)
    return rows, touching


def _constrain_1d(basis: BasisSet1D, data: Dict[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Free mask and lifted coefficients matching Dirichlet data {point: value}."""
    free = np.ones(basis.n_funcs, dtype=bool)
    fixed = np.zeros(basis.n_funcs)
    if not data:
        return free, fixed
    points = list(data)
    values = np.array([data[p] for p in points], dtype=float)
    rows, touching = _face_rows(basis, points)
    free &= ~touching
    if touching.any():
        coef = scipy.linalg.lstsq(rows[:, touching], values)[0]
        fixed[touching] = coef
        misfit = float(np.max(np.abs(rows[:, touching] @ coef - values)))
    else:
        misfit = float(np.max(np.abs(values)))
    if misfit > LIFT_TOL * max(1.0, float(np.max(np.abs(values)))):
        raise ArgumentError(f"{basis.kind.value} basis cannot represent Dirichlet data {data}")
    return free, fixed


def _constrain_2d(basis: TensorBasis2D, x_faces: Sequence[float], t_faces: Sequence[float]
                  ) -> Tuple[np.ndarray, np.ndarray]:
    # homogeneous data only
    mask = np.zeros(basis.shape, dtype=bool)
    if x_faces:
        mask[_face_rows(basis.basis_x, x_faces)[1], :] = True
    if t_faces:
        mask[:, _face_rows(basis.basis_t, t_faces)[1]] = True
    return ~mask.ravel(), np.zeros(basis.n_funcs)


def build_dual_ansatz(spec: ProblemSpec, lambda_cfg: BasisConfig,
                      mu_cfg: Optional[BasisConfig] = None) -> DualAnsatz:
    """Dual spaces for spec with the admissibility masks of its kind."""
    kind = spec.kind
    empty_b, empty_f = np.zeros(0, dtype=bool), np.zeros(0)

    if kind is ProblemKind.IVP_ODE:
        if lambda_cfg.family.lower() == "repu":
            raise ArgumentError("RePU families cannot interpolate lambda(T)")
        lam = _make_1d(lambda_cfg, "lambda", (0.0, spec.T))
        free, fixed = _constrain_1d(lam, {spec.T: spec.lambda_terminal})
        return DualAnsatz(lam, None, free, empty_b, fixed, empty_f)

    if mu_cfg is None:
        raise ArgumentError(f"{kind.value} needs a mu basis")

    if kind.is_steady:
        lam = _make_1d(lambda_cfg, "lambda", (0.0, 1.0))
        mu = _make_1d(mu_cfg, "mu", (0.0, 1.0))
        lo, hi = spec.lambda_data
        lam_free, lam_fixed = _constrain_1d(lam, {0.0: lo, 1.0: hi})
        mu_free, mu_fixed = _constrain_1d(mu, {})
        return DualAnsatz(lam, mu, lam_free, mu_free, lam_fixed, mu_fixed)

    for cfg in (lambda_cfg, mu_cfg):
        if cfg.family.lower() != "bspline":
            raise ArgumentError(f"{kind.value} needs tensor-product B-splines, got {cfg.family!r}")
    lam = TensorBasis2D(make_bspline_basis(lambda_cfg.degree, lambda_cfg.n, (0.0, 1.0)),
                        make_bspline_basis(lambda_cfg.degree, lambda_cfg.n, (0.0, spec.T)))
    mu = TensorBasis2D(make_bspline_basis(mu_cfg.degree, mu_cfg.n, (0.0, 1.0)),
                       make_bspline_basis(mu_cfg.degree, mu_cfg.n, (0.0, spec.T)))
    if kind is ProblemKind.TRANSIENT_HEAT:
        lam_free, lam_fixed = _constrain_2d(lam, [0.0], [spec.T])
        mu_free, mu_fixed = _constrain_2d(mu, [1.0], [])
    else:
        lam_free, lam_fixed = _constrain_2d(lam, [0.0, 1.0], [spec.T])
        mu_free, mu_fixed = _constrain_2d(mu, [], [])
    return DualAnsatz(lam, mu, lam_free, mu_free, lam_fixed, mu_fixed)


# -- quadrature tables -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Tables:
    lam: np.ndarray
    lam_x: np.ndarray
    lam_t: Optional[np.ndarray]
    mu: np.ndarray
    mu_x: np.ndarray
    weights: np.ndarray


def _covers(merged: np.ndarray, sites: np.ndarray) -> bool:
    return bool(np.all(np.min(np.abs(merged[None, :] - sites[:, None]), axis=1) <= 1e-12))


def _tables(spec: ProblemSpec, ansatz: DualAnsatz) -> _Tables:
    lb, mb = ansatz.lambda_basis, ansatz.mu_basis
    assert mb is not None
    rule = gauss_legendre_rule(max(lb.poly_degree, mb.poly_degree) + 1)
    if isinstance(lb, TensorBasis2D):
        assert isinstance(mb, TensorBasis2D)
        bx = merge_breakpoints(lb.basis_x.breakpoints, mb.basis_x.breakpoints)
        bt = merge_breakpoints(lb.basis_t.breakpoints, mb.basis_t.breakpoints)
        assert all(_covers(bx, b.basis_x.breakpoints) and _covers(bt, b.basis_t.breakpoints)
                   for b in (lb, mb))
        xs, wx = gauss_points(bx, rule)
        ts, wt = gauss_points(bt, rule)
        lam, lam_x, lam_t = tabulate_tensor_grid(lb, xs, ts)
        mu, mu_x, _ = tabulate_tensor_grid(mb, xs, ts)
        return _Tables(lam, lam_x, lam_t, mu, mu_x, np.outer(wx, wt).ravel())
    bp = merge_breakpoints(lb.breakpoints, mb.breakpoints)
    assert _covers(bp, lb.breakpoints) and _covers(bp, mb.breakpoints)
    xs, w = gauss_points(bp, rule)
    lam, lam_x = tabulate(lb, xs)
    mu, mu_x = tabulate(mb, xs)
    return _Tables(lam, lam_x, None, mu, mu_x, w)


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _blocks(tab: _Tables, kappa: float, alpha: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    w = tab.weights[:, None]
    c = alpha * tab.lam + kappa * tab.lam_x
    k_ll = c.T @ (w * c)
    k_lm = -(c.T @ (w * tab.mu))
    k_mm = tab.mu_x.T @ (w * tab.mu_x) + tab.mu.T @ (w * tab.mu)
    if tab.lam_t is not None:
        k_ll = k_ll + tab.lam_t.T @ (w * tab.lam_t)
        k_lm = k_lm + tab.lam_t.T @ (w * tab.mu_x)
    return _sym(k_ll), k_lm, _sym(k_mm)


def cross_blocks(spec: ProblemSpec, ansatz: DualAnsatz) -> Tuple[np.ndarray, np.ndarray]:
    """K_lambda_mu as assembled, and K_mu_lambda integrated on its own (full, unmasked)."""
    kappa, alpha = spec.coefficients
    tab = _tables(spec, ansatz)
    w = tab.weights[:, None]
    c = alpha * tab.lam + kappa * tab.lam_x
    k_ml = -(tab.mu.T @ (w * c))
    if tab.lam_t is not None:
        k_ml = k_ml + tab.mu_x.T @ (w * tab.lam_t)
    return _blocks(tab, kappa, alpha)[1], k_ml


# -- force -------------------------------------------------------------------------

def _force(spec: ProblemSpec, ansatz: DualAnsatz) -> Tuple[np.ndarray, np.ndarray]:
    lb, mb = ansatz.lambda_basis, ansatz.mu_basis
    assert mb is not None
    if isinstance(mb, BasisSet1D):
        ends = tabulate(mb, list(mb.domain))[0]
        f_mu = spec.bc_right * ends[1] - spec.bc_left * ends[0]
        return np.zeros(lb.n_funcs), f_mu

    assert isinstance(lb, TensorBasis2D)
    count = max(lb.poly_degree, mb.poly_degree) + 1
    u0 = spec.initial_profile()
    lx = lb.basis_x
    u0_moments = integrate_until_stable(
        lx.breakpoints, lambda x: u0(x)[:, None] * tabulate(lx, x)[0], start=count)
    lam_t0 = tabulate(lb.basis_t, [0.0])[0][0]
    f_lam = -np.outer(u0_moments, lam_t0).ravel()

    mt = mb.basis_t
    mu_t_int = integrate_over_spans(mt.breakpoints, gauss_legendre_rule(count),
                                    lambda t: tabulate(mt, t)[0])
    mu_x_ends = tabulate(mb.basis_x, [0.0, 1.0])[0]
    if spec.kind is ProblemKind.TRANSIENT_HEAT:
        edge = -spec.bc_left * mu_x_ends[0]
    else:
        edge = spec.bc_right * mu_x_ends[1] - spec.bc_left * mu_x_ends[0]
    return f_lam, np.outer(edge, mu_t_int).ravel()


def _reduce(k_full: np.ndarray, f_full: np.ndarray, ansatz: DualAnsatz) -> AssembledSystem:
    free, fixed = ansatz.free, ansatz.fixed
    f = f_full[free] - k_full[np.ix_(free, ~free)] @ fixed[~free]
    k = k_full[np.ix_(free, free)]
    dof_map = tuple(("lambda", int(i)) for i in np.flatnonzero(ansatz.lambda_free)) + \
        tuple(("mu", int(j)) for j in np.flatnonzero(ansatz.mu_free))
    return AssembledSystem(K=k, f=f, dof_map=dof_map, n_lambda=ansatz.n_lambda)


def assemble(spec: ProblemSpec, ansatz: DualAnsatz) -> AssembledSystem:
    """Stiffness matrix and force vector of the dual weak form over the free coefficients."""
    if spec.kind is ProblemKind.IVP_ODE:
        if not isinstance(ansatz.lambda_basis, BasisSet1D):
            raise ArgumentError("ivp_ode needs a univariate lambda basis")
        return assemble_ivp_ode(spec, ansatz.lambda_basis, spec.lambda_terminal)
    if spec.kind.is_transient != isinstance(ansatz.lambda_basis, TensorBasis2D):
        raise ArgumentError(f"ansatz does not match problem kind {spec.kind.value}")
    kappa, alpha = spec.coefficients
    k_ll, k_lm, k_mm = _blocks(_tables(spec, ansatz), kappa, alpha)
    k_full = np.block([[k_ll, k_lm], [k_lm.T, k_mm]])
    f_lam, f_mu = _force(spec, ansatz)
    system = _reduce(k_full, np.concatenate([f_lam, f_mu]), ansatz)
    logger.info("assembled %s: %s lambda + %s mu free dof",
                spec.kind.value, ansatz.n_lambda, ansatz.n_mu)
    return system


def assemble_ivp_ode(spec: ProblemSpec, lambda_basis: BasisSet1D, lambda_T: float) -> AssembledSystem:
    """Dual boundary-value problem in time: lambda(T) = lambda_T, Robin condition at t = 0."""
    if spec.kind is not ProblemKind.IVP_ODE:
        raise ArgumentError(f"assemble_ivp_ode needs kind ivp_ode, got {spec.kind.value}")
    lo, hi = lambda_basis.domain
    if abs(lo) > 1e-12 * spec.T or abs(hi - spec.T) > 1e-12 * spec.T:
        raise ArgumentError(f"lambda basis lives on [{lo}, {hi}], expected [0, {spec.T}]")
    free, fixed = _constrain_1d(lambda_basis, {hi: lambda_T})
    ansatz = DualAnsatz(lambda_basis, None, free, np.zeros(0, dtype=bool), fixed, np.zeros(0))

    a, u0 = float(spec.a), float(spec.u0)
    rule = gauss_legendre_rule(lambda_basis.poly_degree + 1)
    ts, w = gauss_points(lambda_basis.breakpoints, rule)
    n, dn = tabulate(lambda_basis, ts)
    at_zero = tabulate(lambda_basis, [lo])[0][0]
    wc = w[:, None]
    k_full = _sym(dn.T @ (wc * dn) + a * a * (n.T @ (wc * n))) - a * np.outer(at_zero, at_zero)
    f_full = -u0 * at_zero
    system = _reduce(k_full, f_full, ansatz)
    logger.info("assembled ivp_ode: %s free dof (a=%s, lambda_T=%s)", ansatz.n_lambda, a, lambda_T)
    return system
