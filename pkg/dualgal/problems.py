from __future__ import annotations
import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from . import config
from .assembly import BasisConfig, DualAnsatz, assemble, build_dual_ansatz
from .basis import BasisSet1D, TensorBasis2D, tabulate
from .errors import ArgumentError, Degenerate
from .models import ConvergenceRecord, ErrorPair, ProblemKind, ProblemSpec
from .quadrature import gauss_legendre_rule, gauss_points, merge_breakpoints
from .solver import SolveReport, solve_symmetric_consistent
from .utils import loglog_slope

logger = logging.getLogger("dualgal.problems")


# -- initial profiles and presets ----------------------------------------------

def zero_profile(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def sine_two_pi(x):
    return np.sin(2.0 * np.pi * np.asarray(x, dtype=float))


def heat_profile(x):
    return 1.0 + np.sin(0.5 * np.pi * np.asarray(x, dtype=float))


U0_PROFILES: Dict[str, Callable] = {
    "zero": zero_profile,
    "sin2pi": sine_two_pi,
    "heat": heat_profile,
}


def laplace_problem(bc_left: float = 0.0, bc_right: float = 1.0,
                    lambda_left: float = 0.0, lambda_right: float = 0.0) -> ProblemSpec:
    return ProblemSpec(ProblemKind.LAPLACE_1D, bc_left=bc_left, bc_right=bc_right,
                       lambda_left=lambda_left, lambda_right=lambda_right)


def steady_cd_problem(alpha: float = 10.0, kappa: float = 1.0,
                      bc_left: float = 0.0, bc_right: float = 1.0) -> ProblemSpec:
    return ProblemSpec(ProblemKind.STEADY_CD, kappa=kappa, alpha=alpha, bc_left=bc_left, bc_right=bc_right)


def transient_cd_problem(kappa: float = 0.01, alpha: float = 0.1, u0=sine_two_pi, T: float = 1.0) -> ProblemSpec:
    return ProblemSpec(ProblemKind.TRANSIENT_CD, kappa=kappa, alpha=alpha, u0=u0, T=T)


def transient_heat_problem(kappa: float = 1.0, bc_left: float = 1.0, u0=heat_profile,
                           T: float = 1.0) -> ProblemSpec:
    return ProblemSpec(ProblemKind.TRANSIENT_HEAT, kappa=kappa, bc_left=bc_left, u0=u0, T=T)


def ivp_problem(a: float = -1.0, u0: float = 1.0, T: float = 1.0, lambda_terminal: float = 0.0) -> ProblemSpec:
    return ProblemSpec(ProblemKind.IVP_ODE, a=a, u0=u0, T=T, lambda_terminal=lambda_terminal)


PRESETS: Dict[ProblemKind, Callable[[], ProblemSpec]] = {
    ProblemKind.LAPLACE_1D: laplace_problem,
    ProblemKind.STEADY_CD: steady_cd_problem,
    ProblemKind.TRANSIENT_CD: transient_cd_problem,
    ProblemKind.TRANSIENT_HEAT: transient_heat_problem,
    ProblemKind.IVP_ODE: ivp_problem,
}


# -- dual-to-primal --------------------------------------------------------------

@dataclass(eq=False)
class PrimalSolution:
    """Primal fields recovered from a solved dual coefficient vector.

    For the IVP the single coordinate is time and q_H is the rate a * u_H.
    """
    spec: ProblemSpec
    ansatz: DualAnsatz
    d: np.ndarray
    lambda_coef: np.ndarray = field(init=False, repr=False)
    mu_coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.d = np.asarray(self.d, dtype=float)
        self.lambda_coef, self.mu_coef = self.ansatz.full_coefficients(self.d)

    @property
    def is_transient(self) -> bool:
        return isinstance(self.ansatz.lambda_basis, TensorBasis2D)

    def fields(self, x, t=None) -> Tuple[np.ndarray, np.ndarray]:
        """(u_H, q_H) at points x (and paired times t for the transient kinds)."""
        if self.is_transient != (t is not None):
            raise ArgumentError("t is required exactly for the transient kinds")
        kappa, alpha = self.spec.coefficients
        lb, mb = self.ansatz.lambda_basis, self.ansatz.mu_basis

        if self.spec.kind is ProblemKind.IVP_ODE:
            assert isinstance(lb, BasisSet1D)
            x = np.asarray(x, dtype=float)
            v, dv = tabulate(lb, x.ravel())
            a = float(self.spec.a)
            u = dv @ self.lambda_coef + a * (v @ self.lambda_coef)
            return u.reshape(x.shape), (a * u).reshape(x.shape)

        if not self.is_transient:
            assert isinstance(lb, BasisSet1D) and isinstance(mb, BasisSet1D)
            x = np.asarray(x, dtype=float)
            vl, dl = tabulate(lb, x.ravel())
            vm, dm = tabulate(mb, x.ravel())
            lam, lam_x = vl @ self.lambda_coef, dl @ self.lambda_coef
            mu, mu_x = vm @ self.mu_coef, dm @ self.mu_coef
            return mu_x.reshape(x.shape), (mu - alpha * lam - kappa * lam_x).reshape(x.shape)

        assert isinstance(lb, TensorBasis2D) and isinstance(mb, TensorBasis2D)
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        xs, ts = x.ravel(), t.ravel()
        cl = self.lambda_coef.reshape(lb.shape)
        cm = self.mu_coef.reshape(mb.shape)
        vx, dx = tabulate(lb.basis_x, xs)
        vt, dt = tabulate(lb.basis_t, ts)
        wx, ex = tabulate(mb.basis_x, xs)
        wt, _ = tabulate(mb.basis_t, ts)

        def contract(a: np.ndarray, c: np.ndarray, b: np.ndarray) -> np.ndarray:
            return np.einsum("kj,kj->k", a @ c, b)

        lam = contract(vx, cl, vt)
        lam_x = contract(dx, cl, vt)
        lam_t = contract(vx, cl, dt)
        mu = contract(wx, cm, wt)
        mu_x = contract(ex, cm, wt)
        u = lam_t + mu_x
        q = mu - alpha * lam - kappa * lam_x
        return u.reshape(x.shape), q.reshape(x.shape)

    def fields_on_grid(self, xs, ts) -> Tuple[np.ndarray, np.ndarray]:
        """(u_H, q_H) on the grid xs x ts, arrays of shape (len(xs), len(ts))."""
        if not self.is_transient:
            raise ArgumentError("grid evaluation is for the transient kinds")
        kappa, alpha = self.spec.coefficients
        lb, mb = self.ansatz.lambda_basis, self.ansatz.mu_basis
        assert isinstance(lb, TensorBasis2D) and isinstance(mb, TensorBasis2D)
        cl = self.lambda_coef.reshape(lb.shape)
        cm = self.mu_coef.reshape(mb.shape)
        vx, dx = tabulate(lb.basis_x, xs)
        vt, dt = tabulate(lb.basis_t, ts)
        wx, ex = tabulate(mb.basis_x, xs)
        wt, _ = tabulate(mb.basis_t, ts)
        lam = vx @ cl @ vt.T
        lam_x = dx @ cl @ vt.T
        lam_t = vx @ cl @ dt.T
        mu = wx @ cm @ wt.T
        mu_x = ex @ cm @ wt.T
        return lam_t + mu_x, mu - alpha * lam - kappa * lam_x


def dtp_eval(solution: PrimalSolution, x, t=None):
    """Primal (u_H, q_H) at a point; for the IVP x is the time coordinate."""
    u, q = solution.fields(x, t)
    if np.ndim(u) == 0:
        return float(u), float(q)
    return u, q


# -- exact solutions ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _SineSeries:
    """offset + exp(shift*x - drift*t) * sum_n b_n sin(k_n x) exp(-r_n t)"""
    wavenumbers: np.ndarray
    coefficients: np.ndarray
    decay: np.ndarray
    shift: float
    drift: float
    offset: float

    def grid(self, xs: np.ndarray, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        kx = np.outer(xs, self.wavenumbers)
        damp = np.exp(-np.outer(self.decay, ts))
        s = (np.sin(kx) * self.coefficients) @ damp
        c = (np.cos(kx) * (self.coefficients * self.wavenumbers)) @ damp
        env = np.exp(self.shift * xs)[:, None] * np.exp(-self.drift * ts)[None, :]
        return self.offset + env * s, env * (self.shift * s + c)

    def points(self, xs: np.ndarray, ts: np.ndarray, chunk: int = 2048) -> Tuple[np.ndarray, np.ndarray]:
        u = np.empty_like(xs)
        ux = np.empty_like(xs)
        for lo in range(0, xs.size, chunk):
            x, t = xs[lo:lo + chunk], ts[lo:lo + chunk]
            kx = np.outer(x, self.wavenumbers)
            damp = np.exp(-np.outer(t, self.decay)) * self.coefficients
            s = np.sum(np.sin(kx) * damp, axis=1)
            c = np.sum(np.cos(kx) * damp * self.wavenumbers, axis=1)
            env = np.exp(self.shift * x - self.drift * t)
            u[lo:lo + chunk] = self.offset + env * s
            ux[lo:lo + chunk] = env * (self.shift * s + c)
        return u, ux


@functools.lru_cache(maxsize=16)
def _sine_series(spec: ProblemSpec, n_terms: int) -> _SineSeries:
    kappa, alpha = spec.coefficients
    if kappa <= 0.0:
        raise ArgumentError("the series solution needs kappa > 0")
    n = np.arange(1, n_terms + 1, dtype=float)
    if spec.kind is ProblemKind.TRANSIENT_CD:
        if spec.bc_left != 0.0 or spec.bc_right != 0.0:
            raise ArgumentError("the transient convection-diffusion series needs zero boundary values")
        k = n * np.pi
        shift, drift, offset = alpha / (2.0 * kappa), alpha * alpha / (4.0 * kappa), 0.0
    elif spec.kind is ProblemKind.TRANSIENT_HEAT:
        # Dirichlet at x = 0, zero flux at x = 1
        k = (n - 0.5) * np.pi
        shift, drift, offset = 0.0, 0.0, float(spec.bc_left)
    else:
        raise ArgumentError(f"no series solution for {spec.kind.value}")

    # composite Gauss with one cell per half-period of the highest mode
    rule = gauss_legendre_rule(config.SERIES_POINTS_PER_HALF_PERIOD)
    xs, w = gauss_points(np.linspace(0.0, 1.0, n_terms + 1), rule)
    weighted = w * np.exp(-shift * xs) * (spec.initial_profile()(xs) - offset)
    coef = np.empty(n_terms)
    for lo in range(0, n_terms, 100):
        coef[lo:lo + 100] = 2.0 * (np.sin(np.outer(k[lo:lo + 100], xs)) @ weighted)
    logger.debug("series for %s: %s terms, |b_1| = %.6g", spec.kind.value, n_terms, abs(coef[0]))
    return _SineSeries(k, coef, kappa * k * k, shift, drift, offset)


def _steady_profile(spec: ProblemSpec, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    kappa, alpha = spec.coefficients
    jump = spec.bc_right - spec.bc_left
    if alpha == 0.0:
        return spec.bc_left + jump * x, np.full_like(x, jump)
    if kappa == 0.0:
        raise ArgumentError("steady convection-diffusion needs kappa > 0")
    pe = alpha / kappa
    if pe > 0.0:
        denom = -np.expm1(-pe)
        grow = np.exp(pe * (x - 1.0))
        shape, slope = grow * -np.expm1(-pe * x) / denom, pe * grow / denom
    else:
        denom = np.expm1(pe)
        shape, slope = np.expm1(pe * x) / denom, pe * np.exp(pe * x) / denom
    return spec.bc_left + jump * shape, jump * slope


def _heat_closed_form(spec: ProblemSpec) -> bool:
    return (spec.kind is ProblemKind.TRANSIENT_HEAT and spec.u0 is heat_profile
            and spec.bc_left == 1.0)


def _heat_mode(spec: ProblemSpec, x: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # u0 = 1 + sin(pi x / 2) is the first Dirichlet/Neumann mode on top of u = 1
    kappa, _ = spec.coefficients
    k = 0.5 * np.pi
    decay = np.exp(-kappa * k * k * t)
    return 1.0 + np.sin(k * x) * decay, k * np.cos(k * x) * decay


def exact_solution(spec: ProblemSpec, x, t=None, n_terms: int = config.SERIES_TERMS
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """Exact (u, u_x) at points; for the IVP x is time and the second entry is du/dt."""
    x = np.asarray(x, dtype=float)
    kind = spec.kind
    if kind.is_transient:
        if t is None:
            raise ArgumentError(f"{kind.value} needs t")
        x, t = np.broadcast_arrays(x, np.asarray(t, dtype=float))
        if _heat_closed_form(spec):
            return _heat_mode(spec, x, t)
        u, ux = _sine_series(spec, n_terms).points(x.ravel(), t.ravel())
        return u.reshape(x.shape), ux.reshape(x.shape)
    if kind.is_steady:
        return _steady_profile(spec, x)
    u = float(spec.u0) * np.exp(spec.a * x)
    return u, spec.a * u


def exact_on_grid(spec: ProblemSpec, xs, ts, n_terms: int = config.SERIES_TERMS
                  ) -> Tuple[np.ndarray, np.ndarray]:
    if not spec.kind.is_transient:
        raise ArgumentError("grid evaluation is for the transient kinds")
    if _heat_closed_form(spec):
        return _heat_mode(spec, np.asarray(xs, dtype=float)[:, None], np.asarray(ts, dtype=float)[None, :])
    return _sine_series(spec, n_terms).grid(np.asarray(xs, dtype=float), np.asarray(ts, dtype=float))


def ivp_dual_closed_form(a: float, u0: float, lambda_T: float, T: float, t
                         ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form dual of u' = a u: lambda, its rate, and u_H = lambda' + a lambda."""
    t = np.asarray(t, dtype=float)
    if a == 0.0:
        lam = (lambda_T - u0 * T) + u0 * t
        rate = np.full_like(t, u0)
        return lam, rate, rate.copy()
    r = abs(a)
    system = np.array([[r + a, -(r - a)], [np.exp(r * T), np.exp(-r * T)]])
    if not np.all(np.isfinite(system)) or np.linalg.cond(system) > 1e14:
        raise Degenerate(f"terminal-value system singular for a={a}, T={T}")
    c1, c2 = np.linalg.solve(system, [u0, lambda_T])
    grow, fall = c1 * np.exp(r * t), c2 * np.exp(-r * t)
    lam = grow + fall
    rate = r * (grow - fall)
    return lam, rate, rate + a * lam


# -- error norms -------------------------------------------------------------------

def _ratio(num: float, den: float) -> float:
    # absolute error when the exact field vanishes
    return float(np.sqrt(num / den)) if den > 0.0 else float(np.sqrt(num))


def _breakpoints(solution: PrimalSolution) -> Tuple[np.ndarray, ...]:
    lb, mb = solution.ansatz.lambda_basis, solution.ansatz.mu_basis
    if isinstance(lb, TensorBasis2D):
        assert isinstance(mb, TensorBasis2D)
        return (merge_breakpoints(lb.basis_x.breakpoints, mb.basis_x.breakpoints),
                merge_breakpoints(lb.basis_t.breakpoints, mb.basis_t.breakpoints))
    if mb is None:
        return (np.asarray(lb.breakpoints),)
    return (merge_breakpoints(lb.breakpoints, mb.breakpoints),)


def _max_degree(solution: PrimalSolution) -> int:
    bases = [solution.ansatz.lambda_basis, solution.ansatz.mu_basis]
    return max(b.poly_degree for b in bases if b is not None)


def error_norms(solution: PrimalSolution, extra_points: int = config.ERROR_EXTRA_POINTS) -> ErrorPair:
    """Relative L2 error of u and relative H1-seminorm error (through q) over the domain."""
    rule = gauss_legendre_rule(min(_max_degree(solution) + extra_points, config.MAX_GAUSS_POINTS))
    bps = _breakpoints(solution)
    if solution.is_transient:
        xs, wx = gauss_points(bps[0], rule)
        ts, wt = gauss_points(bps[1], rule)
        u, ux = exact_on_grid(solution.spec, xs, ts)
        uh, qh = solution.fields_on_grid(xs, ts)
        w = np.outer(wx, wt)
    else:
        xs, w = gauss_points(bps[0], rule)
        u, ux = exact_solution(solution.spec, xs)
        uh, qh = solution.fields(xs)
    e_u = _ratio(float(np.sum(w * (u - uh) ** 2)), float(np.sum(w * u ** 2)))
    e_q = _ratio(float(np.sum(w * (ux - qh) ** 2)), float(np.sum(w * ux ** 2)))
    return ErrorPair(E_u=e_u, E_q=e_q, dof=solution.ansatz.dof)


def line_errors(solution: PrimalSolution, t: float,
                extra_points: int = config.ERROR_EXTRA_POINTS) -> ErrorPair:
    """Relative L2 errors over x at a fixed time t (transient kinds)."""
    if not solution.is_transient:
        raise ArgumentError("line errors are for the transient kinds")
    rule = gauss_legendre_rule(min(_max_degree(solution) + extra_points, config.MAX_GAUSS_POINTS))
    xs, w = gauss_points(_breakpoints(solution)[0], rule)
    u, ux = exact_on_grid(solution.spec, xs, [t])
    uh, qh = solution.fields_on_grid(xs, [t])
    u, ux, uh, qh = u[:, 0], ux[:, 0], uh[:, 0], qh[:, 0]
    return ErrorPair(E_u=_ratio(float(w @ (u - uh) ** 2), float(w @ u ** 2)),
                     E_q=_ratio(float(w @ (ux - qh) ** 2), float(w @ ux ** 2)),
                     dof=solution.ansatz.dof)


def max_norm_errors(solution: PrimalSolution, n_points: int = config.EVAL_GRID,
                    t_range: Optional[Tuple[float, float]] = None,
                    relative: bool = False) -> Tuple[float, float]:
    """Max |u - u_H| and |u_x - q_H| on a uniform (space-time) grid."""
    lb = solution.ansatz.lambda_basis
    if solution.is_transient:
        assert isinstance(lb, TensorBasis2D)
        t0, t1 = t_range if t_range is not None else lb.basis_t.domain
        xs = np.linspace(0.0, 1.0, n_points)
        ts = np.linspace(t0, t1, n_points)
        u, ux = exact_on_grid(solution.spec, xs, ts)
        uh, qh = solution.fields_on_grid(xs, ts)
    else:
        assert isinstance(lb, BasisSet1D)
        xs = np.linspace(*lb.domain, n_points)
        u, ux = exact_solution(solution.spec, xs)
        uh, qh = solution.fields(xs)
    err_u = float(np.max(np.abs(u - uh)))
    err_q = float(np.max(np.abs(ux - qh)))
    if relative:
        err_u /= max(float(np.max(np.abs(u))), np.finfo(float).tiny)
        err_q /= max(float(np.max(np.abs(ux))), np.finfo(float).tiny)
    return err_u, err_q


# -- pipelines -------------------------------------------------------------------

def solve_problem(spec: ProblemSpec, lambda_cfg: BasisConfig, mu_cfg: Optional[BasisConfig] = None,
                  tol: float = config.SOLVE_TOL) -> Tuple[PrimalSolution, SolveReport]:
    ansatz = build_dual_ansatz(spec, lambda_cfg, mu_cfg)
    system = assemble(spec, ansatz)
    report = solve_symmetric_consistent(system, tol)
    return PrimalSolution(spec, ansatz, report.d), report


def convergence_study(spec: ProblemSpec, family: str, degrees: Tuple[int, int], n_list: Sequence[int],
                      tol: float = config.SOLVE_TOL, workers: int = 1) -> ConvergenceRecord:
    """Solve on each refinement in n_list and fit log-log rates of E_u and E_q against dof
    over the last RATE_FIT_POINTS levels.

    degrees is (p, q): p for mu, q for lambda. Levels may run on a thread pool; results keep
    the order of n_list.
    """
    n_list = tuple(int(n) for n in n_list)
    if len(n_list) < 3:
        raise ArgumentError(f"a convergence study needs at least 3 refinements, got {len(n_list)}")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ArgumentError(f"n_list must be strictly increasing: {list(n_list)}")
    p, q = degrees

    def level(n: int) -> ErrorPair:
        mu_cfg = None if spec.kind is ProblemKind.IVP_ODE else BasisConfig(family, p, n)
        solution, report = solve_problem(spec, BasisConfig(family, q, n), mu_cfg, tol)
        errs = error_norms(solution)
        logger.info("n=%s dof=%s E_u=%.3e E_q=%.3e (%s)", n, errs.dof, errs.E_u, errs.E_q,
                    report.method.value)
        return errs

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = tuple(pool.map(level, n_list))
    else:
        errors = tuple(level(n) for n in n_list)
    # rates from the finest levels only
    tail = errors[-config.RATE_FIT_POINTS:]
    dofs = [e.dof for e in tail]
    return ConvergenceRecord(n_list=n_list, errors=errors,
                             rate_u=loglog_slope(dofs, [e.E_u for e in tail]),
                             rate_q=loglog_slope(dofs, [e.E_q for e in tail]))


# -- adjoint sensitivity ----------------------------------------------------------

def adjoint_closed_form(a: float, T: float) -> float:
    return float(T) if a == 0.0 else float(np.expm1(a * T) / a)


def adjoint_sensitivity(a: float, T: float, steps: int = config.RK4_STEPS) -> float:
    """dF/dp for F = int_0^T u dt with u' = a u, u(0) = p, via the adjoint lambda(0).

    The adjoint lambda' + a lambda + 1 = 0, lambda(T) = 0 is integrated backward with RK4.
    """
    if not T > 0.0:
        raise ArgumentError(f"T must be > 0, got {T}")
    h = T / steps

    def rhs(lam: float) -> float:
        # d lambda / d(T - t)
        return a * lam + 1.0

    lam = 0.0
    for _ in range(steps):
        k1 = rhs(lam)
        k2 = rhs(lam + 0.5 * h * k1)
        k3 = rhs(lam + 0.5 * h * k2)
        k4 = rhs(lam + h * k3)
        lam += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return lam
