from __future__ import annotations
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .assembly import BasisConfig, assemble, build_dual_ansatz
from .duality_core import maxent_coordinates, solve_linear_dual, solve_quadratic_pair
from .errors import ArgumentError, DualGalError
from .experiment import ExperimentConfig, load_experiment
from .models import ProblemKind
from .problems import (PrimalSolution, adjoint_closed_form, adjoint_sensitivity, convergence_study,
                       error_norms, exact_on_grid, exact_solution, ivp_dual_closed_form, ivp_problem,
                       solve_problem)
from .results import write_table
from .solver import dual_objective, solve_symmetric_consistent
from .utils import ensure_dirs, fmt_float, parse_floats, parse_matrix, parse_pair

logger = logging.getLogger("dualgal.cli")

POLYGONS: Dict[str, List[Tuple[float, float]]] = {
    "unit-square": [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
    "triangle": [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
    "pentagon": [(float(np.cos(np.pi / 2 + 2 * np.pi * k / 5)), float(np.sin(np.pi / 2 + 2 * np.pi * k / 5)))
                 for k in range(5)],
}


def setup_logging(verbose: int = 0, log_file: bool = False) -> None:
    root = logging.getLogger("dualgal")
    if log_file:
        ensure_dirs()
        handler: logging.Handler = logging.FileHandler(config.LOG_PATH)
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s: %(message)s"))
    for old in list(root.handlers):
        root.removeHandler(old)
        old.close()
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING)


def _load(args: argparse.Namespace, mode: str) -> Tuple[ExperimentConfig, Optional[Path], str]:
    cfg = load_experiment(Path(args.config), mode)
    out = Path(args.out) if args.out else cfg.out
    fmt = args.format or cfg.fmt
    return cfg, out, fmt


def _solution_table(solution: PrimalSolution, grid: int) -> Tuple[List[str], np.ndarray]:
    spec = solution.spec
    if solution.is_transient:
        xs = np.linspace(0.0, 1.0, grid)
        ts = np.linspace(0.0, spec.T, grid)
        u, ux = exact_on_grid(spec, xs, ts)
        uh, qh = solution.fields_on_grid(xs, ts)
        X, Tm = np.meshgrid(xs, ts, indexing="ij")
        cols = [X, Tm, u, uh, ux, qh]
        return ["x", "t", "u_exact", "u_H", "q_exact", "q_H"], np.column_stack([c.ravel() for c in cols])
    lo, hi = solution.ansatz.lambda_basis.domain
    xs = np.linspace(lo, hi, grid)
    u, ux = exact_solution(spec, xs)
    uh, qh = solution.fields(xs)
    first = "t" if spec.kind is ProblemKind.IVP_ODE else "x"
    return [first, "u_exact", "u_H", "q_exact", "q_H"], np.column_stack([xs, u, uh, ux, qh])


def cmd_solve(args: argparse.Namespace) -> int:
    cfg, out, fmt = _load(args, "solve")
    spec = cfg.problem
    ansatz = build_dual_ansatz(spec, cfg.lambda_config(), cfg.mu_config())
    system = assemble(spec, ansatz)
    report = solve_symmetric_consistent(system, cfg.tol)
    solution = PrimalSolution(spec, ansatz, report.d)
    errs = error_norms(solution)
    columns, rows = _solution_table(solution, cfg.eval_grid)
    summary = {
        "kind": spec.kind.value,
        "family": cfg.family,
        "dof": errs.dof,
        "E_u": errs.E_u,
        "E_q": errs.E_q,
        "residual": report.residual,
        "method": report.method.value,
        "rank": report.rank_estimate,
        "dual_objective": dual_objective(system, report.d),
    }
    write_table(out, fmt, columns, rows, summary)
    logger.info("%s: dof=%s E_u=%.3e E_q=%.3e", spec.kind.value, errs.dof, errs.E_u, errs.E_q)
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    cfg, out, fmt = _load(args, "converge")
    record = convergence_study(cfg.problem, cfg.family, (cfg.p or 0, cfg.q), cfg.n_list,
                               cfg.tol, cfg.workers)
    rows = [(n, e.dof, e.E_u, e.E_q) for n, e in zip(record.n_list, record.errors)]
    summary = {
        "kind": cfg.problem.kind.value,
        "family": cfg.family,
        "p": cfg.p if cfg.p is not None else "-",
        "q": cfg.q,
        "rate_u": record.rate_u,
        "rate_q": record.rate_q,
    }
    write_table(out, fmt, ["n", "dof", "E_u", "E_q"], rows, summary)
    return 0


# -- demos ---------------------------------------------------------------------

def _vector(values: Sequence[float]) -> str:
    return "[" + ", ".join(fmt_float(v) for v in values) + "]"


def demo_linear(args: argparse.Namespace) -> int:
    A = parse_matrix(args.A)
    b = parse_floats(args.b)
    res = solve_linear_dual(A, b)
    print(f"lambda*   {_vector(res.lambda_star)}")
    print(f"x_H       {_vector(res.x_H)}")
    print(f"residual  {res.residual:.3e}")
    return 0


def demo_quadratic(args: argparse.Namespace) -> int:
    res = solve_quadratic_pair(args.beta, parse_pair(args.base))
    print(f"lambda*   {_vector(res.lambda_star)}")
    print(f"x         {fmt_float(res.x)}")
    print(f"y         {fmt_float(res.y)}")
    print(f"r1        {abs(res.x ** 2 + res.y ** 2 - 3.0):.3e}")
    print(f"r2        {abs(res.x ** 2 - res.y ** 2 - 1.0):.3e}")
    print(f"newton    {res.iterations}")
    return 0


def _polygon(token: str) -> List[Tuple[float, float]]:
    if token in POLYGONS:
        return POLYGONS[token]
    return [parse_pair(v) for v in token.split(";") if v.strip()]


def demo_maxent(args: argparse.Namespace) -> int:
    verts = _polygon(args.poly)
    point = parse_pair(args.point)
    res = maxent_coordinates(verts, point)
    for v, phi in zip(verts, res.phi):
        print(f"phi {_vector(v):<28} {fmt_float(phi)}")
    recon = res.phi @ np.asarray(verts)
    print(f"sum       {abs(float(np.sum(res.phi)) - 1.0):.3e}")
    print(f"reproduce {float(np.max(np.abs(recon - np.asarray(point)))):.3e}")
    print(f"lambda*   {_vector(res.lambda_star)}")
    return 0


def demo_ivp(args: argparse.Namespace) -> int:
    terminals = parse_floats(args.lambda_T)
    if len(terminals) != 2:
        raise ArgumentError(f"--lambda-T takes two values, got {args.lambda_T!r}")
    samples = np.linspace(0.0, args.T, args.samples)
    closed = [ivp_dual_closed_form(args.a, args.u0, lt, args.T, samples)[2] for lt in terminals]
    discrete = []
    for lt in terminals:
        spec = ivp_problem(a=args.a, u0=args.u0, T=args.T, lambda_terminal=lt)
        solution, _ = solve_problem(spec, BasisConfig("bspline", args.degree, args.n))
        discrete.append(solution.fields(samples)[0])
    a_tag, b_tag = (fmt_float(v) for v in terminals)
    print(f"{'t':>8} {'u_exact':>14} {'closed@' + a_tag:>14} {'closed@' + b_tag:>14} "
          f"{'u_H@' + a_tag:>14} {'u_H@' + b_tag:>14}")
    exact = args.u0 * np.exp(args.a * samples)
    for i, t in enumerate(samples):
        print(f"{t:8.4f} {exact[i]:14.10f} {closed[0][i]:14.10f} {closed[1][i]:14.10f} "
              f"{discrete[0][i]:14.10f} {discrete[1][i]:14.10f}")
    print(f"max |u_H@{a_tag} - u_H@{b_tag}| = {float(np.max(np.abs(discrete[0] - discrete[1]))):.3e}")
    return 0


def demo_adjoint(args: argparse.Namespace) -> int:
    value = adjoint_sensitivity(args.a, args.T, args.steps)
    exact = adjoint_closed_form(args.a, args.T)
    print(f"dF/dp     {value:.10f}")
    print(f"closed    {exact:.10f}")
    print(f"diff      {abs(value - exact):.3e}")
    return 0


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="Experiment file (key = value lines)")
    p.add_argument("--out", help="Output path (default: stdout, or `out` from the config)")
    p.add_argument("--format", choices=config.OUTPUT_FORMATS, default=None)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--log", action="store_true", help=f"Log to {config.LOG_PATH} instead of stderr")


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualgal", description="Dual variational solvers for linear model problems")
    sub = p.add_subparsers(dest="cmd")

    p_solve = sub.add_parser("solve", help="Solve one problem and write u, q on a grid")
    _add_io_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_conv = sub.add_parser("converge", help="Refinement sweep with fitted convergence rates")
    _add_io_flags(p_conv)
    p_conv.set_defaults(func=cmd_converge)

    p_demo = sub.add_parser("demo", help="Finite-dimensional dual demonstrations")
    p_demo.add_argument("-v", "--verbose", action="count", default=0)
    p_demo.add_argument("--log", action="store_true")
    demos = p_demo.add_subparsers(dest="demo", required=True)

    d = demos.add_parser("linear", help="Ax = b through the dual normal equations")
    d.add_argument("--A", required=True, help='Rows separated by ";", e.g. "1,1;1,-1"')
    d.add_argument("--b", required=True, help='e.g. "2,0"')
    d.set_defaults(func=demo_linear)

    d = demos.add_parser("quadratic", help="x^2 + y^2 = 3, x^2 - y^2 = 1 by dual ascent")
    d.add_argument("--beta", type=float, default=10.0)
    d.add_argument("--base", default="1,1", help="Base state (x, y)")
    d.set_defaults(func=demo_quadratic)

    d = demos.add_parser("maxent", help="Maximum-entropy coordinates in a convex polygon")
    d.add_argument("--poly", default="unit-square",
                   help=f"{', '.join(POLYGONS)} or vertices 'x,y;x,y;...' counterclockwise")
    d.add_argument("--point", default="0.5,0.5")
    d.set_defaults(func=demo_maxent)

    d = demos.add_parser("ivp", help="u' = a u from its dual, for two lambda(T) values")
    d.add_argument("--a", type=float, default=-1.0)
    d.add_argument("--u0", type=float, default=1.0)
    d.add_argument("--T", type=float, default=1.0)
    d.add_argument("--lambda-T", dest="lambda_T", default="0,5")
    d.add_argument("--n", type=int, default=16)
    d.add_argument("--degree", type=int, default=3)
    d.add_argument("--samples", type=int, default=11)
    d.set_defaults(func=demo_ivp)

    d = demos.add_parser("adjoint", help="dF/du0 for F = int u dt via the adjoint")
    d.add_argument("--a", type=float, default=1.0)
    d.add_argument("--T", type=float, default=1.0)
    d.add_argument("--steps", type=int, default=config.RK4_STEPS)
    d.set_defaults(func=demo_adjoint)

    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "cmd", None):
        parser.print_help()
        return 0
    setup_logging(args.verbose, args.log)
    try:
        return int(args.func(args) or 0)
    except ArgumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DualGalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
