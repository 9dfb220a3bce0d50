"""dualgal: duality-based Galerkin solvers for linear model problems."""

__all__ = [
    "assembly",
    "basis",
    "cli",
    "config",
    "duality_core",
    "errors",
    "experiment",
    "models",
    "problems",
    "quadrature",
    "results",
    "solver",
    "utils",
]
