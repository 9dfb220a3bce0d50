from __future__ import annotations


class DualGalError(Exception):
    """Base class for every error raised by dualgal."""


class ArgumentError(DualGalError, ValueError):
    """An argument or precondition is invalid."""


class DomainError(ArgumentError):
    """An evaluation point lies outside the admissible domain."""


class ConfigError(ArgumentError):
    """An experiment file is malformed."""


class InconsistentSystem(DualGalError):
    """The residual of a dual solve stays above tolerance."""

    def __init__(self, residual: float, tol: float, what: str = "system"):
        self.residual = residual
        self.tol = tol
        super().__init__(f"{what} is inconsistent: residual {residual:.3e} > tol {tol:.1e}")


class SingularDtP(DualGalError):
    """A denominator of the dual-to-primal map collapsed."""


class NoConvergence(DualGalError):
    """An iteration ran out of budget before reaching tolerance."""


class Degenerate(DualGalError):
    """A Hessian or small linear system is numerically singular."""
