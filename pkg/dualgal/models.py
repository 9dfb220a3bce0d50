from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np

from .errors import ArgumentError

Profile = Callable[[np.ndarray], np.ndarray]


class ProblemKind(str, Enum):
    IVP_ODE = "ivp_ode"
    LAPLACE_1D = "laplace_1d"
    STEADY_CD = "steady_cd"
    TRANSIENT_CD = "transient_cd"
    TRANSIENT_HEAT = "transient_heat"

    @property
    def is_transient(self) -> bool:
        return self in (ProblemKind.TRANSIENT_CD, ProblemKind.TRANSIENT_HEAT)

    @property
    def is_steady(self) -> bool:
        return self in (ProblemKind.LAPLACE_1D, ProblemKind.STEADY_CD)


@dataclass(frozen=True)
class ProblemSpec:
    """Model problem data.

    ``u0`` is the initial profile (callable of x, or a constant) for the transient kinds and the
    initial value for the IVP. ``lambda_left``/``lambda_right`` are Dirichlet data on the dual
    field for the steady kinds, ``lambda_terminal`` is lambda(T) for the IVP. The zero-flux
    right end of the heat problem is implied by the kind, ``bc_right`` is ignored there.
    """
    kind: ProblemKind
    kappa: float = 1.0
    alpha: float = 0.0
    a: float = 0.0
    u0: Union[float, Profile] = 0.0
    bc_left: float = 0.0
    bc_right: float = 0.0
    T: float = 1.0
    lambda_terminal: float = 0.0
    lambda_left: float = 0.0
    lambda_right: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.kind, ProblemKind):
            try:
                object.__setattr__(self, "kind", ProblemKind(self.kind))
            except ValueError:
                raise ArgumentError(f"unknown problem kind: {self.kind!r}") from None
        if not self.kappa >= 0.0:
            raise ArgumentError(f"kappa must be >= 0, got {self.kappa}")
        if not self.T > 0.0:
            raise ArgumentError(f"T must be > 0, got {self.T}")
        if self.kind is ProblemKind.IVP_ODE and callable(self.u0):
            raise ArgumentError("ivp_ode needs a scalar initial value u0")

    @property
    def coefficients(self) -> Tuple[float, float]:
        """Effective (kappa, alpha) for the kind: Laplace is (1, 0), heat drops convection."""
        if self.kind is ProblemKind.LAPLACE_1D:
            return 1.0, 0.0
        if self.kind is ProblemKind.TRANSIENT_HEAT:
            return float(self.kappa), 0.0
        return float(self.kappa), float(self.alpha)

    @property
    def lambda_data(self) -> Tuple[float, float]:
        return float(self.lambda_left), float(self.lambda_right)

    def initial_profile(self) -> Profile:
        u0 = self.u0
        if callable(u0):
            return lambda x: np.asarray(u0(np.asarray(x, dtype=float)), dtype=float)
        value = float(u0)
        return lambda x: np.full(np.shape(x), value)


@dataclass(frozen=True)
class ErrorPair:
    E_u: float
    E_q: float
    dof: int


@dataclass(frozen=True)
class ConvergenceRecord:
    n_list: Tuple[int, ...]
    errors: Tuple[ErrorPair, ...]
    rate_u: float
    rate_q: float

    def __post_init__(self) -> None:
        dofs = self.dofs
        assert all(b > a for a, b in zip(dofs, dofs[1:])), f"dof not increasing: {dofs}"

    @property
    def dofs(self) -> Tuple[int, ...]:
        return tuple(e.dof for e in self.errors)
