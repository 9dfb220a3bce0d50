from __future__ import annotations
import math
from typing import Iterable, Sequence

import numpy as np

from . import config
from .errors import ArgumentError


def ensure_dirs() -> None:
    config.CACHE_DIR.mkdir(parents=True, exist_ok=True)


def fmt_float(v: float) -> str:
    # shortest repr that round-trips (at most 17 significant digits)
    return repr(float(v))


def parse_floats(s: str) -> list[float]:
    # "1, 2.5, 3" or "[1,2.5,3]"
    body = s.strip().strip("[]()")
    if not body:
        return []
    try:
        return [float(tok) for tok in body.replace(";", ",").split(",") if tok.strip()]
    except ValueError:
        raise ArgumentError(f"not a list of numbers: {s!r}") from None


def parse_ints(s: str) -> list[int]:
    vals = parse_floats(s)
    if any(v != int(v) for v in vals):
        raise ArgumentError(f"not a list of integers: {s!r}")
    return [int(v) for v in vals]


def parse_pair(s: str) -> tuple[float, float]:
    vals = parse_floats(s)
    if len(vals) != 2:
        raise ArgumentError(f"expected two comma-separated numbers, got {s!r}")
    return vals[0], vals[1]


def parse_matrix(s: str) -> np.ndarray:
    # rows separated by ';', entries by ','
    rows = [parse_floats(r) for r in s.split(";") if r.strip()]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ArgumentError(f"ragged or empty matrix: {s!r}")
    return np.array(rows, dtype=float)


def loglog_slope(dofs: Sequence[int], errs: Iterable[float]) -> float:
    """Convergence rate: minus the least-squares slope of log(err) against log(dof)."""
    pts = [(math.log(d), math.log(e)) for d, e in zip(dofs, errs) if e > 0.0]
    if len(pts) < 2:
        return float("nan")
    x, y = np.array(pts).T
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)
