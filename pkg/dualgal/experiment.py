from __future__ import annotations
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import config
from .assembly import BasisConfig
from .errors import ArgumentError, ConfigError
from .models import ProblemKind, ProblemSpec
from .problems import PRESETS, U0_PROFILES
from .utils import parse_ints

FLOAT_KEYS = {
    # config key -> ProblemSpec field
    "kappa": "kappa",
    "alpha": "alpha",
    "a": "a",
    "bc_left": "bc_left",
    "bc_right": "bc_right",
    "T": "T",
    "lambda_T": "lambda_terminal",
    "lambda_left": "lambda_left",
    "lambda_right": "lambda_right",
}
KNOWN_KEYS = {"kind", "u0", "family", "p", "q", "n", "n_list", "eval_grid", "format", "out",
              "tol", "workers"} | set(FLOAT_KEYS)
FAMILIES = ("bspline", "repu")
MODES = ("solve", "converge")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    family: str = "bspline"
    p: Optional[int] = None
    q: int = 1
    n: Optional[int] = None
    n_list: Tuple[int, ...] = ()
    eval_grid: int = config.EVAL_GRID
    out: Optional[Path] = None
    fmt: str = "csv"
    tol: float = config.SOLVE_TOL
    workers: int = 1

    def lambda_config(self, n: Optional[int] = None) -> BasisConfig:
        return BasisConfig(self.family, self.q, n if n is not None else (self.n or 1))

    def mu_config(self, n: Optional[int] = None) -> Optional[BasisConfig]:
        if self.problem.kind is ProblemKind.IVP_ODE:
            return None
        assert self.p is not None
        return BasisConfig(self.family, self.p, n if n is not None else (self.n or 1))


def parse_config_text(text: str) -> Dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment."""
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {body!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def validate_config(raw: Dict[str, str], mode: str = "solve") -> Tuple[Optional[ExperimentConfig], List[str]]:
    """Check every key and build the config; returns (config or None, list of problems)."""
    errs: List[str] = []

    def err(msg: str) -> None:
        errs.append(msg)

    def as_int(key: str, minimum: int) -> Optional[int]:
        if key not in raw:
            return None
        try:
            val = int(raw[key])
        except ValueError:
            err(f"{key}: not an integer: {raw[key]!r}")
            return None
        if val < minimum:
            err(f"{key}: must be >= {minimum}, got {val}")
            return None
        return val

    for key in sorted(set(raw) - KNOWN_KEYS):
        err(f"unknown key: {key}")

    kind: Optional[ProblemKind] = None
    if "kind" not in raw:
        err("missing required key: kind")
    else:
        try:
            kind = ProblemKind(raw["kind"])
        except ValueError:
            err(f"kind: unknown problem kind {raw['kind']!r} "
                f"(expected one of {', '.join(k.value for k in ProblemKind)})")

    overrides: Dict[str, object] = {}
    for key, name in FLOAT_KEYS.items():
        if key in raw:
            try:
                overrides[name] = float(raw[key])
            except ValueError:
                err(f"{key}: not a number: {raw[key]!r}")
    if "u0" in raw:
        token = raw["u0"]
        if token in U0_PROFILES and kind is not ProblemKind.IVP_ODE:
            overrides["u0"] = U0_PROFILES[token]
        else:
            try:
                overrides["u0"] = float(token)
            except ValueError:
                err(f"u0: expected a number or one of {', '.join(U0_PROFILES)}, got {token!r}")

    family = raw.get("family", "bspline").lower()
    if family not in FAMILIES:
        err(f"family: expected one of {', '.join(FAMILIES)}, got {family!r}")
    if kind is not None and kind.is_transient and family != "bspline":
        err(f"family: {kind.value} needs bspline")

    p, q = as_int("p", 1), as_int("q", 1)
    if "q" not in raw:
        err("missing required key: q")
    if "p" not in raw and kind is not ProblemKind.IVP_ODE:
        err("missing required key: p")

    n = as_int("n", 1)
    n_list: Tuple[int, ...] = ()
    if mode == "solve" and "n" not in raw:
        err("missing required key: n")
    if mode == "converge":
        if "n_list" not in raw:
            err("missing required key: n_list")
        else:
            try:
                n_list = tuple(parse_ints(raw["n_list"]))
            except ArgumentError as e:
                err(f"n_list: {e}")
            else:
                if len(n_list) < 3:
                    err(f"n_list: needs at least 3 refinements, got {len(n_list)}")
                elif any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
                    err(f"n_list: must be positive and strictly increasing, got {list(n_list)}")

    eval_grid = as_int("eval_grid", 2)
    workers = as_int("workers", 1)
    fmt = raw.get("format", "csv").lower()
    if fmt not in config.OUTPUT_FORMATS:
        err(f"format: expected csv or json, got {fmt!r}")
    tol = config.SOLVE_TOL
    if "tol" in raw:
        try:
            tol = float(raw["tol"])
            if not tol > 0.0:
                err("tol: must be > 0")
        except ValueError:
            err(f"tol: not a number: {raw['tol']!r}")

    problem: Optional[ProblemSpec] = None
    if kind is not None:
        try:
            problem = dataclasses.replace(PRESETS[kind](), **overrides)
        except (ArgumentError, TypeError, ValueError) as e:
            err(f"problem: {e}")

    if errs:
        return None, errs
    assert problem is not None and q is not None
    return ExperimentConfig(
        problem=problem, family=family, p=p, q=q, n=n, n_list=n_list,
        eval_grid=eval_grid or config.EVAL_GRID,
        out=Path(raw["out"]) if raw.get("out") else None,
        fmt=fmt, tol=tol, workers=workers or 1,
    ), errs


def load_experiment(path: Path, mode: str = "solve") -> ExperimentConfig:
    if mode not in MODES:
        raise ArgumentError(f"unknown mode {mode!r}")
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from None
    cfg, errs = validate_config(parse_config_text(text), mode)
    if errs:
        raise ConfigError("; ".join(errs))
    assert cfg is not None
    return cfg
