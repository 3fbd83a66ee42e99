"""Experiment configuration: ``key = value`` files, defaults and validity guards.

Blank lines and ``#`` comments are ignored.  List-valued keys take comma-separated
values; ``ys`` and ``gamma`` may be lists, which defines a sweep axis.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

from .errors import EscapeError
from .rates import DETERMINISTIC_METHODS, METHODS

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_PARSE = 2
EXIT_GUARD = 3

GAMMA_GUARD = 0.1
EIGEN_METHODS = frozenset({"laguerre_root", "fp_numeric"})
MAX_SWEEP_POINTS = 1000


class ConfigError(EscapeError):
    """Configuration problem carrying the process exit code."""

    def __init__(self, message: str, exit_code: int, line: Optional[int] = None,
                 constraint: Optional[str] = None):
        self.exit_code = exit_code
        self.line = line
        self.constraint = constraint
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message, EXIT_PARSE, line=line)


class GuardViolation(ConfigError):
    def __init__(self, constraint: str, detail: str):
        super().__init__(f"validity guard violated: {constraint} ({detail})", EXIT_GUARD,
                         constraint=constraint)


@dataclass(frozen=True)
class ExperimentConfig:
    """A parameter point or sweep.

    ``gamma`` is the damping in units of ``omega0``.  ``ys`` and ``gamma`` hold one
    value for a point and several values along a single sweep axis.
    """

    ys: tuple[float, ...] = (10.0,)
    gamma: tuple[float, ...] = (0.01,)
    mass: float = 1.0
    omega0: float = 1.0
    hbar: float = 1.0
    methods: tuple[str, ...] = DETERMINISTIC_METHODS
    grid_cells: int = 4000
    ntraj: int = 2000
    t_max: Optional[float] = None
    cutoff: float = 50.0
    mc_mode: str = "cubic"
    seed: int = 0
    workers: int = 1
    profile: bool = False
    out: str = "out"

    @property
    def is_sweep(self) -> bool:
        return len(self.ys) > 1 or len(self.gamma) > 1

    def points(self) -> list[tuple[float, float]]:
        return [(y, g) for y in self.ys for g in self.gamma]

    def at(self, ys: float, gamma: float) -> "ExperimentConfig":
        return replace(self, ys=(ys,), gamma=(gamma,))

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("ys", "gamma", "methods"):
            d[key] = list(d[key])
        return d

    def config_hash(self) -> str:
        """SHA-256 of the canonical config, excluding the output directory."""
        d = self.as_dict()
        d.pop("out")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def echo(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, list):
                value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            elif value is None:
                value = "auto"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _float(text: str, key: str, line: Optional[int]) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigParseError(f"{key}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(value):
        raise ConfigParseError(f"{key}: value must be finite", line)
    return value


def _int(text: str, key: str, line: Optional[int]) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigParseError(f"{key}: cannot parse {text!r} as an integer", line) from None


def _bool(text: str, key: str, line: Optional[int]) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigParseError(f"{key}: expected a boolean, got {text!r}", line)


def _float_list(text: str, key: str, line: Optional[int]) -> tuple[float, ...]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigParseError(f"{key}: empty list", line)
    return tuple(_float(t, key, line) for t in items)


def _methods(text: str, line: Optional[int]) -> tuple[str, ...]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigParseError("methods: at least one method is required", line)
    out: list[str] = []
    for item in items:
        expanded = DETERMINISTIC_METHODS if item in ("all", "deterministic") else (item,)
        for m in expanded:
            if m not in METHODS:
                raise ConfigParseError(f"methods: unknown method {m!r}; choose from {', '.join(METHODS)}",
                                       line)
            if m not in out:
                out.append(m)
    return tuple(out)


_PARSERS = {
    "ys": lambda v, n: _float_list(v, "ys", n),
    "gamma": lambda v, n: _float_list(v, "gamma", n),
    "mass": lambda v, n: _float(v, "mass", n),
    "omega0": lambda v, n: _float(v, "omega0", n),
    "hbar": lambda v, n: _float(v, "hbar", n),
    "methods": _methods,
    "grid_cells": lambda v, n: _int(v, "grid_cells", n),
    "ntraj": lambda v, n: _int(v, "ntraj", n),
    "t_max": lambda v, n: None if v.lower() == "auto" else _float(v, "t_max", n),
    "cutoff": lambda v, n: _float(v, "cutoff", n),
    "mc_mode": lambda v, n: v,
    "seed": lambda v, n: _int(v, "seed", n),
    "workers": lambda v, n: _int(v, "workers", n),
    "profile": lambda v, n: _bool(v, "profile", n),
    "out": lambda v, n: v,
}
KEYS = tuple(_PARSERS)


def parse_value(key: str, value: str, line: Optional[int] = None):
    if key not in _PARSERS:
        raise ConfigParseError(f"unknown key {key!r}", line)
    return _PARSERS[key](value.strip(), line)


def parse_config_text(text: str) -> dict:
    """Raw ``key -> value`` mapping; raises :class:`ConfigParseError` with line numbers."""
    values: dict = {}
    for num, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", num)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigParseError(f"duplicate key {key!r}", num)
        values[key] = parse_value(key, value, num)
    return values


def build_config(values: dict) -> ExperimentConfig:
    """Apply defaults to parsed values and check structural and validity constraints."""
    cfg = ExperimentConfig(**values)
    check_structure(cfg)
    check_guards(cfg)
    return cfg


def check_structure(cfg: ExperimentConfig) -> None:
    if not cfg.methods:
        raise ConfigParseError("methods: at least one method is required")
    if len(cfg.ys) > 1 and len(cfg.gamma) > 1:
        raise ConfigParseError("a sweep runs along one axis: give a list for ys or gamma, not both")
    if len(cfg.points()) > MAX_SWEEP_POINTS:
        raise ConfigParseError(f"sweep has more than {MAX_SWEEP_POINTS} points")
    for name in ("mass", "omega0", "hbar", "cutoff"):
        if not getattr(cfg, name) > 0.0:
            raise ConfigParseError(f"{name} must be > 0")
    if cfg.grid_cells < 100:
        raise ConfigParseError("grid_cells must be >= 100")
    if cfg.ntraj < 1:
        raise ConfigParseError("ntraj must be >= 1")
    if cfg.workers < 1:
        raise ConfigParseError("workers must be >= 1")
    if cfg.mc_mode not in ("cubic", "harmonic"):
        raise ConfigParseError("mc_mode must be 'cubic' or 'harmonic'")
    if cfg.t_max is not None and not cfg.t_max > 0.0:
        raise ConfigParseError("t_max must be > 0")


def check_guards(cfg: ExperimentConfig) -> None:
    """Hard validity guards; violations exit with code 3."""
    for g in cfg.gamma:
        if g < 0.0:
            raise GuardViolation("gamma/Omega0 >= 0", f"gamma = {g}")
        if g > GAMMA_GUARD:
            raise GuardViolation(f"gamma/Omega0 <= {GAMMA_GUARD}", f"gamma = {g}")
    for y in cfg.ys:
        if not y > 0.0:
            raise GuardViolation("ys > 0", f"ys = {y}")
        if y < 2.0 and EIGEN_METHODS.intersection(cfg.methods):
            raise GuardViolation("ys >= 2 for eigenvalue methods", f"ys = {y}")
    if "langevin_mc" in cfg.methods and 0.0 in cfg.gamma:
        raise GuardViolation("gamma/Omega0 > 0 for langevin_mc", "the burn-in is 3/gamma")


def soft_warnings(ys: float, gamma: float) -> list[str]:
    """Conditions of the weak-damping, high-barrier regime that are only approximately met."""
    out = []
    if ys < 5.0:
        out.append(f"ys = {ys} is not large compared with 1; asymptotic forms are rough")
    # hbar*Omega0 >~ eps_s*gamma/Omega0  <=>  ys*gamma/(2 Omega0) <~ 1
    if ys * gamma / 2.0 > 1.0:
        out.append(f"ys*gamma/2 = {ys * gamma / 2.0:.3g} > 1: energy-diffusion regime not satisfied")
    return out


def validate_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse configuration text, apply ``overrides`` (already-parsed values) and validate."""
    values = parse_config_text(text)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(values)


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigParseError(f"cannot read config {path!r}: {exc}") from None
    return validate_config(text, overrides)


__all__ = [
    "ConfigError", "ConfigParseError", "GuardViolation", "ExperimentConfig", "KEYS",
    "EXIT_OK", "EXIT_PARTIAL", "EXIT_PARSE", "EXIT_GUARD", "build_config", "load_config",
    "parse_config_text", "parse_value", "soft_warnings", "validate_config",
]
