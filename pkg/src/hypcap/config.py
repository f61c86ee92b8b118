"""Experiment configuration files (TOML or JSON) and their validation.

A config is a small nested document::

    command = "capacity"

    [constellation]
    units = "euclidean"          # or "hyperbolic"
    disks = [[0.5, 0.0, 0.1], [-0.25, 0.433, 0.1]]   # (center_x, center_y, radius)

    [solver]
    n = 1024

Unknown keys are rejected so that typos do not silently fall back to
defaults. Every error names the offending key.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bie import GMRES_TOL
from .geometry import ConstraintSpec, EuclideanCircle, HyperbolicDisk

COMMANDS = ("capacity", "maximize", "sweep-two-disks", "condense", "table")
UNITS = ("hyperbolic", "euclidean")
TABLE_IDS = (1, 2, 3, 4, 5, 6, 7)


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class SolverConfig:
    n: int = 256
    gmres_tol: float = GMRES_TOL


@dataclass
class OptimizerConfig:
    seed: int = 0
    starts: int = 5
    table_starts: int = 2  # starts per case in table runs
    tol: float = 1e-4  # stationarity tolerance of a converged run
    n_solver: int = 64
    n_polish: int = 256
    symmetry_pin: bool = True
    dedupe_tol: float = 1e-4


@dataclass
class SweepConfig:
    kind: str = "angular"  # centers R exp(+-i theta) or +-x
    r: float = 0.1
    R: float = 0.5  # circle of the angular sweep
    x_max: float = 0.95  # right end of the linear sweep
    points: int = 101


@dataclass
class CondenseConfig:
    m: int = 6
    R: float = 0.75
    r_min: float = 0.1
    r_max: float = 1.2
    points: int = 23


@dataclass
class OutputConfig:
    path: str | None = None
    format: str | None = None  # "json" or "csv"; inferred from the suffix when absent


@dataclass
class ExperimentConfig:
    command: str
    units: str = "hyperbolic"
    disks: list[tuple[float, float, float]] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    constraint: ConstraintSpec = field(default_factory=ConstraintSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    condense: CondenseConfig = field(default_factory=CondenseConfig)
    table: int | None = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def geometry(self) -> list[EuclideanCircle | HyperbolicDisk]:
        if self.units == "euclidean":
            return [EuclideanCircle(complex(x, y), r) for x, y, r in self.disks]
        return [HyperbolicDisk(complex(x, y), r) for x, y, r in self.disks]

    def hyperbolic_radii(self) -> list[float]:
        if self.radii:
            return list(self.radii)
        if self.units != "hyperbolic":
            raise ConfigError("constellation.units", "maximize needs hyperbolic radii")
        return [r for _, _, r in self.disks]

    def to_dict(self) -> dict:
        """Plain-data form that :func:`from_dict` reads back unchanged."""
        d = {"command": self.command}
        con: dict[str, Any] = {"units": self.units}
        if self.disks:
            con["disks"] = [list(t) for t in self.disks]
        if self.radii:
            con["radii"] = list(self.radii)
        d["constellation"] = con
        d["constraint"] = {"kind": self.constraint.kind, "R": self.constraint.R,
                           "whole_disk": self.constraint.whole_disk}
        d["solver"] = asdict(self.solver)
        d["optimizer"] = asdict(self.optimizer)
        d["sweep"] = asdict(self.sweep)
        d["condense"] = asdict(self.condense)
        if self.table is not None:
            d["table"] = {"id": self.table}
        d["output"] = {k: v for k, v in asdict(self.output).items() if v is not None}
        return d


_SECTION_TYPES = {
    "solver": SolverConfig,
    "optimizer": OptimizerConfig,
    "sweep": SweepConfig,
    "condense": CondenseConfig,
    "output": OutputConfig,
}


def _check_type(key: str, value, default):
    """Coerce ``value`` to the type of ``default``; None defaults accept strings."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(key, f"expected a finite number, got {value!r}")
        return float(value)
    if default is None or isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    raise AssertionError(key)


def _section(name: str, raw) -> Any:
    cls = _SECTION_TYPES[name]
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a table of settings")
    obj = cls()
    for k, v in raw.items():
        if not hasattr(obj, k):
            raise ConfigError(f"{name}.{k}", "unknown key")
        setattr(obj, k, _check_type(f"{name}.{k}", v, getattr(obj, k)))
    return obj


def _positive(key: str, value, strict: bool = True):
    if value < 0 or (strict and value == 0):
        raise ConfigError(key, f"must be {'positive' if strict else 'non-negative'}, got {value!r}")


def from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed config document."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table at the top level")
    known = {"command", "constellation", "constraint", "table", *_SECTION_TYPES}
    for k in raw:
        if k not in known:
            raise ConfigError(k, "unknown key")
    if "command" not in raw:
        raise ConfigError("command", "missing")
    command = raw["command"]
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}, got {command!r}")
    cfg = ExperimentConfig(command=command)

    con = raw.get("constellation", {})
    if not isinstance(con, dict):
        raise ConfigError("constellation", "expected a table")
    for k in con:
        if k not in ("units", "disks", "radii"):
            raise ConfigError(f"constellation.{k}", "unknown key")
    cfg.units = con.get("units", "hyperbolic")
    if cfg.units not in UNITS:
        raise ConfigError("constellation.units", f"must be one of {', '.join(UNITS)}, got {cfg.units!r}")
    disks = con.get("disks", [])
    if not isinstance(disks, list):
        raise ConfigError("constellation.disks", "expected a list of [x, y, radius] triples")
    for i, d in enumerate(disks):
        key = f"constellation.disks[{i}]"
        if (not isinstance(d, list) or len(d) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in d)):
            raise ConfigError(key, f"expected [x, y, radius], got {d!r}")
        _positive(key, d[2])
        if math.hypot(d[0], d[1]) >= 1:
            raise ConfigError(key, "center must lie in the unit disk")
        cfg.disks.append((float(d[0]), float(d[1]), float(d[2])))
    radii = con.get("radii", [])
    if not isinstance(radii, list):
        raise ConfigError("constellation.radii", "expected a list of hyperbolic radii")
    for i, r in enumerate(radii):
        if isinstance(r, bool) or not isinstance(r, (int, float)):
            raise ConfigError(f"constellation.radii[{i}]", f"expected a number, got {r!r}")
        _positive(f"constellation.radii[{i}]", r)
        cfg.radii.append(float(r))

    cst = raw.get("constraint", {})
    if not isinstance(cst, dict):
        raise ConfigError("constraint", "expected a table")
    for k in cst:
        if k not in ("kind", "R", "whole_disk"):
            raise ConfigError(f"constraint.{k}", "unknown key")
    try:
        cfg.constraint = ConstraintSpec(
            kind=_check_type("constraint.kind", cst.get("kind", "disk-centers"), ""),
            R=_check_type("constraint.R", cst.get("R", 0.75), 0.0),
            whole_disk=_check_type("constraint.whole_disk", cst.get("whole_disk", False), False),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("constraint", str(exc)) from None

    for name in _SECTION_TYPES:
        if name in raw:
            setattr(cfg, name, _section(name, raw[name]))

    if "table" in raw:
        t = raw["table"]
        if not isinstance(t, dict) or set(t) - {"id"}:
            raise ConfigError("table", "expected a table with the single key 'id'")
        tid = t.get("id")
        if tid not in TABLE_IDS or isinstance(tid, bool):
            raise ConfigError("table.id", f"must be one of 1..7, got {tid!r}")
        cfg.table = tid

    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    s = cfg.solver
    if s.n < 16 or s.n % 2:
        raise ConfigError("solver.n", f"must be even and >= 16, got {s.n}")
    _positive("solver.gmres_tol", s.gmres_tol)
    o = cfg.optimizer
    for key in ("starts", "table_starts"):
        if getattr(o, key) < 1:
            raise ConfigError(f"optimizer.{key}", f"must be >= 1, got {getattr(o, key)}")
    _positive("optimizer.tol", o.tol)
    _positive("optimizer.dedupe_tol", o.dedupe_tol, strict=False)
    for key in ("n_solver", "n_polish"):
        v = getattr(o, key)
        if v < 16 or v % 2:
            raise ConfigError(f"optimizer.{key}", f"must be even and >= 16, got {v}")
    if cfg.sweep.kind not in ("angular", "linear"):
        raise ConfigError("sweep.kind", f"must be 'angular' or 'linear', got {cfg.sweep.kind!r}")
    _positive("sweep.r", cfg.sweep.r)
    if not 0 < cfg.sweep.R < 1:
        raise ConfigError("sweep.R", f"must lie in (0, 1), got {cfg.sweep.R}")
    if not 0 < cfg.sweep.x_max < 1:
        raise ConfigError("sweep.x_max", f"must lie in (0, 1), got {cfg.sweep.x_max}")
    if cfg.sweep.points < 2:
        raise ConfigError("sweep.points", "need at least 2 grid points")
    c = cfg.condense
    if c.m < 1:
        raise ConfigError("condense.m", f"must be >= 1, got {c.m}")
    if not 0 < c.R < 1:
        raise ConfigError("condense.R", f"must lie in (0, 1), got {c.R}")
    _positive("condense.r_min", c.r_min)
    if c.r_max < c.r_min:
        raise ConfigError("condense.r_max", "must not be below condense.r_min")
    if c.points < 1:
        raise ConfigError("condense.points", "need at least 1 grid point")
    if cfg.output.format not in (None, "json", "csv"):
        raise ConfigError("output.format", f"must be 'json' or 'csv', got {cfg.output.format!r}")

    if cfg.command == "capacity" and not cfg.disks:
        raise ConfigError("constellation.disks", "capacity needs at least one disk")
    if cfg.command == "maximize":
        if not cfg.disks and not cfg.radii:
            raise ConfigError("constellation", "maximize needs 'radii' or hyperbolic 'disks'")
        cfg.hyperbolic_radii()
    if cfg.command == "table" and cfg.table is None:
        raise ConfigError("table.id", "missing")


def parse_text(text: str, fmt: str) -> dict:
    """Parse config text; ``fmt`` is ``"toml"`` or ``"json"``."""
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<json line {exc.lineno}, column {exc.colno}>", exc.msg) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<toml>", str(exc)) from None


def load(path: str | Path) -> ExperimentConfig:
    """Read and validate a config file; the format follows the suffix (.json, else TOML)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    return from_dict(parse_text(text, fmt))
