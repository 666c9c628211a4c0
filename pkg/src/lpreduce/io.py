"""Run configuration, CSV trajectories and JSON reports."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import Trajectory
from .errors import ConfigError
from .lattice.config import LatticeConfig

SYSTEMS = ("so2-bead", "so3-two-vector", "gauge-lattice")
EQUATION_SETS = ("full", "special")

# (csv prefix, trajectory attribute)
COLUMN_GROUPS = (("qstar", "q_star"), ("ftilde", "f_tilde"), ("omega_q", "omega_q"),
                 ("omega_v", "omega_v"), ("p", "mom"))

_MECH_DEFAULTS = {"t_end": 1.0, "dt": 1e-4}
_LATTICE_DEFAULTS = {"t_end": 1.0, "dt": 1e-2}


@dataclass
class RunConfig:
    system: str = "so2-bead"
    seed: int = 0
    out: str = "out"
    t_end: float | None = None
    dt: float | None = None
    equation_set: str | None = None
    retraction: bool = True
    drop_killing_terms: bool | None = None
    tolerance_scale: float = 1.0
    tolerances: dict[str, float] = field(default_factory=dict)
    params: dict[str, float] = field(default_factory=dict)
    initial: dict[str, list[float]] | None = None
    lattice: dict[str, Any] = field(default_factory=dict)
    reference: bool = True
    points: int = 20
    states: int = 5
    pure_gauge: bool = False
    amplitude: float = 0.3

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {', '.join(SYSTEMS)}")
        if self.equation_set is None:
            self.equation_set = "special" if self.is_lattice else "full"
        if self.drop_killing_terms is None:
            self.drop_killing_terms = self.is_lattice
        if self.equation_set not in EQUATION_SETS:
            raise ConfigError(f"equation_set must be one of {EQUATION_SETS}")
        for name in ("t_end", "dt"):
            val = getattr(self, name)
            if val is not None and not (np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        if self.tolerance_scale < 0 or not np.isfinite(self.tolerance_scale):
            raise ConfigError("tolerance_scale must be a finite number >= 0")
        if self.points < 1 or self.states < 1:
            raise ConfigError("points and states must be >= 1")
        if self.initial is not None:
            missing = {"q", "f", "qdot", "fdot"} - set(self.initial)
            if missing:
                raise ConfigError(f"initial state is missing {sorted(missing)}")
        if self.system == "gauge-lattice":
            self.lattice_config()

    @property
    def is_lattice(self) -> bool:
        return self.system == "gauge-lattice"

    def step(self) -> tuple[float, float]:
        defaults = _LATTICE_DEFAULTS if self.is_lattice else _MECH_DEFAULTS
        return (self.t_end if self.t_end is not None else defaults["t_end"],
                self.dt if self.dt is not None else defaults["dt"])

    def lattice_config(self) -> LatticeConfig:
        return LatticeConfig.from_dict(self.lattice)

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default)) * self.tolerance_scale

    def to_dict(self) -> dict:
        return asdict(self)

    def echo(self) -> dict:
        """Settings that affect results; the output location is left out so reports are comparable."""
        d = self.to_dict()
        d.pop("out")
        return d


_SECTIONS = {"integrator": ("t_end", "dt", "equation_set", "retraction", "drop_killing_terms"),
             "validate": ("points", "states"),
             "checks": ("reference",),
             "lattice_state": ("pure_gauge", "amplitude")}


def flatten_mapping(data: dict) -> dict:
    """Flatten the nested YAML layout into RunConfig field names."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    flat = dict(data)
    for section, keys in _SECTIONS.items():
        sub = flat.pop(section, None) or {}
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        unknown = set(sub) - set(keys)
        if unknown:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
        flat.update(sub)
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(flat) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return flat


def config_from_mapping(data: dict) -> RunConfig:
    try:
        return RunConfig(**flatten_mapping(data))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def read_config_mapping(path: str | Path) -> dict:
    """The flattened contents of a YAML config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return flatten_mapping(data)


def load_config(path: str | Path) -> RunConfig:
    return config_from_mapping(read_config_mapping(path))


# -- trajectories ------------------------------------------------------------------

def trajectory_columns(traj: Trajectory) -> list[str]:
    cols = ["t"]
    for prefix, attr in COLUMN_GROUPS:
        cols += [f"{prefix}_{i}" for i in range(np.asarray(getattr(traj, attr)).shape[1])]
    return cols + ["energy"]


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    """One row per sample; every value printed with 17 significant digits."""
    parts = [traj.t[:, None]]
    parts += [np.asarray(getattr(traj, attr)).reshape(len(traj), -1) for _, attr in COLUMN_GROUPS]
    parts.append(traj.energy[:, None])
    data = np.hstack(parts)
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(trajectory_columns(traj)), comments="")


def read_trajectory_csv(path: str | Path, system: str = "") -> Trajectory:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trajectory file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "t" or header[-1] != "energy":
        raise ConfigError(f"{path}: not a trajectory file (expected t ... energy columns)")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: {data.shape[1]} values per row for {len(header)} columns")
    groups = {}
    for prefix, attr in COLUMN_GROUPS:
        idx = [k for k, name in enumerate(header) if name.rsplit("_", 1)[0] == prefix]
        groups[attr] = data[:, idx]
    return Trajectory(system=system or path.stem, t=data[:, 0], energy=data[:, -1], **groups)


# -- reports -------------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"


def write_report(path: str | Path, report: dict) -> None:
    Path(path).write_text(dump_report(report))
