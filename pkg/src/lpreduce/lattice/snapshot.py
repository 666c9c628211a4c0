"""Binary lattice snapshots: one JSON header line followed by raw float64 arrays.

The header records the lattice (dim, size, h, group, rep, boundary), the
array order and each array's shape.  Arrays are written little-endian in
C order, so for the gauge field alpha runs fastest, then i, then the
row-major site index.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .config import LatticeConfig
from .terms import GaugeFieldState

MAGIC = "lpreduce-lattice"
VERSION = 1
FIELDS = ("a", "f", "a_dot", "f_dot", "p")


def save_snapshot(path: str | Path, cfg: LatticeConfig, state: GaugeFieldState, t: float = 0.0) -> None:
    header = {
        "format": MAGIC, "version": VERSION, "t": t, "config": cfg.to_dict(),
        "ordering": "alpha fastest, then direction i, then row-major site",
        "arrays": {name: list(getattr(state, name).shape) for name in FIELDS},
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for name in FIELDS:
            fh.write(np.ascontiguousarray(getattr(state, name), dtype="<f8").tobytes())


def load_snapshot(path: str | Path) -> tuple[LatticeConfig, GaugeFieldState, float]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != MAGIC:
            raise ConfigError(f"{path} is not a lattice snapshot")
        arrays = {}
        for name in FIELDS:
            shape = tuple(header["arrays"][name])
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(8 * count), dtype="<f8")
            if data.size != count:
                raise ConfigError(f"{path}: truncated array {name!r}")
            arrays[name] = data.reshape(shape).astype(float)
    return LatticeConfig.from_dict(header["config"]), GaugeFieldState(**arrays), float(header["t"])
