"""Lattice geometry and field-content settings."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError
from ..lie import LieGroup, make_group


@dataclass(frozen=True)
class LatticeConfig:
    """A D-dimensional grid of ``size**dim`` interior sites with spacing ``h``.

    Fields vanish outside the interior (``boundary="dirichlet"``).  The
    periodic mode is experimental: its Faddeev-Popov operator has zero modes
    and is inverted with a pseudo-inverse.
    """

    dim: int = 3
    size: int = 2
    h: float = 1.0
    group: str = "su2"
    rep: str = "adjoint"
    g0: float = 1.0
    boundary: str = "dirichlet"
    scalar_metric: float = 1.0
    quartic: float = 0.5
    vev: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigError(f"dim must be 2 or 3, got {self.dim}")
        if self.size < 2:
            raise ConfigError(f"size must be at least 2, got {self.size}")
        if self.size % 2:
            raise ConfigError(f"size must be even: odd sizes give the central-difference "
                              f"gauge operator a zero mode (got {self.size})")
        if not self.h > 0:
            raise ConfigError("spacing h must be positive")
        if not self.g0 > 0:
            raise ConfigError("coupling g0 must be positive")
        if self.boundary not in ("dirichlet", "periodic"):
            raise ConfigError(f"unknown boundary {self.boundary!r}")
        if not self.scalar_metric > 0:
            raise ConfigError("scalar_metric must be positive")
        try:
            make_group(self.group, self.rep)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def n_sites(self) -> int:
        return self.size ** self.dim

    @property
    def volume(self) -> float:
        """Cell volume h^D weighting every lattice sum."""
        return self.h ** self.dim

    def base_group(self) -> LieGroup:
        return make_group(self.group, self.rep)

    def kappa(self) -> np.ndarray:
        """Positive-definite gauge metric: -k / g0^2, or 1 / g0^2 for an abelian group."""
        g = self.base_group()
        if g.abelian:
            return np.eye(g.dim_g) / self.g0 ** 2
        return -g.k / self.g0 ** 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown lattice keys: {sorted(unknown)}")
        return cls(**data)
