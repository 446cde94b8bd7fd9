from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError

SURFACE_VARIABLES = ("t2m", "u10", "v10", "msl")

# ECMWF-style short names used to label synthetic variables.
DEFAULT_VARIABLE_NAMES = ("z500", "t850", "t2m", "u10", "v10", "msl", "q700", "r850", "u500", "v500")


@dataclass(frozen=True)
class GridSpec:
    """Regular lat-lon grid; latitudes in degrees north, longitudes in degrees east."""

    latitudes: Tuple[float, ...]
    longitudes: Tuple[float, ...]

    def __post_init__(self):
        lats = np.asarray(self.latitudes, dtype=np.float64)
        lons = np.asarray(self.longitudes, dtype=np.float64)
        if lats.ndim != 1 or lats.size == 0 or lons.ndim != 1 or lons.size == 0:
            raise ConfigurationError("grid needs at least one latitude and one longitude")
        if np.any(np.abs(lats) > 90.0):
            raise ConfigurationError("latitudes must lie within [-90, 90]")
        steps = np.diff(lats)
        if lats.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ConfigurationError("latitudes must be strictly monotone")
        spacing = 360.0 / lons.size
        expected = lons[0] + spacing * np.arange(lons.size)
        if lons[0] < 0.0 or lons[-1] >= 360.0 or not np.allclose(lons, expected, rtol=0.0, atol=1e-9):
            raise ConfigurationError("longitudes must be uniformly spaced over [0, 360)")

    @classmethod
    def regular(cls, h: int, w: int) -> "GridSpec":
        """Cell-centred grid running north to south, no pole rows."""
        if h < 1 or w < 1:
            raise ConfigurationError(f"grid size must be positive, got {h}x{w}")
        lats = 90.0 - (np.arange(h) + 0.5) * 180.0 / h
        lons = np.arange(w) * 360.0 / w
        return cls(tuple(float(v) for v in lats), tuple(float(v) for v in lons))

    @property
    def H(self) -> int:
        return len(self.latitudes)

    @property
    def W(self) -> int:
        return len(self.longitudes)


@dataclass(frozen=True)
class VariableSet:
    names: Tuple[str, ...]
    pressure_weights: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.names:
            raise ConfigurationError("variable set is empty")
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError(f"duplicate variable names: {self.names}")
        weights = np.asarray(self.pressure_weights, dtype=np.float64)
        if weights.shape != (len(self.names),):
            raise ConfigurationError(f"{len(self.names)} variables but {weights.size} pressure weights")
        if np.any(weights < 0):
            raise ConfigurationError("pressure weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"pressure weights sum to {weights.sum()!r}, expected 1")

    @classmethod
    def from_profile(cls, names: Sequence[str], profile: str = "uniform") -> "VariableSet":
        """
        Build ω(v) from a named profile.

        uniform: every variable weighs the same.
        surface: surface variables weigh twice as much as upper-air ones.
        """
        names = tuple(names)
        if profile == "uniform":
            raw = np.ones(len(names))
        elif profile == "surface":
            raw = np.array([2.0 if n in SURFACE_VARIABLES else 1.0 for n in names])
        else:
            raise ConfigurationError(f"unknown pressure profile '{profile}' (uniform | surface)")
        return cls(names, tuple(float(v) for v in raw / raw.sum()))

    @classmethod
    def default_names(cls, count: int) -> Tuple[str, ...]:
        base = list(DEFAULT_VARIABLE_NAMES)
        names = base[:count] + [f"var{i}" for i in range(len(base), count)]
        return tuple(names)

    @property
    def V(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class Climatology:
    """Temporal mean field C, shape V x H x W."""

    mean: np.ndarray
