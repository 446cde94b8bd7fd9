from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, NumericalError


@dataclass(frozen=True)
class FieldState:
    """One atmospheric snapshot: V x H x W values at `time` hours since the epoch."""

    values: np.ndarray
    time: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DimensionError(f"FieldState needs a V x H x W array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericalError(f"FieldState at t={self.time}h holds non-finite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", int(self.time))

    @property
    def shape(self):
        return self.values.shape
