from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..errors import ContractError, NormalizationError
from .field_state import FieldState


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    names: Tuple[str, ...]

    def apply(self, state: FieldState) -> FieldState:
        return FieldState((state.values - self.mean[:, None, None]) / self.std[:, None, None], state.time)

    def invert(self, state: FieldState) -> FieldState:
        return FieldState(state.values * self.std[:, None, None] + self.mean[:, None, None], state.time)


def fit_normalizer(train: Sequence[FieldState], names: Optional[Sequence[str]] = None) -> NormStats:
    """Per-variable mean and std over every cell and snapshot of the training slice."""
    if not train:
        raise ContractError("cannot fit a normalizer on an empty slice")
    stacked = np.stack([s.values for s in train])
    n_vars = stacked.shape[1]
    names = tuple(names) if names is not None else tuple(f"var{i}" for i in range(n_vars))
    mean = stacked.mean(axis=(0, 2, 3))
    std = stacked.std(axis=(0, 2, 3))
    for name, value in zip(names, std):
        if not value > 0.0:
            logger.error(f"Variable '{name}' has zero variance over the training slice")
            raise NormalizationError(f"variable '{name}' has zero variance and cannot be normalized")
    return NormStats(mean, std, names)


def apply(stats: NormStats, state: FieldState) -> FieldState:
    return stats.apply(state)


def invert(stats: NormStats, state: FieldState) -> FieldState:
    return stats.invert(state)
