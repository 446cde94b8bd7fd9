from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import ContractError

ENERGY_THRESHOLDS = (0.1, 0.2, 1.0, 5.0, 100.0)


@dataclass(frozen=True)
class SpectrumReport:
    scores: np.ndarray
    thresholds: Tuple[float, ...]
    energy: Tuple[float, ...]

    def at(self, percent: float) -> float:
        return self.energy[self.thresholds.index(percent)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "top_percent": self.thresholds,
            "tokens": [top_count(k, self.scores.size) for k in self.thresholds],
            "energy": self.energy,
        })


def top_count(percent: float, n: int) -> int:
    """Tokens in the top `percent`% of n, at least one."""
    exact = Decimal(repr(float(percent))) * n / 100
    return max(1, min(n, math.ceil(exact)))


def attention_energy(scores: Sequence[float], thresholds: Sequence[float] = ENERGY_THRESHOLDS) -> SpectrumReport:
    """Cumulative share of the attention mass held by the top k% of tokens."""
    values = np.asarray(scores, dtype=np.float64).ravel()
    if values.size == 0 or np.any(values < 0):
        raise ContractError("attention scores must be a nonempty nonnegative vector")
    total = values.sum()
    if total == 0.0:
        raise ContractError("attention scores are all zero")
    ordered = np.sort(values)[::-1] / total
    cumulative = np.cumsum(ordered)
    cumulative[-1] = 1.0
    energy = tuple(float(cumulative[top_count(k, values.size) - 1]) for k in thresholds)
    return SpectrumReport(ordered, tuple(float(k) for k in thresholds), energy)
