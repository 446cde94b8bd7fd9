from __future__ import annotations

import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError


class TheoryConfig(BaseModel):
    """
    Ridge-regression lab settings. `gamma`, `lam` and `norm_bound` are derived when
    left empty: gamma is the median eigenvalue, lam is 1/sqrt(n) and the norm bound
    is norm_bound_factor * sqrt(trace(Sigma)).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    d: int = Field(256, ge=2)
    k: int = Field(8, ge=1)
    n: int = Field(64, ge=1)
    R: float = Field(4.0, gt=0.0)
    gamma: Optional[float] = Field(None, gt=0.0)
    lam: Optional[float] = Field(None, gt=0.0)
    sigma: float = Field(0.5, ge=0.0)
    trials: int = Field(200, ge=1)
    seed: int = 1
    delta: float = Field(0.05, gt=0.0, lt=1.0)
    norm_bound: Optional[float] = Field(None, gt=0.0)
    norm_bound_factor: float = Field(2.0, gt=0.0)
    n_grid: List[int] = Field(default_factory=lambda: [64, 128, 256, 512, 1024, 2048, 4096])
    slope_trials: int = Field(30, ge=1)
    workers: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check_subspace(self) -> "TheoryConfig":
        if self.k > self.d / 4:
            raise ConfigurationError(f"target subspace k={self.k} must be at most d/4 = {self.d / 4}")
        if any(n < 1 for n in self.n_grid):
            raise ConfigurationError(f"sample sizes must be positive, got {self.n_grid}")
        return self

    def resolved_gamma(self, eigenvalues: np.ndarray) -> float:
        return float(np.median(eigenvalues)) if self.gamma is None else self.gamma

    def resolved_lam(self, n: Optional[int] = None) -> float:
        return 1.0 / math.sqrt(n or self.n) if self.lam is None else self.lam

    def resolved_norm_bound(self, eigenvalues: np.ndarray) -> float:
        if self.norm_bound is not None:
            return self.norm_bound
        return self.norm_bound_factor * math.sqrt(float(np.sum(eigenvalues)))
