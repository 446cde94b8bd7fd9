from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from ..errors import ConfigurationError
from ..tensor import GaussianSampler
from .config import TheoryConfig
from .spectrum import SpectrumModel

_MAX_REJECTION_RATE = 0.99
_MIN_DRAWS_BEFORE_GIVING_UP = 1000


@dataclass(frozen=True)
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    w_star: np.ndarray
    draws: int

    @property
    def rejection_rate(self) -> float:
        return 1.0 - self.X.shape[0] / self.draws


def _bounded_inputs(spec: SpectrumModel, n: int, norm_bound: float, sampler: GaussianSampler):
    scale = spec.eigenvectors * np.sqrt(spec.eigenvalues)
    accepted, kept, draws = [], 0, 0
    while kept < n:
        batch = max(n - kept, 16)
        x = sampler.normal((batch, spec.d)) @ scale.T
        draws += batch
        inside = x[np.linalg.norm(x, axis=1) <= norm_bound]
        accepted.append(inside)
        kept += inside.shape[0]
        if draws >= _MIN_DRAWS_BEFORE_GIVING_UP and 1.0 - kept / draws > _MAX_REJECTION_RATE:
            logger.error(f"Rejected {draws - kept} of {draws} draws at norm bound {norm_bound:.3f}")
            raise ConfigurationError(
                f"norm bound {norm_bound:.3f} rejects more than 99% of samples; raise it for this spectrum"
            )
    return np.concatenate(accepted)[:n], draws


def sample_problem(spec: SpectrumModel, cfg: TheoryConfig, seed: int, n: Optional[int] = None) -> RegressionProblem:
    """
    x_i ~ N(0, Sigma) conditioned on |x_i| <= norm bound, w* a unit vector in the
    top-k eigenspace, y_i = w*^T x_i + z_i with z_i ~ N(0, sigma^2).
    """
    n = cfg.n if n is None else n
    sampler = GaussianSampler(seed)
    coefficients = sampler.normal(cfg.k)
    w_star = spec.eigenvectors[:, : cfg.k] @ (coefficients / np.linalg.norm(coefficients))
    X, draws = _bounded_inputs(spec, n, cfg.resolved_norm_bound(spec.eigenvalues), sampler)
    y = X @ w_star + sampler.normal(n, cfg.sigma)
    return RegressionProblem(X, y, w_star, draws)
