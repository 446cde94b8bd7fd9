from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ContractError
from .config import TheoryConfig
from .spectrum import SpectrumModel, denoised_trace

NOISE_VARIANTS = ("sigma", "gamma")


@dataclass(frozen=True)
class BoundValues:
    """High-probability error bounds at one sample size, with the sample-size conditions they assume."""

    n: int
    without: float
    power_law: float
    with_sigma: float
    with_gamma: float
    in_regime_without: bool
    in_regime_with: bool


def shrinkage_without(lam: float, lambda_k: float) -> float:
    return lam / (lambda_k / 2.0 + lam)


def shrinkage_with(lam: float, lambda_k: float, gamma: float) -> float:
    return lam / (lambda_k ** 2 / (2.0 * (lambda_k + gamma)) + lam)


def _noise_term(variance: float, trace: float, n: int, delta: float) -> float:
    return math.sqrt(variance * trace / n * math.log(1.0 / delta))


def regime_without(n: int, norm_bound: float, lambda_k: float, delta: float) -> bool:
    return n >= 12.0 * norm_bound / lambda_k * math.log(1.0 / delta)


def regime_with(n: int, norm_bound: float, lambda_k: float, gamma: float, delta: float) -> bool:
    return n >= 12.0 * norm_bound * (lambda_k + gamma) / lambda_k ** 2 * math.log(1.0 / delta)


def bound_without(cfg: TheoryConfig, spec: SpectrumModel, n: Optional[int] = None, w_norm: float = 1.0) -> float:
    """Plain ridge regression: shrinkage + R/n + sqrt(sigma^2 tr(Sigma) / n * log(1/delta))."""
    n = n or cfg.n
    lam = cfg.resolved_lam(n)
    lambda_k = float(spec.eigenvalues[cfg.k - 1])
    norm_bound = cfg.resolved_norm_bound(spec.eigenvalues)
    trace = float(np.sum(spec.eigenvalues))
    return (
        shrinkage_without(lam, lambda_k) * w_norm
        + norm_bound / n
        + _noise_term(cfg.sigma ** 2, trace, n, cfg.delta)
    )


def bound_power_law(cfg: TheoryConfig, n: Optional[int] = None, w_norm: float = 1.0) -> float:
    """
    The plain-ridge bound with the power-law closed forms substituted:
    lambda_K = R^2/sqrt(K) and tr(Sigma) <= 2 R^2 sqrt(d).
    """
    n = n or cfg.n
    lam = cfg.resolved_lam(n)
    lambda_k = cfg.R ** 2 / math.sqrt(cfg.k)
    trace = 2.0 * cfg.R ** 2 * math.sqrt(cfg.d)
    norm_bound = cfg.norm_bound or cfg.norm_bound_factor * math.sqrt(trace)
    return (
        shrinkage_without(lam, lambda_k) * w_norm
        + norm_bound / n
        + _noise_term(cfg.sigma ** 2, trace, n, cfg.delta)
    )


def bound_with(
    cfg: TheoryConfig,
    spec: SpectrumModel,
    n: Optional[int] = None,
    noise: str = "sigma",
    w_norm: float = 1.0,
) -> float:
    """
    Ridge on denoised inputs. `noise` picks the variance in the last term: the
    label-noise variance sigma^2 ("sigma") or the denoising variance gamma ("gamma").
    """
    if noise not in NOISE_VARIANTS:
        raise ContractError(f"noise must be one of {NOISE_VARIANTS}, got {noise!r}")
    n = n or cfg.n
    lam = cfg.resolved_lam(n)
    gamma = cfg.resolved_gamma(spec.eigenvalues)
    lambda_k = float(spec.eigenvalues[cfg.k - 1])
    norm_bound = cfg.resolved_norm_bound(spec.eigenvalues)
    variance = cfg.sigma ** 2 if noise == "sigma" else gamma
    return (
        shrinkage_with(lam, lambda_k, gamma) * w_norm
        + norm_bound / n
        + _noise_term(variance, denoised_trace(spec.eigenvalues, gamma), n, cfg.delta)
    )


def evaluate_bounds(cfg: TheoryConfig, spec: SpectrumModel, n: Optional[int] = None) -> BoundValues:
    n = n or cfg.n
    gamma = cfg.resolved_gamma(spec.eigenvalues)
    lambda_k = float(spec.eigenvalues[cfg.k - 1])
    norm_bound = cfg.resolved_norm_bound(spec.eigenvalues)
    return BoundValues(
        n=n,
        without=bound_without(cfg, spec, n),
        power_law=bound_power_law(cfg, n),
        with_sigma=bound_with(cfg, spec, n, "sigma"),
        with_gamma=bound_with(cfg, spec, n, "gamma"),
        in_regime_without=regime_without(n, norm_bound, lambda_k, cfg.delta),
        in_regime_with=regime_with(n, norm_bound, lambda_k, gamma, cfg.delta),
    )
