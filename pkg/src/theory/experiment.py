from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from ..errors import ContractError
from ..tensor import GaussianSampler
from .bounds import BoundValues, evaluate_bounds
from .config import TheoryConfig
from .ridge import effective_weights, pretrained_ridge_solve, ridge_solve
from .sampling import sample_problem
from .spectrum import SpectrumModel, denoise_operator, high_pass_fraction, power_law_spectrum

_TRIAL_STREAM = 1
_SLOPE_STREAM = 2
_LOW_BAND_FACTOR = 9.0


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    n: int
    err_w1: float
    err_w2: float
    w2_norm: float
    low_band_share: float
    rejection_rate: float


@dataclass
class TheoryReport:
    config: TheoryConfig
    gamma: float
    lam: float
    norm_bound: float
    bounds: BoundValues
    trials: List[TrialResult]
    slope: Optional[float] = None
    rate_table: List[Dict[str, float]] = field(default_factory=list)

    @property
    def win_rate(self) -> float:
        """Share of trials where the denoised predictor is closer to w*."""
        return float(np.mean([t.err_w2 < t.err_w1 for t in self.trials]))

    @property
    def win_rate_informative(self) -> bool:
        return self.config.sigma > 0.0

    def coverage(self, which: str) -> Optional[float]:
        """Share of trials within a bound, or None when the sample-size condition fails."""
        if which == "without":
            if not self.bounds.in_regime_without:
                return None
            return float(np.mean([t.err_w1 <= self.bounds.without for t in self.trials]))
        if which == "power_law":
            if not self.bounds.in_regime_without:
                return None
            return float(np.mean([t.err_w1 <= self.bounds.power_law for t in self.trials]))
        if which in ("with_sigma", "with_gamma"):
            if not self.bounds.in_regime_with:
                return None
            bound = getattr(self.bounds, which)
            return float(np.mean([t.err_w2 <= bound for t in self.trials]))
        raise ContractError(f"unknown bound '{which}'")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([t.__dict__ for t in self.trials])
        frame["bound_without"] = self.bounds.without
        frame["bound_power_law"] = self.bounds.power_law
        frame["bound_with_sigma"] = self.bounds.with_sigma
        frame["bound_with_gamma"] = self.bounds.with_gamma
        frame["in_regime_without"] = self.bounds.in_regime_without
        frame["in_regime_with"] = self.bounds.in_regime_with
        return frame


def run_trial(
    spec: SpectrumModel, cfg: TheoryConfig, M: np.ndarray, gamma: float, trial: int, seed: int, n: int
) -> TrialResult:
    problem = sample_problem(spec, cfg, seed, n)
    lam = cfg.resolved_lam(n)
    w1 = ridge_solve(problem.X, problem.y, lam)
    w2 = pretrained_ridge_solve(problem.X, problem.y, lam, M)
    effective = effective_weights(M, w2)
    return TrialResult(
        trial=trial,
        seed=seed,
        n=n,
        err_w1=float(np.linalg.norm(w1 - problem.w_star)),
        err_w2=float(np.linalg.norm(effective - problem.w_star)),
        w2_norm=float(np.linalg.norm(w2)),
        low_band_share=high_pass_fraction(effective, spec, gamma / _LOW_BAND_FACTOR),
        rejection_rate=problem.rejection_rate,
    )


def _run_trials(spec, cfg, M, gamma, seeds: List[int], n: int) -> List[TrialResult]:
    results: Dict[int, TrialResult] = {}
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        futures = {
            executor.submit(run_trial, spec, cfg, M, gamma, i, seed, n): i
            for i, seed in enumerate(seeds)
        }
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return [results[i] for i in range(len(seeds))]


def fit_rate(spec: SpectrumModel, cfg: TheoryConfig, M: np.ndarray, gamma: float):
    """Least-squares slope of log median |w2 - w*| against log n over cfg.n_grid."""
    table = []
    for n in cfg.n_grid:
        seeds = GaussianSampler(cfg.seed, _SLOPE_STREAM, n).spawn_seeds(cfg.slope_trials)
        trials = _run_trials(spec, cfg, M, gamma, seeds, n)
        table.append({
            "n": n,
            "median_err_w1": float(np.median([t.err_w1 for t in trials])),
            "median_err_w2": float(np.median([t.err_w2 for t in trials])),
        })
    if len(table) < 2:
        raise ContractError("fitting a rate needs at least two sample sizes")
    log_n = np.log([row["n"] for row in table])
    log_err = np.log([row["median_err_w2"] for row in table])
    slope = float(np.polyfit(log_n, log_err, 1)[0])
    return slope, table


def run_experiment(cfg: TheoryConfig, fit_slope: bool = True) -> TheoryReport:
    spec = power_law_spectrum(cfg.d, cfg.R, cfg.seed)
    gamma = cfg.resolved_gamma(spec.eigenvalues)
    M = denoise_operator(spec, gamma)
    logger.info(
        f"Theory lab: d={cfg.d}, k={cfg.k}, n={cfg.n}, sigma={cfg.sigma}, gamma={gamma:.4f}, "
        f"lambda={cfg.resolved_lam():.4f}, {cfg.trials} trials"
    )
    if cfg.sigma == 0.0:
        logger.warning("Noiseless labels: the win rate is not informative")

    seeds = GaussianSampler(cfg.seed, _TRIAL_STREAM).spawn_seeds(cfg.trials)
    report = TheoryReport(
        config=cfg,
        gamma=gamma,
        lam=cfg.resolved_lam(),
        norm_bound=cfg.resolved_norm_bound(spec.eigenvalues),
        bounds=evaluate_bounds(cfg, spec),
        trials=_run_trials(spec, cfg, M, gamma, seeds, cfg.n),
    )
    if not report.bounds.in_regime_without or not report.bounds.in_regime_with:
        logger.warning(f"n={cfg.n} is below the sample-size condition of at least one bound; trials are out of regime")
    if fit_slope:
        report.slope, report.rate_table = fit_rate(spec, cfg, M, gamma)
        logger.info(f"Fitted rate: slope {report.slope:.3f}")
    logger.info(f"Win rate of the denoised predictor: {report.win_rate:.3f}")
    return report
