from .attention import ENERGY_THRESHOLDS, SpectrumReport, attention_energy, top_count
from .bounds import (
    BoundValues,
    bound_power_law,
    bound_with,
    bound_without,
    evaluate_bounds,
    shrinkage_with,
    shrinkage_without,
)
from .config import TheoryConfig
from .experiment import TheoryReport, TrialResult, fit_rate, run_experiment, run_trial
from .ridge import effective_weights, pretrained_ridge_solve, ridge_solve
from .sampling import RegressionProblem, sample_problem
from .spectrum import (
    SpectrumModel,
    denoise_operator,
    denoised_trace,
    high_pass_fraction,
    power_law_eigenvalues,
    power_law_spectrum,
)

__all__ = [
    "TheoryConfig",
    "SpectrumModel",
    "power_law_eigenvalues",
    "power_law_spectrum",
    "denoise_operator",
    "denoised_trace",
    "high_pass_fraction",
    "RegressionProblem",
    "sample_problem",
    "ridge_solve",
    "pretrained_ridge_solve",
    "effective_weights",
    "BoundValues",
    "bound_without",
    "bound_with",
    "bound_power_law",
    "evaluate_bounds",
    "shrinkage_without",
    "shrinkage_with",
    "TrialResult",
    "TheoryReport",
    "run_trial",
    "run_experiment",
    "fit_rate",
    "SpectrumReport",
    "attention_energy",
    "top_count",
    "ENERGY_THRESHOLDS",
]
