from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ContractError, EvaluationError, NumericalError
from .tensor import ArrayLike, Tensor, backward


def _evaluate(f: Callable[[Tensor], Tensor], values: np.ndarray) -> float:
    try:
        out = f(Tensor(values))
    except NumericalError as e:
        raise EvaluationError(f"function is not finite at the evaluation point: {e}") from e
    value = out.item()
    if not np.isfinite(value):
        raise EvaluationError("function returned a non-finite value")
    return value


def grad_check(f: Callable[[Tensor], Tensor], x: ArrayLike, step: float = 1e-5) -> float:
    """
    Compare reverse-mode gradients of a scalar function with central differences.

    Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|).
    """
    if step <= 0:
        raise ContractError(f"finite-difference step must be positive, got {step}")
    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)

    point = Tensor(base, requires_grad=True)
    try:
        out = f(point)
    except NumericalError as e:
        raise EvaluationError(f"function is not finite at the evaluation point: {e}") from e
    analytic = backward(out).get(point, np.zeros_like(base))

    numeric = np.empty_like(base)
    for i in range(base.size):
        shifted = base.copy()
        shifted.flat[i] = base.flat[i] + step
        upper = _evaluate(f, shifted)
        shifted.flat[i] = base.flat[i] - step
        lower = _evaluate(f, shifted)
        numeric.flat[i] = (upper - lower) / (2.0 * step)

    if base.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))
