from __future__ import annotations

import numpy as np
from loguru import logger

from ..errors import ContractError, DimensionError, LinearAlgebraError


def ridge_solve(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """
    w = (X^T X / n + lam I)^-1 X^T y / n, solved without forming an inverse.

    The Gram matrix is averaged over samples, so `lam` is on the per-sample scale.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lam <= 0:
        raise ContractError(f"ridge coefficient must be positive, got {lam}")
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionError(f"ridge_solve: X {X.shape} and y {y.shape} disagree")
    n, d = X.shape
    gram = X.T @ X / n + lam * np.eye(d)
    try:
        return np.linalg.solve(gram, X.T @ y / n)
    except np.linalg.LinAlgError as e:
        logger.error(f"Ridge solve failed for a {d}x{d} system: {e}")
        raise LinearAlgebraError(f"ridge solve failed: {e}") from e


def pretrained_ridge_solve(X: np.ndarray, y: np.ndarray, lam: float, M: np.ndarray) -> np.ndarray:
    """Ridge regression on the transformed inputs M x_i."""
    X = np.asarray(X, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (X.shape[1], X.shape[1]):
        raise DimensionError(f"operator {M.shape} does not act on {X.shape[1]}-dimensional inputs")
    return ridge_solve(X @ M.T, y, lam)


def effective_weights(M: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Weights acting on raw inputs: x -> w2^T M x = (M^T w2)^T x."""
    return np.asarray(M).T @ w2
