from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger

from ..errors import ContractError, DimensionError, UndefinedCorrelationError
from ..tensor import Tensor, absolute, as_tensor, mul, sub
from ..tensor import sum as tensor_sum
from .spec import Climatology, GridSpec, VariableSet


def _values(state) -> np.ndarray:
    """Accept a FieldState (anything with `.values`) or a bare array."""
    return np.asarray(getattr(state, "values", state), dtype=np.float64)


def _series(states) -> np.ndarray:
    if isinstance(states, np.ndarray) and states.ndim == 3:
        return states[None]
    if hasattr(states, "values") and not isinstance(states, (list, tuple)):
        return _values(states)[None]
    return np.stack([_values(s) for s in states]) if len(states) else np.empty((0,))


def latitude_weights(grid: Union[GridSpec, Sequence[float]]) -> np.ndarray:
    """L(i) = cos(lat_i) / mean_j cos(lat_j); averages to 1 over the rows."""
    lats = np.asarray(grid.latitudes if isinstance(grid, GridSpec) else grid, dtype=np.float64)
    cosines = np.cos(np.deg2rad(lats))
    return cosines / cosines.mean()


def rmse(pred, truth, grid: GridSpec, var: int) -> float:
    """Latitude-weighted RMSE of one variable, averaged over the time series."""
    p, t = _series(pred), _series(truth)
    if p.shape[0] == 0:
        raise ContractError("rmse needs a non-empty series")
    if p.shape != t.shape:
        raise DimensionError(f"rmse: prediction {p.shape} vs truth {t.shape}")
    weights = latitude_weights(grid)[None, :, None]
    squared = weights * (p[:, var] - t[:, var]) ** 2
    per_step = np.sqrt(squared.mean(axis=(1, 2)))
    return float(per_step.mean())


def acc(pred, truth, clim: Climatology, grid: GridSpec, var: int) -> float:
    """Latitude-weighted anomaly correlation of one variable, averaged over the time series."""
    p, t = _series(pred), _series(truth)
    if p.shape[0] == 0:
        raise ContractError("acc needs a non-empty series")
    if p.shape != t.shape or p.shape[1:] != clim.mean.shape:
        raise DimensionError(f"acc: prediction {p.shape}, truth {t.shape}, climatology {clim.mean.shape}")
    weights = latitude_weights(grid)[None, :, None]
    pa = p[:, var] - clim.mean[var]
    ta = t[:, var] - clim.mean[var]
    covariance = (weights * pa * ta).sum(axis=(1, 2))
    energy_pred = (weights * pa * pa).sum(axis=(1, 2))
    energy_truth = (weights * ta * ta).sum(axis=(1, 2))
    if np.any(energy_pred == 0.0) or np.any(energy_truth == 0.0):
        logger.error(f"ACC undefined for variable index {var}: zero anomaly energy")
        raise UndefinedCorrelationError(f"zero anomaly energy for variable index {var}")
    return float((covariance / np.sqrt(energy_pred * energy_truth)).mean())


def weighted_loss(
    pred: Tensor,
    target,
    variables: VariableSet,
    grid: GridSpec,
    mode: str = "mse",
    cell_mask: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Pressure- and latitude-weighted MSE/MAE, differentiable in `pred`.

    Without a mask the normalizer is V*H*W. With a boolean V x H x W `cell_mask`
    only the selected cells contribute and the normalizer is their count.
    """
    pred = as_tensor(pred)
    target = _values(target)
    expected = (variables.V, grid.H, grid.W)
    if pred.shape != expected or target.shape != expected:
        raise DimensionError(f"weighted_loss: prediction {pred.shape}, target {target.shape}, grid {expected}")
    if mode not in ("mse", "mae"):
        raise ContractError(f"loss mode must be 'mse' or 'mae', got '{mode}'")

    weights = np.asarray(variables.pressure_weights)[:, None, None] * latitude_weights(grid)[None, :, None]
    weights = np.broadcast_to(weights, expected)
    count = float(np.prod(expected))
    if cell_mask is not None:
        mask = np.asarray(cell_mask, dtype=bool)
        if mask.shape != expected:
            raise DimensionError(f"cell mask {mask.shape} does not match {expected}")
        if not mask.any():
            raise ContractError("cell mask selects no cells")
        weights = np.where(mask, weights, 0.0)
        count = float(mask.sum())

    diff = sub(pred, target)
    err = mul(diff, diff) if mode == "mse" else absolute(diff)
    return tensor_sum(mul(err, weights / count))


def climatology(dataset) -> Climatology:
    """Elementwise temporal mean of an ordered sequence of snapshots."""
    if len(dataset) == 0:
        raise ContractError("climatology needs at least one snapshot")
    total = np.zeros_like(_values(dataset[0]))
    for state in dataset:
        total = total + _values(state)
    return Climatology(total / len(dataset))
