from __future__ import annotations

from typing import Dict, List

import pandas as pd
from loguru import logger

from ..errors import ConfigurationError, ContractError
from ..grid import Climatology, acc, climatology, rmse
from ..synthdata import FieldState
from ..training import TrainingData
from .compositions import Composition
from .rollout import Models, rollout


def evaluate(models: Models, data: TrainingData, horizons: int = 1, seed: int = 0) -> pd.DataFrame:
    """
    RMSE and ACC per variable at lead times dt, 2dt, ... horizons*dt over the test
    split, rolling the shortest-lead model. Scores are in physical units against the
    training-split climatology.
    """
    if not models:
        raise ConfigurationError("evaluation needs at least one model")
    if horizons < 1:
        raise ContractError(f"horizons must be at least 1, got {horizons}")
    lead = min(models)
    k = data.offset(lead)
    starts = range(len(data.test) - horizons * k)
    if not starts:
        raise ContractError(f"test split of {len(data.test)} snapshots is too short for {horizons} x {lead}h")

    clim: Climatology = climatology([data.norm.invert(s) for s in data.train])
    predicted: Dict[int, List[FieldState]] = {n: [] for n in range(1, horizons + 1)}
    observed: Dict[int, List[FieldState]] = {n: [] for n in range(1, horizons + 1)}
    composition = Composition((lead,) * horizons)
    for t in starts:
        for n, state in enumerate(rollout(models, data.test[t], composition, seed), start=1):
            predicted[n].append(data.norm.invert(state))
            observed[n].append(data.norm.invert(data.test[t + n * k]))

    rows = []
    for n in range(1, horizons + 1):
        for v, name in enumerate(data.variables.names):
            rows.append({
                "variable": name,
                "lead_hours": n * lead,
                "rmse": rmse(predicted[n], observed[n], data.grid, v),
                "acc": acc(predicted[n], observed[n], clim, data.grid, v),
            })
    logger.info(f"Evaluated {len(starts)} forecasts at {horizons} lead times")
    return pd.DataFrame(rows, columns=["variable", "lead_hours", "rmse", "acc"])
