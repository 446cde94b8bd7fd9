from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from loguru import logger

from ..errors import ConfigurationError, ContractError
from ..model import BaguanModel
from ..synthdata import FieldState
from .compositions import Composition, EnsemblePlan

Models = Mapping[int, BaguanModel]


def rollout(models: Models, x0: FieldState, composition: Composition, seed: int = 0) -> List[FieldState]:
    """Feed each prediction back as the next input; returns the state after every step."""
    missing = sorted({step for step in composition.steps if step not in models})
    if missing:
        logger.error(f"No fine-tuned model for lead times {missing}; available: {sorted(models)}")
        raise ConfigurationError(f"no fine-tuned model for lead times {missing}")
    states, x = [], x0
    for step in composition.steps:
        x = models[step].predict(x, seed)
        states.append(x)
    return states


def member_forecasts(
    models: Models, x0: FieldState, plan: EnsemblePlan, seed: int = 0, workers: int = 4
) -> List[FieldState]:
    """Final state of every member rollout, in plan order."""
    if not plan.members:
        raise ContractError("ensemble plan has no members")
    results: Dict[int, FieldState] = {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = {
            executor.submit(rollout, models, x0, member, seed): index
            for index, member in enumerate(plan.members)
        }
        for future in as_completed(futures):
            results[futures[future]] = future.result()[-1]
    logger.info(f"Rolled out {len(results)} ensemble members to +{plan.target_hours}h")
    return [results[i] for i in range(len(plan.members))]


def ensemble_forecast(
    models: Models,
    x0: FieldState,
    plan: EnsemblePlan,
    seed: int = 0,
    workers: int = 4,
    members: Optional[Sequence[FieldState]] = None,
) -> FieldState:
    """
    Elementwise mean of the member forecasts at the target horizon. `members` are
    final states already rolled out for `plan`; they are rolled out here when omitted.
    """
    if members is None:
        members = member_forecasts(models, x0, plan, seed, workers)
    elif len(members) != len(plan.members) or not members:
        raise ContractError(f"{len(members)} member forecasts for a plan of {len(plan.members)} members")
    return FieldState(np.mean(np.stack([m.values for m in members]), axis=0), members[0].time)
