from __future__ import annotations

from dataclasses import dataclass

from loguru import logger

from ..errors import ContractError, InfiniteDifficultyError


@dataclass(frozen=True)
class DifficultyScore:
    value: float
    lambda_t: float
    lambda_prev: float
    r_t: float
    r_prev: float


def task_difficulty(lambda_t: float, lambda_prev: float, r_t: float, r_prev: float) -> DifficultyScore:
    """
    Reciprocal of the information-weighted visible fraction of both frames:
    1 / (lambda_t * (1 - r_t) + lambda_prev * (1 - r_prev)).
    """
    if lambda_t < 0 or lambda_prev < 0:
        raise ContractError(f"information weights must be nonnegative, got {lambda_t}, {lambda_prev}")
    for ratio in (r_t, r_prev):
        if not 0.0 <= ratio <= 1.0:
            raise ContractError(f"masking ratios must lie in [0, 1], got {ratio}")
    visible = lambda_t * (1.0 - r_t) + lambda_prev * (1.0 - r_prev)
    if visible <= 0.0:
        logger.error(f"Task difficulty unbounded for r_t={r_t}, r_prev={r_prev}")
        raise InfiniteDifficultyError("every token of both frames is masked")
    return DifficultyScore(1.0 / visible, lambda_t, lambda_prev, r_t, r_prev)
