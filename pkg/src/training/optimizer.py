from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Collection, Dict, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from ..errors import TrainingAbortedError
from ..model import ModelParams
from .config import StageConfig


def lr_at(step: int, cfg: StageConfig) -> float:
    """Linear warmup to peak_lr, then cosine decay to 0 at cfg.steps; stage 3 keeps peak_lr."""
    if cfg.stage == 3:
        return cfg.peak_lr
    if step < cfg.warmup_steps:
        return cfg.peak_lr * step / cfg.warmup_steps
    if cfg.steps == cfg.warmup_steps:
        return cfg.peak_lr
    progress = min(1.0, (step - cfg.warmup_steps) / (cfg.steps - cfg.warmup_steps))
    return cfg.peak_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class AdamState:
    """AdamW moments; `step` counts the updates already applied."""

    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_gradients(grads: Mapping[str, np.ndarray], max_norm: float) -> Dict[str, np.ndarray]:
    norm = global_norm(grads)
    if norm <= max_norm:
        return dict(grads)
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}


def optimizer_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    cfg: StageConfig,
    lr: Optional[float] = None,
    frozen: Collection[str] = (),
) -> Tuple[ModelParams, AdamState]:
    """
    One AdamW update with bias correction and decoupled weight decay.

    The learning rate defaults to lr_at(state.step, cfg). Gradients are clipped to
    cfg.clip_norm (global norm) first when clipping is enabled.
    Tensors named in `frozen` keep their values and moments; their gradients
    are left out of the clipping norm.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            logger.error(f"Non-finite gradient for '{name}' at step {state.step}")
            raise TrainingAbortedError(state.step, name, "non-finite gradient")
    if frozen:
        grads = {name: g for name, g in grads.items() if name not in frozen}
    if cfg.clip_norm is not None:
        grads = clip_gradients(grads, cfg.clip_norm)
    lr = lr_at(state.step, cfg) if lr is None else lr

    t = state.step + 1
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    first: Dict[str, np.ndarray] = {}
    second: Dict[str, np.ndarray] = {}
    updated: Dict[str, np.ndarray] = {}
    for name, value in params.items():
        if name in frozen:
            updated[name] = value
            first[name] = state.first_moment.get(name, np.zeros_like(value))
            second[name] = state.second_moment.get(name, np.zeros_like(value))
            continue
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)
        m = b1 * state.first_moment.get(name, np.zeros_like(value)) + (1.0 - b1) * g
        v = b2 * state.second_moment.get(name, np.zeros_like(value)) + (1.0 - b2) * g * g
        step_dir = (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)
        updated[name] = value - lr * (step_dir + cfg.weight_decay * value)
        first[name], second[name] = m, v
    return ModelParams(updated), AdamState(t, first, second)
