from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Collection, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from ..errors import ConfigurationError, ContractError, NumericalError, TrainingAbortedError
from ..grid import weighted_loss
from ..masking import apply, frame_ratios, make_plan
from ..model import (
    Checkpoint,
    ModelConfig,
    ModelParams,
    build_frame2,
    embed_frame,
    forward,
    init_params,
    reconstruct,
    reset_decoder,
    token_cell_mask,
)
from ..tensor import Tensor, add, backward, mul
from .config import StageConfig
from .data import TrainingData, batch_starts, pair_count, sample_seeds
from .optimizer import AdamState, optimizer_step

_PAIR_STREAM = 10
_SAMPLE_STREAM = 11
_VAL_STREAM = 12
_GAP_WINDOW = 10
# updated while the encoder is frozen at the start of stage 2
_WARMUP_TRAINABLE = ("dec", "head")

LossFn = Callable[[Mapping[str, Tensor]], Tensor]


@dataclass
class TrainReport:
    """Per-step training losses and periodic validation losses, as (step, split, loss) rows."""

    rows: List[Tuple[int, str, float]] = field(default_factory=list)

    def log(self, step: int, split: str, loss: float) -> None:
        if not np.isfinite(loss) or loss < 0.0:
            raise TrainingAbortedError(step, split, f"loss {loss} is not a finite nonnegative number")
        self.rows.append((step, split, float(loss)))

    @property
    def train_losses(self) -> List[float]:
        return [loss for _, split, loss in self.rows if split == "train"]

    @property
    def val_losses(self) -> List[float]:
        return [loss for _, split, loss in self.rows if split == "val"]

    @property
    def final_val_loss(self) -> float:
        if not self.val_losses:
            raise ContractError("no validation loss was recorded")
        return self.val_losses[-1]

    @property
    def late_train_loss(self) -> float:
        """Mean of the last training losses."""
        late = self.train_losses[-_GAP_WINDOW:]
        if not late:
            raise ContractError("no training loss was recorded")
        return float(np.mean(late))

    @property
    def gap(self) -> float:
        """Final validation loss minus late_train_loss."""
        return self.final_val_loss - self.late_train_loss

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["step", "split", "loss"])


@dataclass
class TrainResult:
    params: ModelParams
    report: TrainReport
    state: AdamState
    next_step: int

    def checkpoint(self, model_cfg: ModelConfig, stage_cfg: StageConfig) -> Checkpoint:
        return Checkpoint(
            params=self.params,
            config=model_cfg,
            lead_hours=stage_cfg.lead_hours,
            stage=stage_cfg.stage,
            step=self.next_step,
            optimizer_step=self.state.step,
            first_moment=dict(self.state.first_moment),
            second_moment=dict(self.state.second_moment),
        )


def resume_state(checkpoint: Checkpoint) -> Tuple[ModelParams, AdamState, int]:
    """Parameters, optimizer state and the next step stored in a checkpoint."""
    state = AdamState(checkpoint.optimizer_step, dict(checkpoint.first_moment), dict(checkpoint.second_moment))
    return checkpoint.params, state, checkpoint.step


def horizon_at(step: int, cfg: StageConfig) -> int:
    """Rollout length at a stage-3 step: 2, growing by one every `cadence` steps up to n_max."""
    return min(cfg.n_max, 2 + step // cfg.cadence)


def _mean(losses: Sequence[Tensor]) -> Tensor:
    total = losses[0]
    for loss in losses[1:]:
        total = add(total, loss)
    return mul(total, 1.0 / len(losses))


def _gradient_step(
    params: ModelParams,
    state: AdamState,
    cfg: StageConfig,
    step: int,
    loss_fn: LossFn,
    frozen: Collection[str] = (),
) -> Tuple[ModelParams, AdamState, float]:
    leaves = params.leaves()
    try:
        loss = loss_fn(leaves)
    except NumericalError as e:
        logger.error(f"Non-finite forward pass at step {step}: {e}")
        raise TrainingAbortedError(step, "loss", str(e)) from e
    grads = backward(loss)
    named = {name: grads.get(leaf, np.zeros(leaf.shape)) for name, leaf in leaves.items()}
    params, state = optimizer_step(params, named, state, cfg, frozen=frozen)
    return params, state, loss.item()


def _check_stage(cfg: StageConfig, expected: int) -> None:
    if cfg.stage != expected:
        raise ConfigurationError(f"stage {expected} was given a stage-{cfg.stage} config")


def _run(
    name: str,
    params: ModelParams,
    cfg: StageConfig,
    step_fn: Callable[[ModelParams, AdamState, int], Tuple[ModelParams, AdamState, float]],
    val_fn: Callable[[ModelParams], float],
    state: Optional[AdamState],
    start_step: int,
    stop_step: Optional[int],
    report: Optional[TrainReport],
) -> TrainResult:
    state = state or AdamState()
    report = report or TrainReport()
    stop = cfg.steps if stop_step is None else min(stop_step, cfg.steps)
    logger.info(f"{name}: steps {start_step}..{stop} of {cfg.steps} (lead {cfg.lead_hours}h, seed {cfg.seed})")
    for step in range(start_step, stop):
        params, state, loss = step_fn(params, state, step)
        report.log(step, "train", loss)
        logger.debug(f"{name} step {step}: loss {loss:.6f}")
        if (step + 1) % cfg.eval_every == 0 or step + 1 == cfg.steps:
            val_loss = val_fn(params)
            report.log(step + 1, "val", val_loss)
            logger.info(f"{name} step {step + 1}: validation loss {val_loss:.6f}")
    return TrainResult(params, report, state, stop)


# --- stage 1: Siamese masked pre-training ---------------------------------------------------

def _reconstruction_loss(
    P: Mapping[str, Tensor],
    data: TrainingData,
    model_cfg: ModelConfig,
    cfg: StageConfig,
    x_t: np.ndarray,
    x_next: np.ndarray,
    plan_seed: int,
) -> Tensor:
    r_t, r_prev = frame_ratios(cfg.objective, cfg.mask_ratio)
    plan = make_plan(model_cfg.n_tokens, r_t, r_prev, plan_seed, model_cfg.noise_std)
    frame1 = apply(embed_frame(P, model_cfg, x_t), plan, frame=1)
    # masked frame-2 tokens look like the fully masked frame of fine-tuning
    fill = build_frame2(P, model_cfg, cfg.lead_hours, plan_seed).tokens
    frame2 = apply(embed_frame(P, model_cfg, x_next), plan, frame=2, fill=fill)
    pred = reconstruct(P, model_cfg, frame1, frame2, cfg.lead_hours)
    cell_mask = None
    if cfg.loss_cells == "masked" and plan.frame2_indices:
        cell_mask = token_cell_mask(model_cfg, plan.flags(2))
    return weighted_loss(pred, x_next, data.variables, data.grid, cfg.loss, cell_mask)


def pretrain_stage1(
    data: TrainingData,
    model_cfg: ModelConfig,
    cfg: StageConfig,
    params: Optional[ModelParams] = None,
    state: Optional[AdamState] = None,
    start_step: int = 0,
    stop_step: Optional[int] = None,
    report: Optional[TrainReport] = None,
) -> TrainResult:
    """
    Frame 1 is X(t), frame 2 is X(t + lead) with a share of its tokens replaced
    by noise plus the lead-time embedding; the network reconstructs frame 2.
    """
    _check_stage(cfg, 1)
    k = data.offset(cfg.lead_hours)
    n_pairs = pair_count(data.train, k)
    n_val = min(cfg.val_batches * cfg.batch_size, pair_count(data.val, k))
    params = init_params(model_cfg) if params is None else params

    def step_fn(params, state, step):
        starts = batch_starts(n_pairs, cfg.batch_size, step, cfg.seed, _PAIR_STREAM)
        seeds = sample_seeds(cfg.seed, _SAMPLE_STREAM, step, len(starts))

        def loss_fn(P):
            return _mean([
                _reconstruction_loss(P, data, model_cfg, cfg, data.train[t].values, data.train[t + k].values, s)
                for t, s in zip(starts, seeds)
            ])

        return _gradient_step(params, state, cfg, step, loss_fn)

    val_seeds = sample_seeds(cfg.seed, _VAL_STREAM, 0, n_val)

    def val_fn(params):
        return _mean([
            _reconstruction_loss(params, data, model_cfg, cfg, data.val[t].values, data.val[t + k].values, val_seeds[t])
            for t in range(n_val)
        ]).item()

    return _run("stage 1", params, cfg, step_fn, val_fn, state, start_step, stop_step, report)


# --- stage 2: fixed lead-time fine-tuning ---------------------------------------------------

def _forecast_loss(
    P: Mapping[str, Tensor],
    data: TrainingData,
    model_cfg: ModelConfig,
    cfg: StageConfig,
    x_t,
    target: np.ndarray,
    frame2_seed: int,
) -> Tuple[Tensor, Tensor]:
    frame2 = build_frame2(P, model_cfg, cfg.lead_hours, frame2_seed)
    pred = forward(P, model_cfg, x_t, frame2, cfg.lead_hours)
    return pred, weighted_loss(pred, target, data.variables, data.grid, cfg.loss)


def finetune_stage2(
    params: ModelParams,
    data: TrainingData,
    model_cfg: ModelConfig,
    cfg: StageConfig,
    fresh_decoder: bool = True,
    freeze_encoder: bool = True,
    state: Optional[AdamState] = None,
    start_step: int = 0,
    stop_step: Optional[int] = None,
    report: Optional[TrainReport] = None,
) -> TrainResult:
    """
    Frame 2 is fully masked, so the network forecasts X(t + lead) from X(t) alone.
    The pre-training decoder is replaced unless `fresh_decoder` is off; the head
    is kept. With `freeze_encoder`, steps before cfg.freeze_steps update only the
    decoder and the head. Runs from scratch turn it off.
    """
    _check_stage(cfg, 2)
    k = data.offset(cfg.lead_hours)
    n_pairs = pair_count(data.train, k)
    n_val = min(cfg.val_batches * cfg.batch_size, pair_count(data.val, k))
    if fresh_decoder:
        params = reset_decoder(params, model_cfg, cfg.seed)
    frozen_names = frozenset(name for name in params if not name.startswith(_WARMUP_TRAINABLE))
    if freeze_encoder and start_step < cfg.freeze_steps:
        logger.info(f"Stage 2: encoder frozen until step {cfg.freeze_steps}")

    def step_fn(params, state, step):
        starts = batch_starts(n_pairs, cfg.batch_size, step, cfg.seed, _PAIR_STREAM)
        seeds = sample_seeds(cfg.seed, _SAMPLE_STREAM, step, len(starts))

        def loss_fn(P):
            return _mean([
                _forecast_loss(P, data, model_cfg, cfg, data.train[t].values, data.train[t + k].values, s)[1]
                for t, s in zip(starts, seeds)
            ])

        frozen = frozen_names if freeze_encoder and step < cfg.freeze_steps else ()
        return _gradient_step(params, state, cfg, step, loss_fn, frozen)

    val_seeds = sample_seeds(cfg.seed, _VAL_STREAM, 0, n_val)

    def val_fn(params):
        return _mean([
            _forecast_loss(params, data, model_cfg, cfg, data.val[t].values, data.val[t + k].values, val_seeds[t])[1]
            for t in range(n_val)
        ]).item()

    return _run("stage 2", params, cfg, step_fn, val_fn, state, start_step, stop_step, report)


# --- stage 3: iterative autoregressive fine-tuning ------------------------------------------

def _rollout_loss(
    params: ModelParams,
    data: TrainingData,
    model_cfg: ModelConfig,
    cfg: StageConfig,
    states,
    start: int,
    k: int,
    horizon: int,
    seeds: Sequence[int],
) -> float:
    x = states[start].values
    losses = []
    for j in range(1, horizon + 1):
        pred, loss = _forecast_loss(params, data, model_cfg, cfg, x, states[start + j * k].values, seeds[j - 1])
        losses.append(loss.item())
        x = pred.numpy()
    return float(np.mean(losses))


def finetune_stage3(
    params: ModelParams,
    data: TrainingData,
    model_cfg: ModelConfig,
    cfg: StageConfig,
    state: Optional[AdamState] = None,
    start_step: int = 0,
    stop_step: Optional[int] = None,
    report: Optional[TrainReport] = None,
) -> TrainResult:
    """
    Predictions are fed back as inputs over a growing horizon. Each rollout step
    is its own optimizer update on a detached input, so no gradient crosses the chain.
    """
    _check_stage(cfg, 3)
    k = data.offset(cfg.lead_hours)
    span = cfg.n_max * k
    if len(data.train) <= span or len(data.val) <= span:
        raise ContractError(
            f"n_max={cfg.n_max} rollouts of {cfg.lead_hours}h exceed the training or validation span"
        )
    n_starts = pair_count(data.train, span)
    n_val = min(cfg.val_batches * cfg.batch_size, pair_count(data.val, span))

    def step_fn(params, state, step):
        horizon = horizon_at(step, cfg)
        starts = batch_starts(n_starts, cfg.batch_size, step, cfg.seed, _PAIR_STREAM)
        seeds = sample_seeds(cfg.seed, _SAMPLE_STREAM, step, len(starts) * horizon)
        inputs: List[np.ndarray] = [data.train[t].values for t in starts]
        step_losses = []
        for j in range(1, horizon + 1):
            predictions: Dict[int, np.ndarray] = {}

            def loss_fn(P, j=j, predictions=predictions, inputs=inputs):
                losses = []
                for b, t in enumerate(starts):
                    pred, loss = _forecast_loss(
                        P, data, model_cfg, cfg, inputs[b], data.train[t + j * k].values,
                        seeds[(j - 1) * len(starts) + b],
                    )
                    predictions[b] = pred.numpy()
                    losses.append(loss)
                return _mean(losses)

            params, state, loss = _gradient_step(params, state, cfg, step, loss_fn)
            step_losses.append(loss)
            inputs = [predictions[b] for b in range(len(starts))]
        return params, state, float(np.mean(step_losses))

    val_seeds = sample_seeds(cfg.seed, _VAL_STREAM, 0, n_val * cfg.n_max)

    def val_fn(params):
        return float(np.mean([
            _rollout_loss(params, data, model_cfg, cfg, data.val, t, k, cfg.n_max,
                          val_seeds[t * cfg.n_max:(t + 1) * cfg.n_max])
            for t in range(n_val)
        ]))

    return _run("stage 3", params, cfg, step_fn, val_fn, state, start_step, stop_step, report)
