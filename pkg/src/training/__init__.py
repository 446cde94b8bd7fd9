from .ablation import run_mask_ratio_ablation
from .config import StageConfig
from .data import TrainingData, batch_starts, pair_count
from .optimizer import AdamState, clip_gradients, global_norm, lr_at, optimizer_step
from .stages import (
    TrainReport,
    TrainResult,
    finetune_stage2,
    finetune_stage3,
    horizon_at,
    pretrain_stage1,
    resume_state,
)

__all__ = [
    "StageConfig",
    "TrainingData",
    "batch_starts",
    "pair_count",
    "AdamState",
    "lr_at",
    "optimizer_step",
    "global_norm",
    "clip_gradients",
    "TrainReport",
    "TrainResult",
    "pretrain_stage1",
    "finetune_stage2",
    "finetune_stage3",
    "horizon_at",
    "resume_state",
    "run_mask_ratio_ablation",
]
