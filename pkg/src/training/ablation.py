from __future__ import annotations

from typing import Sequence

import pandas as pd
from loguru import logger

from ..masking import frame_ratios, task_difficulty
from ..model import ModelConfig, init_params
from .config import StageConfig
from .data import TrainingData
from .stages import finetune_stage2, pretrain_stage1


def run_mask_ratio_ablation(
    data: TrainingData,
    model_cfg: ModelConfig,
    pretrain_cfg: StageConfig,
    finetune_cfg: StageConfig,
    ratios: Sequence[float],
) -> pd.DataFrame:
    """
    Pre-train at each masking ratio, fine-tune with equal budget, and compare with a
    from-scratch run given the pre-training steps as extra fine-tuning steps.

    One row per ratio plus a `scratch` row (ratio and difficulty left empty).
    """
    rows = []
    for ratio in ratios:
        cfg = pretrain_cfg.model_copy(update={"mask_ratio": float(ratio)})
        r_t, r_prev = frame_ratios(cfg.objective, cfg.mask_ratio)
        difficulty = task_difficulty(cfg.lambda_t, cfg.lambda_prev, r_t, r_prev).value
        logger.info(f"Ablation: {cfg.objective} pre-training at mask ratio {ratio} (difficulty {difficulty:.4f})")
        pretrained = pretrain_stage1(data, model_cfg, cfg)
        finetuned = finetune_stage2(pretrained.params, data, model_cfg, finetune_cfg)
        rows.append({
            "run": "pretrained",
            "objective": cfg.objective,
            "mask_ratio": float(ratio),
            "difficulty": difficulty,
            "stage1_late_loss": pretrained.report.late_train_loss,
            "val_loss": finetuned.report.final_val_loss,
            "gap": finetuned.report.gap,
        })

    scratch_cfg = finetune_cfg.model_copy(update={"steps": finetune_cfg.steps + pretrain_cfg.steps})
    logger.info(f"Ablation: from-scratch baseline with {scratch_cfg.steps} fine-tuning steps")
    scratch = finetune_stage2(init_params(model_cfg), data, model_cfg, scratch_cfg, freeze_encoder=False)
    rows.append({
        "run": "scratch",
        "objective": "none",
        "mask_ratio": None,
        "difficulty": None,
        "stage1_late_loss": None,
        "val_loss": scratch.report.final_val_loss,
        "gap": scratch.report.gap,
    })
    return pd.DataFrame(rows)
