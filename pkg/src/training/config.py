from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError


class StageConfig(BaseModel):
    """
    Optimizer, schedule and sampling settings of one training stage.

    `freeze_steps` applies to stage 2 started from pre-trained weights: before that
    step only the fresh decoder and the head are updated.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    stage: Literal[1, 2, 3] = 1
    lead_hours: int = Field(6, ge=1)
    steps: int = Field(2000, ge=1)
    warmup_steps: int = Field(100, ge=0)
    peak_lr: float = Field(1e-3, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.95, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    weight_decay: float = Field(0.05, ge=0.0)
    batch_size: int = Field(4, ge=1)
    loss: Literal["mse", "mae"] = "mse"
    objective: Literal["siamese", "mae"] = "siamese"
    mask_ratio: float = Field(0.75, ge=0.0, le=1.0)
    loss_cells: Literal["masked", "all"] = "masked"
    lambda_t: float = Field(1.0, ge=0.0)
    lambda_prev: float = Field(1.0, ge=0.0)
    clip_norm: Optional[float] = Field(1.0, gt=0.0)
    freeze_steps: int = Field(0, ge=0)
    eval_every: int = Field(100, ge=1)
    val_batches: int = Field(4, ge=1)
    n_max: int = Field(3, ge=1)
    cadence: int = Field(50, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_schedule(self) -> "StageConfig":
        if self.warmup_steps > self.steps:
            raise ConfigurationError(f"warmup_steps {self.warmup_steps} exceeds steps {self.steps}")
        if self.stage == 3 and self.n_max < 2:
            raise ConfigurationError(f"stage 3 needs n_max >= 2, got {self.n_max}")
        return self
