from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError


def token_count(h: int, w: int, patch: int) -> int:
    """Tokens after padding the latitude rows up to a multiple of the patch size."""
    if w % patch != 0:
        raise ConfigurationError(f"grid width {w} is not divisible by patch size {patch}")
    return math.ceil(h / patch) * (w // patch)


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    dim: int = Field(16, ge=1, description="token width D")
    patch: int = Field(4, ge=1, description="patch size p, in grid cells")
    enc_depth: int = Field(2, ge=0)
    dec_depth: int = Field(1, ge=0)
    heads: int = Field(2, ge=1)
    mlp_ratio: int = Field(2, ge=1)
    lead_hidden: int = Field(16, ge=1, description="width of the lead-time embedder")
    frame2: Literal["noise", "zeros"] = "noise"
    noise_std: float = Field(1.0, ge=0.0)
    init_seed: int = 0
    n_vars: int = Field(2, ge=1)
    height: int = Field(8, ge=1)
    width: int = Field(16, ge=1)

    @model_validator(mode="after")
    def _check_geometry(self) -> "ModelConfig":
        if self.dim % self.heads != 0:
            raise ConfigurationError(f"token width {self.dim} is not divisible by {self.heads} heads")
        if self.width % self.patch != 0:
            raise ConfigurationError(f"grid width {self.width} is not divisible by patch size {self.patch}")
        return self

    @property
    def padded_height(self) -> int:
        return math.ceil(self.height / self.patch) * self.patch

    @property
    def token_rows(self) -> int:
        return self.padded_height // self.patch

    @property
    def token_cols(self) -> int:
        return self.width // self.patch

    @property
    def n_tokens(self) -> int:
        return self.token_rows * self.token_cols

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads

    @property
    def center_token(self) -> int:
        return (self.token_rows // 2) * self.token_cols + self.token_cols // 2
