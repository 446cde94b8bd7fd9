from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from loguru import logger

from ..errors import ContractError
from ..synthdata import read_tensor, write_tensor
from ..utils import DirectoryValidator, FileHandler, FileValidator
from .baguan import BaguanModel
from .config import ModelConfig
from .params import ModelParams

PARAMS_INDEX = "params.kv"
CHECKPOINT_INFO = "checkpoint.kv"
_F64 = 1
_MOMENT_PREFIXES = ("adam_m.", "adam_v.")


@dataclass(frozen=True)
class Checkpoint:
    """
    Weights plus everything needed to continue training bit-exactly: the stage,
    the lead time, the step reached and the AdamW moments.
    """

    params: ModelParams
    config: ModelConfig
    lead_hours: int
    stage: int
    step: int = 0
    optimizer_step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def model(self) -> BaguanModel:
        return BaguanModel(self.params, self.config, self.lead_hours)


def _shape_text(array: np.ndarray) -> str:
    return "x".join(str(d) for d in array.shape) if array.ndim else "scalar"


def save_checkpoint(ckpt_dir: str, checkpoint: Checkpoint) -> None:
    DirectoryValidator.create_directory_if_not_exists(ckpt_dir)
    tensors: Dict[str, np.ndarray] = dict(checkpoint.params)
    tensors.update({f"adam_m.{k}": v for k, v in checkpoint.first_moment.items()})
    tensors.update({f"adam_v.{k}": v for k, v in checkpoint.second_moment.items()})

    index: Dict[str, str] = {}
    for name, array in tensors.items():
        file_name = f"{name}.bgn"
        write_tensor(os.path.join(ckpt_dir, file_name), array, dtype_code=_F64)
        index[name] = f"{file_name},{_shape_text(array)}"
    FileHandler.save_kv(
        index,
        os.path.join(ckpt_dir, PARAMS_INDEX),
        f"Wrote {len(index)} tensors to {ckpt_dir}",
        f"Error writing parameter index to {ckpt_dir}:",
    )

    info: Dict[str, object] = {
        "stage": checkpoint.stage,
        "lead_hours": checkpoint.lead_hours,
        "step": checkpoint.step,
        "optimizer_step": checkpoint.optimizer_step,
    }
    info.update({f"model.{k}": v for k, v in checkpoint.config.model_dump().items()})
    FileHandler.save_kv(
        info,
        os.path.join(ckpt_dir, CHECKPOINT_INFO),
        f"Checkpoint (stage {checkpoint.stage}, {checkpoint.lead_hours}h, step {checkpoint.step}) saved to {ckpt_dir}",
        f"Error writing checkpoint info to {ckpt_dir}:",
    )


def load_checkpoint(ckpt_dir: str) -> Checkpoint:
    FileValidator.validate_directory_path(ckpt_dir, PARAMS_INDEX)
    info = FileHandler.read_kv(FileValidator.validate_file_path(os.path.join(ckpt_dir, CHECKPOINT_INFO)))
    config = ModelConfig(**{k[len("model."):]: v for k, v in info.items() if k.startswith("model.")})

    params: Dict[str, np.ndarray] = {}
    moments: Dict[str, Dict[str, np.ndarray]] = {prefix: {} for prefix in _MOMENT_PREFIXES}
    for name, entry in FileHandler.read_kv(os.path.join(ckpt_dir, PARAMS_INDEX)).items():
        file_name, _, shape_text = entry.partition(",")
        array = read_tensor(os.path.join(ckpt_dir, file_name))
        if _shape_text(array) != shape_text:
            raise ContractError(f"{file_name}: stored shape {_shape_text(array)} differs from index {shape_text}")
        prefix = next((p for p in _MOMENT_PREFIXES if name.startswith(p)), None)
        if prefix is None:
            params[name] = array
        else:
            moments[prefix][name[len(prefix):]] = array

    model_params = ModelParams(params)
    model_params.check(config)
    logger.info(f"Loaded checkpoint from {ckpt_dir} ({model_params.n_parameters} parameters)")
    return Checkpoint(
        params=model_params,
        config=config,
        lead_hours=int(info["lead_hours"]),
        stage=int(info["stage"]),
        step=int(info["step"]),
        optimizer_step=int(info.get("optimizer_step", 0)),
        first_moment=moments["adam_m."],
        second_moment=moments["adam_v."],
    )


def load_models(ckpt_dirs) -> Dict[int, BaguanModel]:
    """Lead time -> model, one checkpoint per lead time."""
    models: Dict[int, BaguanModel] = {}
    for ckpt_dir in ckpt_dirs:
        model = load_checkpoint(ckpt_dir).model()
        if model.lead_hours in models:
            logger.warning(f"Two checkpoints for lead time {model.lead_hours}h; keeping {ckpt_dir}")
        models[model.lead_hours] = model
    return models

