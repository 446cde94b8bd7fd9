import copy
import os
from typing import Any, Dict, List, Literal, Mapping, Optional

import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigurationError
from .model import ModelConfig
from .theory import TheoryConfig
from .training import StageConfig
from .utils import FileHandler, FileValidator

VERSION = "baguan-desk 0.1.0"


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    h: int = Field(8, ge=1, description="grid rows (latitudes)")
    w: int = Field(16, ge=1, description="grid columns (longitudes)")
    vars: int = Field(2, ge=1)
    steps: int = Field(160, ge=2, description="snapshots to generate")
    step_hours: int = Field(6, ge=1)
    seed: int = 0
    noise_std: float = Field(0.02, ge=0.0)
    diffusion: float = Field(0.05, ge=0.0, le=0.5)
    speeds: Optional[List[float]] = None
    train_frac: float = Field(0.7, gt=0.0, lt=1.0)
    val_frac: float = Field(0.15, gt=0.0, lt=1.0)
    pressure_profile: Literal["uniform", "surface"] = "uniform"


class ForecastConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iterations: int = Field(8, ge=1)
    seed: int = 0
    workers: int = Field(4, ge=1)


class RunConfig(BaseModel):
    """Fully resolved settings of one invocation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    data: DataConfig = DataConfig()
    model: ModelConfig = ModelConfig()
    pretrain: StageConfig = StageConfig(stage=1)
    finetune: StageConfig = StageConfig(stage=2, loss="mae")
    rolling: StageConfig = StageConfig(stage=3, loss="mae", warmup_steps=0)
    forecast: ForecastConfig = ForecastConfig()
    theory: TheoryConfig = TheoryConfig()


def parse_value(raw: Any) -> Any:
    """YAML scalar parsing for `key=value` text; `a,b,c` becomes a list."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if "," in text and not text.startswith("["):
        return [yaml.safe_load(part.strip()) for part in text.split(",") if part.strip()]
    try:
        return yaml.safe_load(text) if text else None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse value {raw!r}: {e}") from e


def _format_value(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, (list, tuple)):
        joined = ",".join(_format_value(v) for v in value)
        return joined if len(value) > 1 else f"[{joined}]"
    return str(value)


class Config:
    def __init__(self, defaults_path: Optional[str] = None):
        # === Path Configurations ===
        self.BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        self.PATH_TO_VALIDATE = {
            "defaults": defaults_path or os.path.join(self.BASE_DIR, "settings", "defaults.yaml"),
        }

        # === Path Validation ===
        logger.debug("Start checking for validity of paths to configuration files.")
        for path in self.PATH_TO_VALIDATE.values():
            FileValidator.validate_file_path(path)
        logger.debug("All file paths have been validated successfully.")

        self._defaults = FileHandler.load_yaml(self.PATH_TO_VALIDATE["defaults"])

    def defaults(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self._defaults)

    @staticmethod
    def _set(tree: Dict[str, Dict[str, Any]], key: str, value: Any, source: str) -> None:
        section, sep, name = key.partition(".")
        if not sep or not name or "." in name:
            raise ConfigurationError(f"{source}: key '{key}' must look like section.name")
        if section not in RunConfig.model_fields:
            raise ConfigurationError(
                f"{source}: unknown section '{section}' (valid: {', '.join(RunConfig.model_fields)})"
            )
        tree.setdefault(section, {})[name] = parse_value(value)

    def resolve(self, path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
        """
        Defaults from the YAML settings, then `key=value` lines from `path`, then
        `overrides` (already typed or raw text). Every value is validated here.
        """
        tree = self.defaults()
        if path is not None:
            entries = FileHandler.read_kv(FileValidator.validate_file_path(path))
            logger.info(f"Read {len(entries)} settings from {path}")
            for key, value in entries.items():
                self._set(tree, key, value, path)
        for key, value in (overrides or {}).items():
            self._set(tree, key, value, "command line")
        try:
            return RunConfig(**tree)
        except ValidationError as e:
            logger.error(f"Invalid configuration: {e}")
            raise ConfigurationError(str(e)) from None


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    defaults_path: Optional[str] = None,
) -> RunConfig:
    return Config(defaults_path).resolve(path, overrides)


def flatten(run: RunConfig) -> Dict[str, str]:
    """Dotted `section.name` -> text, in a form `load_config` reads back unchanged."""
    flat: Dict[str, str] = {}
    for section, values in run.model_dump().items():
        for name, value in values.items():
            flat[f"{section}.{name}"] = _format_value(value)
    return flat


def provenance(run: RunConfig, command: str) -> Dict[str, str]:
    """Header echoed at the top of every report."""
    return {"version": VERSION, "command": command, **flatten(run)}
