from __future__ import annotations

import math
from collections.abc import Mapping
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger

from ..errors import ContractError, NumericalError
from ..tensor import GaussianSampler, Tensor
from .config import ModelConfig

_INIT_STREAM = 7
_RESET_STREAM = 8

DECODER_PREFIXES = ("dec",)


def parameter_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Name -> shape of every learnable tensor, in a fixed order."""
    D, p, V = cfg.dim, cfg.patch, cfg.n_vars
    hidden = cfg.mlp_ratio * D
    shapes: Dict[str, Tuple[int, ...]] = {
        "var_w": (V, D),
        "var_b": (V, D),
        "agg_q": (1, cfg.height, cfg.width, D),
        "agg_wk": (D, D),
        "agg_wv": (D, D),
        "patch_w": (p * p * D, D),
        "patch_b": (D,),
        "pos": (cfg.n_tokens, D),
        "lead_w1": (1, cfg.lead_hidden),
        "lead_b1": (cfg.lead_hidden,),
        "lead_w2": (cfg.lead_hidden, D),
        "lead_b2": (D,),
    }
    for i in range(cfg.enc_depth):
        shapes.update({
            f"enc{i}.mod_w": (D, 6 * D),
            f"enc{i}.mod_b": (6 * D,),
            f"enc{i}.wq": (D, D),
            f"enc{i}.wk": (D, D),
            f"enc{i}.wv": (D, D),
            f"enc{i}.wo": (D, D),
            f"enc{i}.ff_w1": (D, hidden),
            f"enc{i}.ff_b1": (hidden,),
            f"enc{i}.ff_w2": (hidden, D),
            f"enc{i}.ff_b2": (D,),
        })
    for i in range(cfg.dec_depth):
        shapes.update({
            f"dec{i}.wq1": (D, D),
            f"dec{i}.wk1": (D, D),
            f"dec{i}.wv1": (D, D),
            f"dec{i}.wq2": (D, D),
            f"dec{i}.wk2": (D, D),
            f"dec{i}.wv2": (D, D),
            f"dec{i}.ff_w1": (D, hidden),
            f"dec{i}.ff_b1": (hidden,),
            f"dec{i}.ff_w2": (hidden, D),
            f"dec{i}.ff_b2": (D,),
        })
    shapes["head_w"] = (D, p * p * V)
    shapes["head_b"] = (p * p * V,)
    return shapes


class ModelParams(Mapping):
    """
    Immutable name -> float64 array mapping holding every learnable weight.

    Training never mutates a ModelParams; the optimizer returns a new one.
    """

    def __init__(self, arrays: Dict[str, np.ndarray]):
        frozen = {}
        for name, value in arrays.items():
            array = np.array(value, dtype=np.float64)
            if not np.all(np.isfinite(array)):
                raise NumericalError(f"parameter '{name}' holds non-finite values")
            array.flags.writeable = False
            frozen[name] = array
        self._arrays = frozen

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    @property
    def n_parameters(self) -> int:
        return int(sum(a.size for a in self._arrays.values()))

    def replace(self, updates: Mapping) -> "ModelParams":
        unknown = set(updates) - set(self._arrays)
        if unknown:
            raise ContractError(f"unknown parameters {sorted(unknown)}")
        merged = dict(self._arrays)
        merged.update(updates)
        return ModelParams(merged)

    def leaves(self) -> Dict[str, Tensor]:
        """Fresh differentiable leaves, one per parameter."""
        return {name: Tensor(array, requires_grad=True, name=name) for name, array in self._arrays.items()}

    def check(self, cfg: ModelConfig) -> None:
        expected = parameter_shapes(cfg)
        if list(expected) != list(self._arrays):
            raise ContractError("parameter names do not match the model config")
        for name, shape in expected.items():
            if self._arrays[name].shape != shape:
                raise ContractError(f"parameter '{name}' has shape {self._arrays[name].shape}, expected {shape}")


def _init_value(name: str, shape: Tuple[int, ...], sampler: GaussianSampler, adaln_zero: bool) -> np.ndarray:
    leaf = name.split(".")[-1]
    if leaf in ("mod_w", "mod_b"):
        if adaln_zero:
            return np.zeros(shape)
        return sampler.normal(shape, 1.0 / math.sqrt(shape[0]) if leaf == "mod_w" else 0.1)
    if name == "agg_q" or name == "var_w":
        return sampler.normal(shape)
    if name == "pos":
        return sampler.normal(shape, 0.1)
    if len(shape) == 1 or name == "var_b":
        return np.zeros(shape)
    return sampler.normal(shape, 1.0 / math.sqrt(shape[0]))


def _initialize(cfg: ModelConfig, names: List[str], seed: int, stream: int, adaln_zero: bool) -> Dict[str, np.ndarray]:
    shapes = parameter_shapes(cfg)
    order = list(shapes)
    return {
        name: _init_value(name, shapes[name], GaussianSampler(seed, stream, order.index(name)), adaln_zero)
        for name in names
    }


def init_params(cfg: ModelConfig, seed: Optional[int] = None, adaln_zero: bool = True) -> ModelParams:
    """
    Random initial weights. Every tensor draws from its own (seed, stream, index)
    key, so adding a block never shifts the draws of the others.

    With `adaln_zero` the encoder modulation weights start at zero, which makes
    every encoder block the identity map.
    """
    seed = cfg.init_seed if seed is None else seed
    params = ModelParams(_initialize(cfg, list(parameter_shapes(cfg)), seed, _INIT_STREAM, adaln_zero))
    logger.debug(f"Initialized {params.n_parameters} parameters (seed {seed})")
    return params


def reset_decoder(params: ModelParams, cfg: ModelConfig, seed: int) -> ModelParams:
    """Fresh decoder blocks; the embeddings, encoder and output head are kept."""
    names = [name for name in parameter_shapes(cfg) if name.startswith(DECODER_PREFIXES)]
    logger.info(f"Re-initializing {len(names)} decoder tensors (seed {seed})")
    return params.replace(_initialize(cfg, names, seed, _RESET_STREAM, adaln_zero=True))
