from .baguan import BaguanModel
from .checkpoint import Checkpoint, load_checkpoint, load_models, save_checkpoint
from .config import ModelConfig, token_count
from .network import (
    TokenSequence,
    adaln_modulate,
    adaln_parameters,
    aggregate_variables,
    attention_row,
    build_frame2,
    decode,
    detokenize,
    embed_frame,
    encode,
    forward,
    lead_embedding,
    multi_head_attention,
    reconstruct,
    patchify,
    token_cell_mask,
    tokenize,
    unpatchify,
)
from .params import ModelParams, init_params, parameter_shapes, reset_decoder

__all__ = [
    "BaguanModel",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "load_models",
    "ModelConfig",
    "token_count",
    "TokenSequence",
    "aggregate_variables",
    "tokenize",
    "detokenize",
    "patchify",
    "unpatchify",
    "embed_frame",
    "token_cell_mask",
    "lead_embedding",
    "adaln_parameters",
    "adaln_modulate",
    "multi_head_attention",
    "encode",
    "decode",
    "forward",
    "reconstruct",
    "build_frame2",
    "attention_row",
    "ModelParams",
    "init_params",
    "parameter_shapes",
    "reset_decoder",
]
