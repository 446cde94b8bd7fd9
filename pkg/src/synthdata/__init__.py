from .field_state import FieldState
from .generator import DatasetManifest, generate, one_step, split
from .normalizer import NormStats, apply, fit_normalizer, invert
from .storage import (
    decode_tensor,
    encode_tensor,
    read_dataset,
    read_tensor,
    write_dataset,
    write_tensor,
)

__all__ = [
    "FieldState",
    "DatasetManifest",
    "generate",
    "one_step",
    "split",
    "NormStats",
    "fit_normalizer",
    "apply",
    "invert",
    "encode_tensor",
    "decode_tensor",
    "write_tensor",
    "read_tensor",
    "write_dataset",
    "read_dataset",
]
