from __future__ import annotations

import os
from typing import Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from ..errors import ContractError
from ..grid import GridSpec, VariableSet
from ..utils import DirectoryValidator, FileHandler, FileValidator
from .field_state import FieldState
from .generator import DatasetManifest

MAGIC = b"BGN1"
MANIFEST_FILE = "manifest.kv"

# dtype code -> little-endian numpy dtype
DTYPES: Dict[int, str] = {0: "<f4", 1: "<f8"}


def encode_tensor(array: np.ndarray, dtype_code: int = 0) -> bytes:
    if dtype_code not in DTYPES:
        raise ContractError(f"unknown BGN1 dtype code {dtype_code}")
    array = np.asarray(array)
    header = np.asarray([array.ndim, *array.shape, dtype_code], dtype="<u4").tobytes()
    payload = np.ascontiguousarray(array, dtype=DTYPES[dtype_code]).tobytes(order="C")
    return MAGIC + header + payload


def decode_tensor(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    if blob[:4] != MAGIC:
        raise ContractError(f"{source}: not a BGN1 tensor file")
    if len(blob) < 8:
        raise ContractError(f"{source}: truncated header, no rank")
    rank = int(np.frombuffer(blob, dtype="<u4", count=1, offset=4)[0])
    offset = 12 + 4 * rank
    if len(blob) < offset:
        raise ContractError(f"{source}: truncated header, rank {rank} needs {offset} bytes, found {len(blob)}")
    dims = tuple(int(d) for d in np.frombuffer(blob, dtype="<u4", count=rank, offset=8))
    dtype_code = int(np.frombuffer(blob, dtype="<u4", count=1, offset=8 + 4 * rank)[0])
    if dtype_code not in DTYPES:
        raise ContractError(f"{source}: unknown dtype code {dtype_code}")
    count = int(np.prod(dims, dtype=np.int64))
    expected = offset + count * np.dtype(DTYPES[dtype_code]).itemsize
    if len(blob) != expected:
        raise ContractError(f"{source}: expected {expected} bytes, found {len(blob)}")
    values = np.frombuffer(blob, dtype=DTYPES[dtype_code], count=count, offset=offset)
    return values.reshape(dims).astype(np.float64)


def write_tensor(path: str, array: np.ndarray, dtype_code: int = 0) -> None:
    with open(path, "wb") as file:
        file.write(encode_tensor(array, dtype_code))


def read_tensor(path: str) -> np.ndarray:
    FileValidator.validate_file_path(path)
    with open(path, "rb") as file:
        return decode_tensor(file.read(), path)


def snapshot_file(time_hours: int) -> str:
    return f"t{time_hours}.bgn"


def manifest_entries(manifest: DatasetManifest) -> Dict[str, object]:
    entries: Dict[str, object] = {
        "grid.h": manifest.grid.H,
        "grid.w": manifest.grid.W,
        "step_hours": manifest.step_hours,
        "count": manifest.count,
        "seed": manifest.seed,
    }
    for name, speed, weight in zip(manifest.variables.names, manifest.speeds, manifest.variables.pressure_weights):
        entries[f"var.{name}.speed"] = repr(float(speed))
        entries[f"var.{name}.weight"] = repr(float(weight))
    entries["diffusion"] = repr(float(manifest.diffusion))
    entries["noise_std"] = repr(float(manifest.noise_std))
    return entries


def parse_manifest(entries: Dict[str, str]) -> DatasetManifest:
    try:
        names: List[str] = []
        speeds: List[float] = []
        weights: List[float] = []
        for key, value in entries.items():
            if key.startswith("var.") and key.endswith(".speed"):
                name = key[len("var."):-len(".speed")]
                names.append(name)
                speeds.append(float(value))
                weights.append(float(entries.get(f"var.{name}.weight", "nan")))
        if any(np.isnan(weights)):
            weights = [1.0 / len(names)] * len(names)
        return DatasetManifest(
            grid=GridSpec.regular(int(entries["grid.h"]), int(entries["grid.w"])),
            variables=VariableSet(tuple(names), tuple(weights)),
            step_hours=int(entries["step_hours"]),
            count=int(entries["count"]),
            seed=int(entries["seed"]),
            speeds=tuple(speeds),
            diffusion=float(entries.get("diffusion", 0.0)),
            noise_std=float(entries.get("noise_std", 0.0)),
        )
    except (KeyError, ValueError) as e:
        raise ContractError(f"incomplete or malformed dataset manifest: {e}") from e


def write_dataset(out_dir: str, manifest: DatasetManifest, states: Sequence[FieldState]) -> None:
    """One f32 BGN1 file per snapshot plus `manifest.kv`."""
    if len(states) != manifest.count:
        raise ContractError(f"manifest announces {manifest.count} snapshots, got {len(states)}")
    DirectoryValidator.create_directory_if_not_exists(out_dir)
    for state in states:
        write_tensor(os.path.join(out_dir, snapshot_file(state.time)), state.values, dtype_code=0)
    FileHandler.save_kv(
        manifest_entries(manifest),
        os.path.join(out_dir, MANIFEST_FILE),
        f"Dataset of {len(states)} snapshots written to {out_dir}",
        f"Error writing dataset manifest to {out_dir}:",
    )


def read_dataset(data_dir: str) -> Tuple[DatasetManifest, List[FieldState]]:
    FileValidator.validate_directory_path(data_dir, MANIFEST_FILE)
    manifest = parse_manifest(FileHandler.read_kv(os.path.join(data_dir, MANIFEST_FILE)))
    states = []
    for t in range(manifest.count):
        hours = t * manifest.step_hours
        values = read_tensor(os.path.join(data_dir, snapshot_file(hours)))
        states.append(FieldState(values, hours))
    logger.info(f"Loaded {len(states)} snapshots from {data_dir}")
    return manifest, states
