from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..errors import ConfigurationError, ContractError
from ..grid import GridSpec, VariableSet
from ..tensor import GaussianSampler
from .field_state import FieldState

_INITIAL_SMOOTHING_PASSES = 4


@dataclass(frozen=True)
class DatasetManifest:
    """
    Everything needed to regenerate a synthetic dataset bit-for-bit.

    `speeds` are zonal advection speeds in degrees of longitude per step, one per
    variable; `diffusion` is the 3-point smoothing coefficient applied along both
    axes each step; `noise_std` is the std of the Gaussian noise added each step.
    """

    grid: GridSpec
    variables: VariableSet
    step_hours: int
    count: int
    seed: int
    speeds: Tuple[float, ...]
    diffusion: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        if self.count < 2:
            raise ConfigurationError(f"dataset needs at least 2 snapshots, got {self.count}")
        if self.step_hours < 1:
            raise ConfigurationError(f"step_hours must be positive, got {self.step_hours}")
        if len(self.speeds) != self.variables.V:
            raise ConfigurationError(f"{self.variables.V} variables but {len(self.speeds)} speeds")
        if not 0.0 <= self.diffusion <= 0.5:
            raise ConfigurationError(f"diffusion must lie in [0, 0.5], got {self.diffusion}")
        if self.noise_std < 0.0:
            raise ConfigurationError(f"noise_std must be nonnegative, got {self.noise_std}")

    @classmethod
    def build(
        cls,
        h: int,
        w: int,
        n_vars: int,
        count: int,
        seed: int,
        step_hours: int = 6,
        noise_std: float = 0.0,
        diffusion: float = 0.0,
        speeds: Optional[Sequence[float]] = None,
        pressure_profile: str = "uniform",
    ) -> "DatasetManifest":
        grid = GridSpec.regular(h, w)
        variables = VariableSet.from_profile(VariableSet.default_names(n_vars), pressure_profile)
        if speeds is None:
            cell = 360.0 / w
            speeds = [(i + 1) * cell for i in range(n_vars)]
        return cls(grid, variables, step_hours, count, seed, tuple(float(s) for s in speeds), diffusion, noise_std)


def _advect(field: np.ndarray, cells: float) -> np.ndarray:
    """Circular eastward shift along longitude by a (possibly fractional) number of cells."""
    whole = math.floor(cells)
    frac = cells - whole
    shifted = np.roll(field, whole, axis=-1)
    if frac == 0.0:
        return shifted
    return (1.0 - frac) * shifted + frac * np.roll(field, whole + 1, axis=-1)


def _diffuse(field: np.ndarray, coefficient: float) -> np.ndarray:
    """3-point smoothing: periodic in longitude, edge-replicated in latitude."""
    if coefficient == 0.0:
        return field
    zonal = (1.0 - 2.0 * coefficient) * field + coefficient * (
        np.roll(field, 1, axis=-1) + np.roll(field, -1, axis=-1)
    )
    padded = np.concatenate([zonal[..., :1, :], zonal, zonal[..., -1:, :]], axis=-2)
    return (1.0 - 2.0 * coefficient) * zonal + coefficient * (padded[..., :-2, :] + padded[..., 2:, :])


def one_step(manifest: DatasetManifest, values: np.ndarray) -> np.ndarray:
    """The noiseless one-step map: per-variable advection followed by diffusion."""
    cell = 360.0 / manifest.grid.W
    out = np.empty_like(values)
    for v, speed in enumerate(manifest.speeds):
        out[v] = _diffuse(_advect(values[v], speed / cell), manifest.diffusion)
    return out


def _initial_state(manifest: DatasetManifest) -> np.ndarray:
    sampler = GaussianSampler(manifest.seed, 0)
    grid = manifest.grid
    profile = np.cos(np.deg2rad(np.asarray(grid.latitudes)))[:, None]
    fields = []
    for v in range(manifest.variables.V):
        field = sampler.normal((grid.H, grid.W))
        for _ in range(_INITIAL_SMOOTHING_PASSES):
            field = _diffuse(field, 0.25)
        field = field / max(field.std(), 1e-12)
        fields.append(field + (1.0 + 0.5 * v) * profile + float(v))
    return np.stack(fields)


def _as_stored(values: np.ndarray) -> np.ndarray:
    """Round to float32 so the in-memory dataset equals what the BGN1 files hold."""
    return values.astype(np.float32).astype(np.float64)


def generate(manifest: DatasetManifest) -> List[FieldState]:
    logger.info(
        f"Generating {manifest.count} snapshots on a {manifest.grid.H}x{manifest.grid.W} grid "
        f"with {manifest.variables.V} variables (seed {manifest.seed})"
    )
    state = _initial_state(manifest)
    shape = state.shape
    snapshots = [FieldState(_as_stored(state), 0)]
    for t in range(1, manifest.count):
        state = one_step(manifest, state)
        if manifest.noise_std > 0.0:
            state = state + GaussianSampler(manifest.seed, 1, t).normal(shape, manifest.noise_std)
        snapshots.append(FieldState(_as_stored(state), t * manifest.step_hours))
    logger.debug(f"Generated snapshots up to t={snapshots[-1].time}h")
    return snapshots


def split(dataset: Sequence[FieldState], train_frac: float, val_frac: float):
    """Chronological train/val/test slices; sizes are floor(count * fraction)."""
    if train_frac <= 0 or val_frac <= 0 or train_frac + val_frac >= 1:
        raise ContractError(f"fractions must be positive with sum < 1, got {train_frac}/{val_frac}")
    count = len(dataset)
    n_train = math.floor(count * train_frac + 1e-9)
    n_val = math.floor(count * val_frac + 1e-9)
    train = list(dataset[:n_train])
    val = list(dataset[n_train:n_train + n_val])
    test = list(dataset[n_train + n_val:])
    if not train or not val or not test:
        raise ContractError(
            f"split of {count} snapshots into {len(train)}/{len(val)}/{len(test)} leaves an empty slice"
        )
    return train, val, test
