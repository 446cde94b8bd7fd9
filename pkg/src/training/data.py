from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from loguru import logger

from ..errors import ContractError
from ..grid import GridSpec, VariableSet
from ..model import ModelConfig
from ..synthdata import DatasetManifest, FieldState, NormStats, fit_normalizer, split
from ..tensor import GaussianSampler


@dataclass(frozen=True)
class TrainingData:
    """Chronological splits of a dataset, normalized with training-split statistics."""

    train: List[FieldState]
    val: List[FieldState]
    test: List[FieldState]
    variables: VariableSet
    grid: GridSpec
    step_hours: int
    norm: NormStats

    @classmethod
    def from_dataset(
        cls,
        manifest: DatasetManifest,
        states: Sequence[FieldState],
        train_frac: float = 0.7,
        val_frac: float = 0.15,
    ) -> "TrainingData":
        train, val, test = split(states, train_frac, val_frac)
        norm = fit_normalizer(train, manifest.variables.names)
        logger.info(f"Split {len(states)} snapshots into {len(train)}/{len(val)}/{len(test)}")
        return cls(
            train=[norm.apply(s) for s in train],
            val=[norm.apply(s) for s in val],
            test=[norm.apply(s) for s in test],
            variables=manifest.variables,
            grid=manifest.grid,
            step_hours=manifest.step_hours,
            norm=norm,
        )

    def offset(self, lead_hours: int) -> int:
        """Snapshots between a pair's input and its target."""
        if lead_hours % self.step_hours != 0:
            raise ContractError(f"lead time {lead_hours}h is not a multiple of the {self.step_hours}h data step")
        return lead_hours // self.step_hours

    def model_config(self, base: ModelConfig) -> ModelConfig:
        return ModelConfig(**{
            **base.model_dump(),
            "n_vars": self.variables.V,
            "height": self.grid.H,
            "width": self.grid.W,
        })


def pair_count(states: Sequence[FieldState], span: int) -> int:
    """Start indices t with t + span still inside the slice."""
    count = len(states) - span
    if count < 1:
        raise ContractError(f"a slice of {len(states)} snapshots holds no pairs {span} steps apart")
    return count


def batch_starts(n_pairs: int, batch_size: int, step: int, seed: int, stream: int) -> List[int]:
    """
    Pair start indices of one batch. Starts are drawn without replacement within
    an epoch; each epoch is a fresh permutation, so the batch depends only on
    (seed, step) and a resumed run draws the same batches.
    """
    starts = []
    for position in range(step * batch_size, (step + 1) * batch_size):
        epoch, slot = divmod(position, n_pairs)
        starts.append(int(GaussianSampler(seed, stream, epoch).permutation(n_pairs)[slot]))
    return starts


def sample_seeds(seed: int, stream: int, step: int, count: int) -> List[int]:
    return GaussianSampler(seed, stream, step).spawn_seeds(count)

