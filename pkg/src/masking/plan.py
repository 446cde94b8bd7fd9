from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Tuple

import numpy as np

from ..errors import ConfigurationError, ContractError
from ..model import TokenSequence
from ..tensor import ArrayLike, GaussianSampler, where

_FRAME1_STREAM = 1
_FRAME2_STREAM = 2
_NOISE_STREAM = 3


def masked_count(ratio: float, n_tokens: int) -> int:
    """round(ratio * n_tokens), halves rounded up."""
    exact = Decimal(repr(float(ratio))) * n_tokens
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _check_ratio(name: str, ratio: float) -> None:
    if not 0.0 <= ratio <= 1.0:
        raise ContractError(f"{name} must lie in [0, 1], got {ratio}")


@dataclass(frozen=True)
class MaskPlan:
    """Which tokens of each frame are replaced by noise; frame 1 precedes frame 2 in time."""

    n_tokens: int
    frame1_ratio: float
    frame2_ratio: float
    frame1_indices: Tuple[int, ...]
    frame2_indices: Tuple[int, ...]
    seed: int
    noise_std: float = 1.0

    def indices(self, frame: int) -> Tuple[int, ...]:
        if frame not in (1, 2):
            raise ContractError(f"frame must be 1 or 2, got {frame}")
        return self.frame1_indices if frame == 1 else self.frame2_indices

    def flags(self, frame: int) -> np.ndarray:
        flags = np.zeros(self.n_tokens, dtype=bool)
        flags[list(self.indices(frame))] = True
        return flags


def make_plan(n_tokens: int, r_t: float, r_prev: float, seed: int, noise_std: float = 1.0) -> MaskPlan:
    """Uniformly random masked sets of exact size round(r * N) for both frames."""
    if n_tokens < 1:
        raise ContractError(f"token count must be positive, got {n_tokens}")
    _check_ratio("frame-2 ratio", r_t)
    _check_ratio("frame-1 ratio", r_prev)
    frame1 = GaussianSampler(seed, _FRAME1_STREAM).choice(n_tokens, masked_count(r_prev, n_tokens))
    frame2 = GaussianSampler(seed, _FRAME2_STREAM).choice(n_tokens, masked_count(r_t, n_tokens))
    return MaskPlan(
        n_tokens=n_tokens,
        frame1_ratio=float(r_prev),
        frame2_ratio=float(r_t),
        frame1_indices=tuple(int(i) for i in np.sort(frame1)),
        frame2_indices=tuple(int(i) for i in np.sort(frame2)),
        seed=seed,
        noise_std=float(noise_std),
    )


def apply(tokens: TokenSequence, plan: MaskPlan, frame: int = 2, fill: Optional[ArrayLike] = None) -> TokenSequence:
    """
    Masked token vectors become seeded Gaussian noise, or the matching rows of
    `fill` (N x D) when given; the others pass through bit-identical.
    """
    if tokens.n_tokens != plan.n_tokens:
        raise ContractError(f"plan sized for {plan.n_tokens} tokens applied to {tokens.n_tokens}")
    flags = plan.flags(frame)
    if not flags.any():
        return TokenSequence(tokens.tokens, tokens.masked.copy())
    if fill is None:
        fill = GaussianSampler(plan.seed, _NOISE_STREAM, frame).normal(tokens.tokens.shape, plan.noise_std)
    elif tuple(fill.shape) != tuple(tokens.tokens.shape):
        raise ContractError(f"fill {tuple(fill.shape)} does not match tokens {tuple(tokens.tokens.shape)}")
    masked_tokens = where(flags[:, None], fill, tokens.tokens)
    return TokenSequence(masked_tokens, tokens.masked | flags)


def frame_ratios(objective: str, mask_ratio: float) -> Tuple[float, float]:
    """(r_t, r_prev) for a pre-training objective: Siamese keeps frame 1 visible, MAE hides it."""
    if objective == "siamese":
        return mask_ratio, 0.0
    if objective == "mae":
        return mask_ratio, 1.0
    raise ConfigurationError(f"unknown pre-training objective '{objective}' (expected siamese or mae)")
