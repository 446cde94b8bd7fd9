from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from ..errors import ContractError


@dataclass(frozen=True, order=True)
class Composition:
    """Ordered lead-time steps (hours) chained to reach a horizon, e.g. (6, 6, 6, 6) or (24,)."""

    steps: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.steps)

    def timestamps(self, start: int = 0) -> List[int]:
        """Valid time after each step: the prefix sums of the steps."""
        times, now = [], start
        for step in self.steps:
            now += step
            times.append(now)
        return times

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return "+".join(str(s) for s in self.steps)


@dataclass(frozen=True)
class EnsemblePlan:
    target_hours: int
    available: Tuple[int, ...]
    max_iterations: float
    members: Tuple[Composition, ...]

    def __len__(self) -> int:
        return len(self.members)


def enumerate_compositions(target_hours: int, available: Iterable[int]) -> List[Composition]:
    """Every ordered sequence over `available` summing to the target; empty when unreachable."""
    parts = sorted(set(int(a) for a in available))
    if target_hours <= 0:
        raise ContractError(f"target horizon must be positive, got {target_hours}")
    if not parts or parts[0] <= 0:
        raise ContractError(f"available lead times must be a nonempty set of positive hours, got {parts}")

    found: List[Composition] = []
    stack: List[Tuple[int, Tuple[int, ...]]] = [(0, ())]
    while stack:
        reached, prefix = stack.pop()
        if reached == target_hours:
            found.append(Composition(prefix))
            continue
        for part in reversed(parts):
            if reached + part <= target_hours:
                stack.append((reached + part, prefix + (part,)))
    return found


def prune(
    compositions: Sequence[Composition],
    max_iterations: Optional[float] = None,
) -> EnsemblePlan:
    """Keep compositions of at most `max_iterations` steps, shortest first, then lexicographic."""
    cap = math.inf if max_iterations is None else max_iterations
    if cap < 1:
        raise ContractError(f"max_iterations must be at least 1, got {max_iterations}")
    kept = sorted((c for c in compositions if len(c) <= cap), key=lambda c: (len(c), c.steps))
    totals = {c.total for c in compositions}
    if len(totals) > 1:
        raise ContractError(f"compositions reach different horizons {sorted(totals)}")
    available = tuple(sorted({s for c in compositions for s in c.steps}))
    return EnsemblePlan(
        target_hours=totals.pop() if totals else 0,
        available=available,
        max_iterations=cap,
        members=tuple(kept),
    )
