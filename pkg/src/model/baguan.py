from __future__ import annotations

from dataclasses import dataclass

from ..synthdata import FieldState
from .config import ModelConfig
from .network import build_frame2, forward
from .params import ModelParams


@dataclass(frozen=True)
class BaguanModel:
    """A fine-tuned network bound to the single lead time it forecasts."""

    params: ModelParams
    config: ModelConfig
    lead_hours: int

    def predict(self, state: FieldState, seed: int = 0) -> FieldState:
        """One application: X(t0) -> X(t0 + lead_hours), with a fresh frame-2 draw from `seed`."""
        frame2 = build_frame2(self.params, self.config, self.lead_hours, seed)
        values = forward(self.params, self.config, state.values, frame2, self.lead_hours)
        return FieldState(values.numpy(), state.time + self.lead_hours)
