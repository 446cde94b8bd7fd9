from .compositions import Composition, EnsemblePlan, enumerate_compositions, prune
from .evaluation import evaluate
from .rollout import ensemble_forecast, member_forecasts, rollout

__all__ = [
    "Composition",
    "EnsemblePlan",
    "enumerate_compositions",
    "prune",
    "rollout",
    "member_forecasts",
    "ensemble_forecast",
    "evaluate",
]
