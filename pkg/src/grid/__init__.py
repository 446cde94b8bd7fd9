from .metrics import acc, climatology, latitude_weights, rmse, weighted_loss
from .spec import Climatology, GridSpec, VariableSet

__all__ = [
    "GridSpec",
    "VariableSet",
    "Climatology",
    "latitude_weights",
    "rmse",
    "acc",
    "weighted_loss",
    "climatology",
]
