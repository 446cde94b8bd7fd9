from .difficulty import DifficultyScore, task_difficulty
from .plan import MaskPlan, apply, frame_ratios, make_plan, masked_count

__all__ = [
    "MaskPlan",
    "make_plan",
    "masked_count",
    "apply",
    "frame_ratios",
    "DifficultyScore",
    "task_difficulty",
]
