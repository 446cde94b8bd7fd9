from .main import main, run
from .parser import build_parser

__all__ = [
    "main",
    "run",
    "build_parser",
]
