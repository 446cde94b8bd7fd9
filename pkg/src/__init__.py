from .config import VERSION, RunConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "VERSION",
    "RunConfig",
    "load_config",
]
