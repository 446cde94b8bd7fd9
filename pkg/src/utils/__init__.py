"""File and directory helpers shared by the dataset, checkpoint, config and report code."""
from .directory_validator import DirectoryValidator
from .file_handler import FileHandler
from .file_validator import FileValidator

__all__ = [
    "FileHandler",
    "FileValidator",
    "DirectoryValidator",
]
