from typing import Any, Dict, Mapping, Optional

import pandas as pd
import yaml
from loguru import logger

from ..errors import ConfigParseError


class FileHandler:
    @staticmethod
    def save_kv(data: Mapping[str, Any], file_path: str, text_successful: str, text_error: str) -> None:
        """
        Saves a mapping as UTF-8 `key=value` lines, in insertion order.

        :param data: The mapping to save; values are written with str().
        :param file_path: Path to the file where the data should be saved.
        :param text_successful: The success message to log.
        :param text_error: The error message to log in case of failure.
        """
        try:
            with open(file_path, "w", encoding="utf-8", newline="\n") as file:
                for key, value in data.items():
                    file.write(f"{key}={value}\n")
            logger.info(text_successful)
        except Exception as e:
            logger.error(f"{text_error} {str(e)}")
            raise

    @staticmethod
    def read_kv(file_path: str) -> Dict[str, str]:
        """
        Reads UTF-8 `key=value` lines. Blank lines and `#` comments are skipped;
        a repeated key keeps its last value and logs a warning.

        :param file_path: The path to the file.
        :return: Ordered mapping of keys to raw string values.
        :raises ConfigParseError: On a line without `=` or with an empty key.
        """
        data: Dict[str, str] = {}
        with open(file_path, "r", encoding="utf-8") as file:
            for line_number, raw in enumerate(file, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                key = key.strip()
                if not sep or not key:
                    logger.error(f"Malformed line {line_number} in {file_path}: {line!r}")
                    raise ConfigParseError(file_path, line_number, line)
                if key in data:
                    logger.warning(f"Duplicate key '{key}' at {file_path}:{line_number}; the last value wins")
                data[key] = value.strip()
        return data

    @staticmethod
    def save_csv(
        data: Any,
        file_path: str,
        text_successful: str,
        text_error: str,
        provenance: Optional[Mapping[str, Any]] = None,
    ) -> None:
        """
        Saves data in CSV format to a file.

        :param data: The data to save (a DataFrame or anything DataFrame() accepts).
        :param file_path: Path to the file where the data should be saved.
        :param text_successful: The success message to log.
        :param text_error: The error message to log in case of failure.
        :param provenance: Written first as `# key=value` comment lines.
        """
        try:
            frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(data)
            with open(file_path, "w", encoding="utf-8", newline="\n") as file:
                for key, value in (provenance or {}).items():
                    file.write(f"# {key}={value}\n")
                frame.to_csv(file, index=False, lineterminator="\n")
            logger.info(text_successful)
        except Exception as e:
            logger.error(f"{text_error} {str(e)}")
            raise

    @staticmethod
    def load_yaml(file_path: str) -> dict:
        """
        Loads data from a YAML file.

        Parameters:
        file_path (str): Path to the YAML file.

        Returns:
        dict: A dictionary with the loaded data.
        """
        try:
            with open(file_path, "r", encoding="utf-8") as file:
                data = yaml.safe_load(file)
            return data or {}
        except Exception as e:
            logger.error(f"Error reading YAML file at {file_path}: {e}")
            raise
