import os

from loguru import logger


class DirectoryValidator:
    @staticmethod
    def create_directory_if_not_exists(directory_path: str) -> str:
        """
        Creates a dataset, checkpoint or report directory (with parents) when missing.

        :param directory_path: The directory to check or create.
        :return: The directory path.
        :raises NotADirectoryError: If the path exists but is a file.
        """
        if os.path.isdir(directory_path):
            return directory_path
        if os.path.exists(directory_path):
            logger.error(f"{directory_path} exists and is not a directory.")
            raise NotADirectoryError(f"{directory_path} exists and is not a directory.")
        try:
            os.makedirs(directory_path)
            logger.info(f"Directory created: {directory_path}")
        except Exception as e:
            logger.error(f"Error creating directory {directory_path}: {e}")
            raise
        return directory_path

    @staticmethod
    def ensure_parent_directory(file_path: str) -> str:
        """Creates the directory a report or tensor file will be written into; returns the file path."""
        parent = os.path.dirname(file_path)
        if parent:
            DirectoryValidator.create_directory_if_not_exists(parent)
        return file_path
