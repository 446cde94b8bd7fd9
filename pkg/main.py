"""
Command-line entry point of the Baguan desk pipeline.
Generates data, trains the three stages, forecasts and runs the theory lab.
"""
import sys

from loguru import logger

from src.cli import main

if __name__ == "__main__":
    # Configure logging
    logger.add("baguan.log", rotation="1 day", retention="7 days", level="INFO")

    sys.exit(main(sys.argv[1:]))
