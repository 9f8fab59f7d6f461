"""
Logger Setup Script
File: utils/utils_logger.py

This script provides logging functions for the project.
Every module imports the shared `logger` from here.

Features:
- Logs information, warnings, and errors to a designated log file.
- Ensures the log directory exists.
- Log folder and level can be set in a .env file
  (PDC_LOG_FOLDER, PDC_LOG_LEVEL). They only affect diagnostics.
"""

# Imports from Python Standard Library
import os
import pathlib
import sys

# Imports from external packages
from dotenv import load_dotenv
from loguru import logger

#####################################
# Load Environment Variables
#####################################

load_dotenv()

# Get this file name without the extension
CURRENT_SCRIPT = pathlib.Path(__file__).stem

# Set directory where logs will be stored
LOG_FOLDER: pathlib.Path = pathlib.Path(os.getenv("PDC_LOG_FOLDER", "logs"))

# Set the name of the log file
LOG_FILE: pathlib.Path = LOG_FOLDER.joinpath("project_log.log")

# Minimum level written to the log file
LOG_LEVEL: str = os.getenv("PDC_LOG_LEVEL", "INFO").upper()

# Ensure the log folder exists or create it
try:
    LOG_FOLDER.mkdir(exist_ok=True)
except Exception as e:
    logger.error(f"Error creating log folder: {e}")

# Configure Loguru to write to the log file
try:
    logger.add(LOG_FILE, level=LOG_LEVEL)
    logger.debug(f"Logging to file: {LOG_FILE} at level {LOG_LEVEL}")
except Exception as e:
    logger.error(f"Error configuring logger to write to file: {e}")


def get_log_file_path() -> pathlib.Path:
    """Return the path to the log file."""
    return LOG_FILE


_console_sink_id: int = 0  # loguru's default stderr sink


def set_console_level(level: str) -> None:
    """Replace the stderr sink with one at the given level."""
    global _console_sink_id
    try:
        logger.remove(_console_sink_id)
    except ValueError:
        logger.warning("Console sink was already removed.")
    _console_sink_id = logger.add(sys.stderr, level=level.upper())
