"""
utils_output.py - common functions used to write datasets.

Tables go out as CSV or JSON records through pandas; nested documents
(polytopes, reports) go out as JSON. Formatting is fixed so identical runs
produce byte-identical files.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import json
import pathlib
from typing import Any, Literal, Optional

# Import external packages
import pandas as pd

# Import functions from local modules
from utils.utils_logger import logger

#####################################
# Set up Paths
#####################################

# The parent directory of this file is its folder.
# Go up one more parent level to get the project root.
PROJECT_ROOT = pathlib.Path(__file__).parent.parent

# Default folder for generated datasets
DATA_FOLDER = PROJECT_ROOT.joinpath("data")

# Schema description shipped with the project
SCHEMA_FILE = DATA_FOLDER.joinpath("output_schema.json")

OutputFormat = Literal["csv", "json"]

# Significant digits written for every float
FLOAT_FORMAT = "%.15g"

#####################################
# Helper Functions
#####################################


def default_output_path(mode: str, fmt: OutputFormat) -> pathlib.Path:
    """data/<mode>.<fmt> under the project root."""
    return DATA_FOLDER.joinpath(f"{mode.replace('-', '_')}.{fmt}")


def _prepare(path: pathlib.Path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_table(table: pd.DataFrame, path: pathlib.Path, fmt: OutputFormat) -> pathlib.Path:
    """
    Write a table as CSV (header row, fixed float format) or JSON records.

    Raises OSError on I/O failure after logging it.
    """
    try:
        path = _prepare(path)
        if fmt == "csv":
            table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        else:
            path.write_text(
                table.to_json(orient="records", double_precision=15, indent=2) + "\n",
                encoding="utf-8",
            )
        logger.info(f"Wrote {len(table)} rows to {path}")
        return path
    except OSError as e:
        logger.error(f"Error writing table to {path}: {e}")
        raise


def write_document(document: Any, path: pathlib.Path) -> pathlib.Path:
    """Write a nested document as indented JSON."""
    try:
        path = _prepare(path)
        path.write_text(json.dumps(document, indent=2, allow_nan=False) + "\n", encoding="utf-8")
        logger.info(f"Wrote JSON document to {path}")
        return path
    except OSError as e:
        logger.error(f"Error writing document to {path}: {e}")
        raise


def sibling_path(path: pathlib.Path, suffix: str, extension: Optional[str] = None) -> pathlib.Path:
    """data/fig1.csv -> data/fig1_<suffix>.<extension>."""
    path = pathlib.Path(path)
    return path.with_name(f"{path.stem}_{suffix}{extension or path.suffix}")


def load_schema() -> dict:
    """Return the shipped output schema description."""
    return json.loads(SCHEMA_FILE.read_text(encoding="utf-8"))
