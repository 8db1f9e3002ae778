"""
Shared utilities for writing and reading result tables.

All tables are CSV with a fixed column order and 17 significant digits, so a
parsed file re-serializes to identical bytes.
"""

import os
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from pitelens.utils.errors import ResultsIOError

FLOAT_FORMAT = "%.17g"

# Column order of results.csv
RESULT_KEY_COLUMNS = ["mode", "mu_delta", "rho", "p", "n", "learner", "replication"]
RESULT_COLUMNS = RESULT_KEY_COLUMNS + [
    "status",
    "reason",
    "rmse",
    "mae",
    "r2",
    "adj_r2",
    "dir",
    "alpha",
    "beta",
    "alpha_se",
    "beta_se",
    "alpha_covers",
    "beta_covers",
    "obs_rmse",
    "obs_dir",
    "n_scored",
    "zone_failure",
    "zone_success",
]

PathLike = Union[str, Path]


def write_csv(df: pd.DataFrame, path: PathLike, columns: Optional[Sequence[str]] = None) -> str:
    """
    Write a table in the canonical CSV format.

    Args:
        df: Table to write
        path: Destination file
        columns: Optional column order to enforce

    Returns:
        Path written, as a string
    """
    path = str(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    if columns is not None:
        df = df.loc[:, list(columns)]
    try:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise ResultsIOError(f"cannot write {path}: {e}") from e
    return path


def read_csv(path: PathLike, required_columns: Optional[List[str]] = None) -> pd.DataFrame:
    """
    Read a table written by write_csv without losing float precision.

    Raises:
        ResultsIOError: File missing, unparsable or lacking required columns
    """
    path = str(path)
    if not os.path.isfile(path):
        raise ResultsIOError(f"missing results file: {path}")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise ResultsIOError(f"corrupt results file {path}: {e}") from e
    if required_columns:
        missing = [c for c in required_columns if c not in df.columns]
        if missing:
            raise ResultsIOError(f"{path} is missing columns: {', '.join(missing)}")
    return df


def read_results(results_dir: PathLike) -> pd.DataFrame:
    """Load results.csv from a run directory."""
    return read_csv(Path(results_dir) / "results.csv", required_columns=RESULT_COLUMNS)
