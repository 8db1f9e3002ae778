"""Utilities module for logging, random streams, errors and result files."""

from pitelens.utils.logger import (
    logger,
    set_log_level,
)
from pitelens.utils.errors import (
    PiteLensError,
    InvalidParameterError,
    RankDeficiencyError,
    ArmFitError,
    ConfigValidationError,
    IdentityViolationError,
    ResultsIOError,
)
from pitelens.utils.rng import derive_rng, derive_seed_sequence, draw_seed
from pitelens.utils.report_utils import FLOAT_FORMAT, read_csv, read_results, write_csv

__all__ = [
    "logger",
    "set_log_level",
    "PiteLensError",
    "InvalidParameterError",
    "RankDeficiencyError",
    "ArmFitError",
    "ConfigValidationError",
    "IdentityViolationError",
    "ResultsIOError",
    "derive_rng",
    "derive_seed_sequence",
    "draw_seed",
    "FLOAT_FORMAT",
    "read_csv",
    "read_results",
    "write_csv",
]
