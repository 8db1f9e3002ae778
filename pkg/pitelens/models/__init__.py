"""Data models for PiteLens."""

from pitelens.models.config import (
    Mode,
    ScenarioConfig,
    GridSpec,
    ComplexityConfig,
    RunConfig,
)
from pitelens.models.records import (
    Population,
    MatchedPairs,
    PairEffects,
    CalibrationResult,
    MetricReport,
    R2Components,
    MaeBounds,
    DecompositionReport,
    CalibrationDecomposition,
    ComplexityTable,
    ZoneFlags,
    ReplicationRecord,
    GridResult,
    IdentityCheck,
)

__all__ = [
    "Mode",
    "ScenarioConfig",
    "GridSpec",
    "ComplexityConfig",
    "RunConfig",
    "Population",
    "MatchedPairs",
    "PairEffects",
    "CalibrationResult",
    "MetricReport",
    "R2Components",
    "MaeBounds",
    "DecompositionReport",
    "CalibrationDecomposition",
    "ComplexityTable",
    "ZoneFlags",
    "ReplicationRecord",
    "GridResult",
    "IdentityCheck",
]
