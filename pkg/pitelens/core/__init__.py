"""Core simulation, estimation and scoring logic for PiteLens."""

from pitelens.core.report_generator import ReportGenerator
from pitelens.core.run_orchestrator import RunOrchestrator

__all__ = [
    "ReportGenerator",
    "RunOrchestrator",
]
