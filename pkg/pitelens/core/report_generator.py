"""
Report Generator

Builds report tables and plot-ready data from a run's results.csv.
Reports are derived purely from the raw rows; results.csv is never written.
"""

from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from pitelens.core.harness import (
    GROUP_COLUMNS,
    SCENARIO_COLUMNS,
    aggregate,
    summary_table,
    zone_rectangles,
)
from pitelens.core.metrics import COMPLEXITY_CLASSES
from pitelens.models.config import Mode
from pitelens.models.records import ComplexityTable
from pitelens.utils.errors import ResultsIOError
from pitelens.utils.logger import logger
from pitelens.utils.report_utils import read_csv, read_results, write_csv

FAILURE_COLUMNS = ["mode", "mu_delta", "rho", "model", "p", "n", "RMSE", "R2", "MAE", "DIR", "alpha", "beta"]
ZONE_COLUMNS = GROUP_COLUMNS + [
    "rmse_mean",
    "dir_mean",
    "zone_failure",
    "zone_success",
    "failure_count",
    "success_count",
]
SCATTER_COLUMNS = GROUP_COLUMNS + ["rmse", "dir", "zone"]
CONDITION_COLUMNS = ["condition"] + SCENARIO_COLUMNS


def complexity_frame(table: ComplexityTable) -> pd.DataFrame:
    """Complexity classes as rows: class, patient count, then per-learner accuracy in percent."""
    data: Dict[str, List] = {
        "class": list(COMPLEXITY_CLASSES),
        "number": [table.counts[c] for c in COMPLEXITY_CLASSES],
    }
    for learner in table.learners:
        data[learner] = [table.accuracy[learner][c] for c in COMPLEXITY_CLASSES]
    return pd.DataFrame(data)


def zones_frame(aggregates: pd.DataFrame) -> pd.DataFrame:
    """Zone membership of every (scenario, learner) mean point."""
    return aggregates.loc[:, ZONE_COLUMNS].reset_index(drop=True)


def failure_table(aggregates: pd.DataFrame) -> pd.DataFrame:
    """
    Scenario-level mean metrics of every (scenario, learner) in the failure zone.

    The alpha and beta columns are the fractions of replications whose 95%
    interval covers 0 (intercept) and 1 (slope).
    """
    failed = aggregates[aggregates["zone_failure"].astype(float) == 1]
    table = pd.DataFrame(
        {
            "mode": failed["mode"],
            "mu_delta": failed["mu_delta"],
            "rho": failed["rho"],
            "model": failed["learner"],
            "p": failed["p"],
            "n": failed["n"],
            "RMSE": failed["rmse_mean"],
            "R2": failed["r2_mean"],
            "MAE": failed["mae_mean"],
            "DIR": failed["dir_mean"],
            "alpha": failed["alpha_coverage"],
            "beta": failed["beta_coverage"],
        },
        columns=FAILURE_COLUMNS,
    )
    return table.sort_values(["mode", "mu_delta", "rho", "model", "p", "n"], kind="mergesort").reset_index(drop=True)


def conditions_legend(aggregates: pd.DataFrame, mode: Mode) -> pd.DataFrame:
    """Number the scenarios of one mode 1..k in (mu_delta, rho, p, n) order."""
    subset = aggregates[aggregates["mode"] == Mode(mode).value]
    scenarios = (
        subset.loc[:, SCENARIO_COLUMNS]
        .drop_duplicates()
        .sort_values(SCENARIO_COLUMNS, kind="mergesort")
        .reset_index(drop=True)
    )
    scenarios.insert(0, "condition", np.arange(1, len(scenarios) + 1))
    return scenarios


def success_matrix(aggregates: pd.DataFrame, mode: Mode) -> pd.DataFrame:
    """
    Learner x condition incidence of the success zone for one mode.

    Columns are condition numbers from conditions_legend; a cell is 1 when the
    learner's mean point falls in the success zone for that condition.
    """
    legend = conditions_legend(aggregates, mode)
    subset = aggregates[aggregates["mode"] == Mode(mode).value]
    merged = subset.merge(legend, on=SCENARIO_COLUMNS, how="left")
    merged["hit"] = (merged["zone_success"].astype(float) == 1).astype(int)
    matrix = merged.pivot_table(index="learner", columns="condition", values="hit", aggfunc="max", fill_value=0)
    matrix = matrix.reindex(columns=legend["condition"].tolist(), fill_value=0)
    matrix.columns = [str(c) for c in matrix.columns]
    return matrix.reset_index()


def scatter_frame(aggregates: pd.DataFrame) -> pd.DataFrame:
    """RMSE vs DIR points with their zone label, for external plotting."""
    zone = np.where(
        aggregates["zone_failure"].astype(float) == 1,
        "failure",
        np.where(aggregates["zone_success"].astype(float) == 1, "success", "neither"),
    )
    frame = aggregates.loc[:, GROUP_COLUMNS].copy()
    frame["rmse"] = aggregates["rmse_mean"]
    frame["dir"] = aggregates["dir_mean"]
    frame["zone"] = zone
    return frame.reset_index(drop=True)


class ReportGenerator:
    """Generates report tables for one run directory."""

    def __init__(self, results_dir: Path, report_dir: Optional[Path] = None):
        """
        Initialize generator.

        Args:
            results_dir: Run directory containing results.csv
            report_dir: Destination (default: <results_dir>/report)
        """
        self.results_dir = Path(results_dir)
        self.report_dir = Path(report_dir) if report_dir else self.results_dir / "report"

    def load(self) -> pd.DataFrame:
        rows = read_results(self.results_dir)
        if rows.empty:
            raise ResultsIOError(f"{self.results_dir / 'results.csv'} has no rows")
        return rows

    def load_complexity(self) -> Optional[pd.DataFrame]:
        path = self.results_dir / "complexity.csv"
        if not path.is_file():
            return None
        return read_csv(path, required_columns=["class", "number"])

    def generate(self) -> Dict[str, str]:
        """
        Write every report table.

        Returns:
            Mapping of report name to the file written
        """
        rows = self.load()
        aggregates = aggregate(rows)
        modes = [m for m in Mode if m.value in set(rows["mode"])]

        written: Dict[str, str] = {}
        failures = failure_table(aggregates)
        written["failure_table"] = write_csv(failures, self.report_dir / "failure_table.csv")
        written["scatter"] = write_csv(scatter_frame(aggregates), self.report_dir / "scatter.csv")
        written["zone_rectangles"] = write_csv(zone_rectangles(), self.report_dir / "zone_rectangles.csv")

        for mode in modes:
            written[f"conditions_{mode.value}"] = write_csv(
                conditions_legend(aggregates, mode), self.report_dir / f"conditions_{mode.value}.csv"
            )
            written[f"success_matrix_{mode.value}"] = write_csv(
                success_matrix(aggregates, mode), self.report_dir / f"success_matrix_{mode.value}.csv"
            )
            written[f"summary_{mode.value}"] = write_csv(
                summary_table(aggregates, mode), self.report_dir / f"summary_{mode.value}.csv"
            )

        complexity = self.load_complexity()
        if complexity is not None:
            written["complexity_table"] = write_csv(complexity, self.report_dir / "complexity_table.csv")
        else:
            logger.info("no complexity.csv in run directory; complexity table skipped")

        logger.info(f"Wrote {len(written)} report files to {self.report_dir} ({len(failures)} failure rows)")
        return written
