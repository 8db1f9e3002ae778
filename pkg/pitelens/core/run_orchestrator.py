"""
Benchmark run orchestration.

Runs the grid for a validated config and writes the run directory:
results.csv, aggregates.csv, zones.csv, complexity.csv, config_echo.yaml and
manifest.json. Nothing written depends on wall-clock time, so two runs of the
same config produce identical files.
"""

import json
import shutil
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import joblib
import numpy as np
import pandas as pd
import scipy
import sklearn
import yaml

import pitelens
from pitelens.core.harness import aggregate_columns, run_all
from pitelens.core.report_generator import complexity_frame, zones_frame
from pitelens.models.config import RunConfig
from pitelens.models.records import GridResult
from pitelens.utils.errors import ResultsIOError
from pitelens.utils.logger import logger
from pitelens.utils.report_utils import RESULT_COLUMNS, write_csv


class RunOrchestrator:
    """Orchestrates one benchmark run and its output directory."""

    def __init__(self, config: RunConfig, output_dir: Path, config_path: Optional[Path] = None):
        """
        Initialize orchestrator.

        Args:
            config: Validated run configuration
            output_dir: Directory to store results
            config_path: Config file to echo verbatim (the resolved config is
                dumped as YAML when absent)
        """
        self.config = config
        self.output_dir = Path(output_dir)
        self.config_path = Path(config_path) if config_path else None

    def echo_config(self) -> Path:
        target = self.output_dir / "config_echo.yaml"
        try:
            if self.config_path is not None:
                shutil.copyfile(self.config_path, target)
            else:
                with open(target, "w", encoding="utf-8") as f:
                    yaml.safe_dump(self.config.to_dict(), f, sort_keys=True)
        except OSError as e:
            raise ResultsIOError(f"cannot write {target}: {e}") from e
        return target

    def manifest(self, result: GridResult, files: Dict[str, str]) -> Dict[str, Any]:
        rows = result.rows
        return {
            "package": "pitelens",
            "version": pitelens.__version__,
            "master_seed": self.config.master_seed,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
            "libraries": {
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "scikit-learn": sklearn.__version__,
                "pandas": pd.__version__,
                "joblib": joblib.__version__,
            },
            "counts": {
                "scenarios": int(rows.groupby(["mode", "mu_delta", "rho", "p", "n"]).ngroups) if len(rows) else 0,
                "rows": int(len(rows)),
                "failed": result.n_failed,
                "aggregates": int(len(result.aggregates)),
            },
            "files": sorted(Path(p).name for p in files.values()),
            "config": self.config.to_dict(),
        }

    def write_result(self, result: GridResult) -> Dict[str, str]:
        """Write the tables of a finished run."""
        files: Dict[str, str] = {}
        files["results"] = write_csv(result.rows, self.output_dir / "results.csv", columns=RESULT_COLUMNS)
        files["aggregates"] = write_csv(
            result.aggregates, self.output_dir / "aggregates.csv", columns=aggregate_columns()
        )
        files["zones"] = write_csv(zones_frame(result.aggregates), self.output_dir / "zones.csv")
        if result.complexity is not None:
            files["complexity"] = write_csv(complexity_frame(result.complexity), self.output_dir / "complexity.csv")
        files["config_echo"] = str(self.echo_config())

        manifest_path = self.output_dir / "manifest.json"
        files["manifest"] = str(manifest_path)
        try:
            with open(manifest_path, "w", encoding="utf-8") as f:
                json.dump(self.manifest(result, files), f, indent=2, sort_keys=True)
                f.write("\n")
        except OSError as e:
            raise ResultsIOError(f"cannot write {manifest_path}: {e}") from e
        return files

    def run(self, workers: Optional[int] = None) -> GridResult:
        """
        Run the grid and write the run directory.

        Args:
            workers: Override the configured worker count

        Returns:
            GridResult of the run
        """
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ResultsIOError(f"cannot create output directory {self.output_dir}: {e}") from e

        dump_dir = str(self.output_dir / "dumps") if self.config.dump_populations else None
        result = run_all(self.config, workers=workers, dump_dir=dump_dir)
        files = self.write_result(result)
        logger.info(f"Wrote {len(files)} files to {self.output_dir}")
        return result
