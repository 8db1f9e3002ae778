"""
Scaled benchmark runs checking the published success and failure bands.

These tests fit every learner on full-size scenarios and take several minutes.
Enable them explicitly:
    export PITELENS_RUN_BENCHMARK=1

Run with: pytest tests/test_benchmark_integration.py -v
Or with tox: tox -e benchmark-integration
"""

import os

import pytest

from pitelens.core.harness import run_all, run_replication
from pitelens.core.identity_suite import run_identity_suite
from pitelens.core.learners import LearnerSpec
from pitelens.models.config import ComplexityConfig, GridSpec, Mode, RunConfig, ScenarioConfig
from pitelens.utils.report_utils import RESULT_COLUMNS, write_csv

pytestmark = pytest.mark.skipif(
    not os.getenv("PITELENS_RUN_BENCHMARK"),
    reason="benchmark runs disabled (set PITELENS_RUN_BENCHMARK=1)",
)

SEED = 20240101


def _config(modes, learners, grid, replications=20, **extra):
    return RunConfig(
        modes=modes,
        learners=learners,
        preset="custom",
        grid=grid,
        replications=replications,
        master_seed=SEED,
        workers=os.cpu_count() or 1,
        cv_folds=10,
        complexity=ComplexityConfig(enabled=False),
        **extra,
    )


def _medians(result):
    return {
        row["learner"]: (row["rmse_median"], row["dir_median"], row["n_failed"])
        for row in result.aggregates.to_dict("records")
    }


class TestBenchmarkBands:
    """Scaled reproductions of the headline benchmark results."""

    def test_identity_suite_full_size(self):
        """Test the identity suite passes at full size."""
        checks = run_identity_suite(master_seed=0)
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]

    def test_noiseless_exact_recovery(self):
        """Test noiseless OLS recovers the effect on every replication."""
        scenario = ScenarioConfig(n=500, p=5, rho=0.0, mu_delta=0.5, noise_sd=0.0, master_seed=SEED)
        for rep in range(20):
            (record,) = run_replication(scenario, rep, [LearnerSpec("ols")])
            assert record.report.rmse < 1e-6
            assert record.report.dir == 1.0

    def test_internal_success_band(self):
        """Test penalized and projection learners succeed at n=750, rho=0.5, p=5."""
        learners = ["ridge", "lasso", "enet", "pls", "pcr"]
        grid = GridSpec(n=[750], p=[5], rho=[0.5], mu_delta=[0.5])
        medians = _medians(run_all(_config([Mode.INTERNAL], learners, grid)))
        for learner in learners:
            rmse_median, dir_median, n_failed = medians[learner]
            print(f"\n{learner}: median RMSE {rmse_median:.3f}, median DIR {dir_median:.3f}")
            assert n_failed == 0
            assert rmse_median < 1.0, learner
            assert dir_median > 0.95, learner

    def test_internal_failure_band(self):
        """Test CART lands in the failure zone at n=500, rho=0.5, p=45."""
        grid = GridSpec(n=[500], p=[45], rho=[0.5], mu_delta=[0.5])
        rmse_median, dir_median, _ = _medians(run_all(_config([Mode.INTERNAL], ["cart"], grid)))["cart"]
        print(f"\ncart: median RMSE {rmse_median:.3f}, median DIR {dir_median:.3f}")
        assert rmse_median >= 5.0
        assert dir_median <= 0.85

    def test_null_signal_has_no_successes(self):
        """Test no learner succeeds in more than one replication without a mean effect."""
        grid = GridSpec(n=[250, 750], p=[45], rho=[0.0, 0.5], mu_delta=[0.0])
        result = run_all(_config([Mode.INTERNAL], ["ridge", "lasso", "pls", "cart"], grid))
        assert result.aggregates["success_count"].max() <= 1

    def test_interaction_success_band(self):
        """Test ridge, enet and gbm succeed with five selected interactions at n=750."""
        learners = ["ridge", "enet", "gbm"]
        grid = GridSpec(mu_delta=[0.5], interaction_n=[750], interaction_p=[5])
        medians = _medians(run_all(_config([Mode.EXTERNAL_INTERACTION], learners, grid)))
        for learner in learners:
            rmse_median, dir_median, _ = medians[learner]
            print(f"\n{learner}: median RMSE {rmse_median:.3f}, median DIR {dir_median:.3f}")
            assert rmse_median < 1.6, learner
            assert dir_median > 0.65, learner


class TestDeterminism:
    """Worker-count independence of a desk-scale grid."""

    def test_results_identical_across_workers(self, tmp_path):
        """Test 1, 4 and 8 workers write byte-identical results.csv."""
        grid = GridSpec(
            n=[200], p=[5], rho=[0.5], mu_delta=[0.5], interaction_n=[200], interaction_p=[5]
        )
        config = _config(
            [Mode.INTERNAL, Mode.EXTERNAL_CORRELATED, Mode.EXTERNAL_INTERACTION],
            ["ols", "ridge", "lasso", "enet", "pcr", "pls", "cart", "rf", "gbm"],
            grid,
            replications=5,
            learner_grids={"rf": {"n_trees": 50}, "gbm": {"n_trees": 50}},
        )
        outputs = []
        for workers in (1, 4, 8):
            result = run_all(config, workers=workers)
            path = write_csv(result.rows, tmp_path / f"results_{workers}.csv", columns=RESULT_COLUMNS)
            with open(path, "rb") as f:
                outputs.append(f.read())
        assert outputs[0] == outputs[1] == outputs[2]
