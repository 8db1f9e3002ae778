"""Unit tests for benchmark grid execution and aggregation."""

import math

import numpy as np
import pandas as pd
import pytest

from pitelens.core.harness import (
    aggregate,
    aggregate_columns,
    build_grid,
    classify_zones,
    learner_specs,
    record_to_row,
    results_frame,
    run_all,
    run_complexity,
    run_replication,
    summary_table,
    zone_rectangles,
)
from pitelens.core.learners import LearnerSpec, make_learner_spec
from pitelens.models.config import ComplexityConfig, GridSpec, Mode, RunConfig, ScenarioConfig
from pitelens.utils.errors import InvalidParameterError
from pitelens.utils.report_utils import RESULT_COLUMNS


def _small_config(**overrides):
    values = dict(
        modes=[Mode.INTERNAL],
        learners=["ols", "ridge"],
        preset="custom",
        grid=GridSpec(n=[100], p=[3], rho=[0.5], mu_delta=[0.5], interaction_n=[200], interaction_p=[5]),
        replications=2,
        master_seed=11,
        workers=1,
        cv_folds=5,
        complexity=ComplexityConfig(enabled=False),
    )
    values.update(overrides)
    return RunConfig(**values)


class TestBuildGrid:
    """Test cases for scenario enumeration."""

    def test_published_internal_grid(self):
        """Test the internal published grid has 81 cells."""
        config = RunConfig(modes=[Mode.INTERNAL], learners=["ols"], preset="published")
        assert len(build_grid(config)) == 81

    def test_published_interaction_grid(self):
        """Test the interaction published grid has 27 cells with rho fixed at 0."""
        config = RunConfig(modes=[Mode.EXTERNAL_INTERACTION], learners=["ols"], preset="published")
        grid = build_grid(config)
        assert len(grid) == 27
        assert {s.rho for s in grid} == {0.0}
        assert {s.n for s in grid} == {500, 750, 1000}

    def test_custom_single_cell(self):
        """Test a custom single-cell grid gives one scenario."""
        grid = build_grid(_small_config())
        assert len(grid) == 1
        assert grid[0].key == ("internal", 0.5, 0.5, 3, 100)

    def test_grid_is_sorted(self):
        """Test scenarios come out sorted by (mode, mu_delta, rho, p, n)."""
        config = RunConfig(modes=[Mode.INTERNAL, Mode.EXTERNAL_CORRELATED], learners=["ols"], preset="published")
        keys = [s.key for s in build_grid(config)]
        assert keys == sorted(keys)
        assert len(keys) == 162

    def test_published_preset_rejects_other_values(self):
        """Test the published preset only accepts published grid values."""
        config = RunConfig(modes=[Mode.INTERNAL], learners=["ols"], preset="published", grid=GridSpec(n=[300]))
        with pytest.raises(InvalidParameterError, match="published preset n"):
            build_grid(config)

    def test_invalid_custom_cell(self):
        """Test an odd subject count is reported with its cell."""
        config = _small_config(grid=GridSpec(n=[101], p=[3], rho=[0.0], mu_delta=[0.5]))
        with pytest.raises(InvalidParameterError, match="invalid grid cell"):
            build_grid(config)

    def test_learner_specs_follow_config(self):
        """Test specs carry the configured folds and overrides."""
        config = _small_config(learners=["cart"], learner_grids={"cart": {"max_depth": [2]}})
        (spec,) = learner_specs(config)
        assert spec.id == "cart" and spec.cv_folds == 5
        assert spec.hyper_grid["max_depth"] == [2]


class TestClassifyZones:
    """Test cases for failure and success zones."""

    def test_internal_failure(self):
        """Test the tabulated CART point lands in the internal failure zone."""
        zones = classify_zones({"rmse": 10.535, "dir": 0.767}, Mode.INTERNAL)
        assert zones.failure and not zones.success

    def test_internal_success(self):
        """Test a dominating point is a success."""
        zones = classify_zones({"rmse": 0.5, "dir": 0.99}, Mode.INTERNAL)
        assert zones.success and not zones.failure

    def test_interaction_success(self):
        """Test the interaction thresholds."""
        assert classify_zones({"rmse": 1.5, "dir": 0.70}, Mode.EXTERNAL_INTERACTION).success
        assert classify_zones({"rmse": 2.0, "dir": 0.55}, Mode.EXTERNAL_INTERACTION).failure

    def test_external_correlated_success_threshold(self):
        """Test external-correlated success allows RMSE up to 2."""
        assert classify_zones({"rmse": 1.5, "dir": 0.96}, Mode.EXTERNAL_CORRELATED).success
        assert not classify_zones({"rmse": 1.5, "dir": 0.96}, Mode.INTERNAL).success

    def test_neither_zone(self):
        """Test middling points are in neither zone."""
        zones = classify_zones({"rmse": 3.0, "dir": 0.9}, Mode.INTERNAL)
        assert not zones.failure and not zones.success

    def test_zone_rectangles(self):
        """Test two rectangles per mode."""
        rects = zone_rectangles()
        assert len(rects) == 6
        assert set(rects["zone"]) == {"failure", "success"}


class TestRunReplication:
    """Test cases for one replication of a scenario."""

    def test_noiseless_ols_exact(self):
        """Test noiseless internal OLS recovers the effect."""
        scenario = ScenarioConfig(n=100, p=3, rho=0.0, mu_delta=0.5, noise_sd=0.0)
        (record,) = run_replication(scenario, 0, [LearnerSpec("ols")])
        assert record.status == "ok"
        assert record.report.rmse < 1e-6
        assert record.report.dir == 1.0
        assert record.n_scored == 50

    def test_null_scenario(self):
        """Test a zero effect leaves R-squared missing."""
        scenario = ScenarioConfig(n=100, p=3, rho=0.0, mu_delta=0.5, zero_effect=True)
        (record,) = run_replication(scenario, 0, [LearnerSpec("ols")])
        assert record.status == "ok"
        assert math.isnan(record.report.r2)

    def test_failure_is_recorded(self):
        """Test a learner error becomes a failed record and other learners still run."""
        scenario = ScenarioConfig(n=60, p=45, rho=0.0, mu_delta=0.5)
        records = run_replication(scenario, 0, [LearnerSpec("ols", cv_folds=5), make_learner_spec("ridge", cv_folds=5)])
        ols, ridge = records
        assert ols.status == "failed"
        assert "treatment arm" in ols.reason
        assert ridge.status == "ok"

    def test_external_correlated(self):
        """Test external validation scores one value per matched pair."""
        scenario = ScenarioConfig(n=100, p=3, rho=0.5, mu_delta=0.5, mode=Mode.EXTERNAL_CORRELATED)
        (record,) = run_replication(scenario, 0, [LearnerSpec("ols", cv_folds=5)])
        assert record.status == "ok"
        assert record.n_scored == 50
        assert np.isfinite(record.obs_rmse)
        assert 0.0 <= record.obs_dir <= 1.0

    def test_external_interaction(self):
        """Test the interaction mode runs on the 63-column expansion."""
        scenario = ScenarioConfig(n=200, p=5, rho=0.0, mu_delta=0.5, mode=Mode.EXTERNAL_INTERACTION)
        (record,) = run_replication(scenario, 0, [make_learner_spec("ridge", cv_folds=5)])
        assert record.status == "ok"
        assert record.n_scored == 100

    def test_replication_is_deterministic(self):
        """Test the same key gives identical metrics."""
        scenario = ScenarioConfig(n=100, p=3, rho=0.5, mu_delta=0.5, master_seed=5)
        specs = [make_learner_spec("lasso", cv_folds=5)]
        a = record_to_row(run_replication(scenario, 1, specs)[0])
        b = record_to_row(run_replication(scenario, 1, specs)[0])
        assert a == b

    def test_dumps(self, tmp_path):
        """Test replication 0 writes population and pair dumps."""
        scenario = ScenarioConfig(n=60, p=2, rho=0.0, mu_delta=0.5, mode=Mode.EXTERNAL_CORRELATED)
        run_replication(scenario, 0, [LearnerSpec("ols", cv_folds=5)], dump_dir=str(tmp_path))
        names = sorted(p.name for p in tmp_path.iterdir())
        assert any(name.startswith("pairs_") for name in names)
        assert any(name.endswith("_validation.csv") for name in names)


class TestRunAll:
    """Test cases for full grid runs."""

    def test_rows_per_learner(self):
        """Test replications x learners rows with canonical columns."""
        result = run_all(_small_config())
        assert len(result.rows) == 4
        assert list(result.rows.columns) == RESULT_COLUMNS
        assert result.rows.groupby("learner").size().to_dict() == {"ols": 2, "ridge": 2}
        assert result.n_failed == 0
        assert len(result.aggregates) == 2

    def test_worker_count_does_not_change_results(self):
        """Test one and two workers give identical sorted rows."""
        config = _small_config(modes=[Mode.INTERNAL, Mode.EXTERNAL_CORRELATED])
        serial = run_all(config, workers=1)
        parallel = run_all(config, workers=2)
        pd.testing.assert_frame_equal(serial.rows, parallel.rows)

    def test_invalid_worker_count(self):
        """Test zero workers is rejected."""
        with pytest.raises(InvalidParameterError, match="workers"):
            run_all(_small_config(), workers=0)

    def test_signal_raises_direction_accuracy(self):
        """Test penalized learners get more directions right at mu 0.5 than at mu 0."""
        config = _small_config(
            learners=["ridge", "lasso", "enet"],
            grid=GridSpec(n=[200], p=[5], rho=[0.5], mu_delta=[0.0, 0.5]),
            replications=20,
        )
        rows = run_all(config).rows
        dir_by_mu = rows[rows["status"] == "ok"].groupby("mu_delta")["dir"].mean()
        assert dir_by_mu[0.5] > dir_by_mu[0.0]

    def test_complexity_run(self):
        """Test the complexity analysis scores the held-out half of one replication."""
        config = _small_config(complexity=ComplexityConfig(enabled=True, n=100, p=3, rho=0.0, mu_delta=0.5))
        table = run_complexity(config)
        assert table.learners == ["ols", "ridge"]
        assert sum(table.counts.values()) == 50

    def test_complexity_disabled(self):
        """Test a disabled complexity analysis returns nothing."""
        assert run_complexity(_small_config()) is None


def _raw_rows():
    rows = []
    for rep, (rmse_value, dir_value) in enumerate([(0.4, 0.99), (0.6, 0.97), (0.8, 0.96)]):
        row = {col: None for col in RESULT_COLUMNS}
        row.update(
            mode="internal", mu_delta=0.5, rho=0.5, p=5, n=750, learner="ridge", replication=rep,
            status="ok", reason="", rmse=rmse_value, mae=rmse_value / 2, r2=0.9, adj_r2=0.89,
            dir=dir_value, alpha=0.0, beta=1.0, alpha_se=0.1, beta_se=0.1,
            alpha_covers=True, beta_covers=rep != 2, zone_failure=0, zone_success=1,
        )
        rows.append(row)
    failed = {col: None for col in RESULT_COLUMNS}
    failed.update(
        mode="internal", mu_delta=0.5, rho=0.5, p=5, n=750, learner="ridge", replication=3,
        status="failed", reason="boom",
    )
    rows.append(failed)
    return results_frame(rows)


class TestAggregate:
    """Test cases for per-scenario aggregation."""

    def test_statistics_exclude_failures(self):
        """Test means and medians use successful rows and failures are counted."""
        agg = aggregate(_raw_rows())
        assert list(agg.columns) == aggregate_columns()
        (row,) = agg.to_dict("records")
        assert row["n_reps"] == 4 and row["n_failed"] == 1
        assert row["rmse_mean"] == pytest.approx(0.6)
        assert row["rmse_median"] == pytest.approx(0.6)
        assert row["dir_min"] == pytest.approx(0.96)
        assert row["beta_coverage"] == pytest.approx(2 / 3)
        assert row["success_count"] == 3
        assert row["zone_success"] == 1 and row["zone_failure"] == 0

    def test_aggregates_match_raw_rows(self):
        """Test aggregate means equal numpy means of the raw rows."""
        rows = _raw_rows()
        agg = aggregate(rows)
        ok = rows[rows["status"] == "ok"]
        assert agg.loc[0, "mae_mean"] == np.mean(ok["mae"].to_numpy(dtype=float))

    def test_summary_table_layout(self):
        """Test the per-mode summary lists quartiles and NA counts."""
        table = summary_table(aggregate(_raw_rows()), Mode.INTERNAL)
        assert table["stat"].tolist() == ["Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max.", "NA's"]
        assert list(table.columns) == ["stat", "RMSE", "adjRsquared", "MAE", "DIR", "alpha", "beta"]
        assert table.loc[3, "RMSE"] == pytest.approx(0.6)
        assert table.loc[6, "RMSE"] == 0.0
