"""
Benchmark grid execution.

Each (scenario, replication) pair is an independent task. Its random streams
are derived from the master seed and the task key, and its BLAS calls run on a
single thread, so results do not depend on the worker count or on scheduling.
"""

import itertools
import os
from collections.abc import Mapping
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from pitelens.core.learners import LearnerSpec, make_learner_spec
from pitelens.core.matcher import dump_pairs, match_population, pairwise_effects
from pitelens.core.metrics import complexity_table, direction, rmse, score
from pitelens.core.pite_engine import (
    fit_pair,
    internal_split,
    predict_arms,
    predict_pite,
    split_by_arm,
)
from pitelens.core.simgen import dump_population, generate_population
from pitelens.models.config import (
    PUBLISHED_INTERACTION_N,
    PUBLISHED_INTERACTION_P,
    PUBLISHED_MU_DELTA,
    PUBLISHED_N,
    PUBLISHED_P,
    PUBLISHED_RHO,
    Mode,
    RunConfig,
    ScenarioConfig,
)
from pitelens.models.records import ComplexityTable, GridResult, ReplicationRecord, ZoneFlags
from pitelens.utils.errors import InvalidParameterError
from pitelens.utils.logger import logger
from pitelens.utils.report_utils import RESULT_COLUMNS, RESULT_KEY_COLUMNS
from pitelens.utils.rng import derive_rng

SCENARIO_COLUMNS = ["mode", "mu_delta", "rho", "p", "n"]
GROUP_COLUMNS = SCENARIO_COLUMNS + ["learner"]
AGGREGATED_METRICS = ["rmse", "mae", "r2", "adj_r2", "dir", "alpha", "beta"]

# mode -> (failure rmse >=, failure dir <=, success rmse <, success dir >)
ZONE_THRESHOLDS = {
    Mode.INTERNAL: (5.0, 0.8, 1.0, 0.95),
    Mode.EXTERNAL_CORRELATED: (5.0, 0.8, 2.0, 0.95),
    Mode.EXTERNAL_INTERACTION: (2.0, 0.55, 1.6, 0.65),
}

SUMMARY_COLUMNS = {
    "RMSE": "rmse_mean",
    "adjRsquared": "adj_r2_mean",
    "MAE": "mae_mean",
    "DIR": "dir_mean",
    "alpha": "alpha_coverage",
    "beta": "beta_coverage",
}
SUMMARY_STATS = ["Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max.", "NA's"]


def _check_published_values(name: str, values: Sequence, allowed: Sequence) -> None:
    bad = [v for v in values if v not in allowed]
    if bad:
        raise InvalidParameterError(f"published preset {name} must be drawn from {list(allowed)}, got {bad}")


def build_grid(config: RunConfig) -> List[ScenarioConfig]:
    """
    Enumerate the scenarios of a run, sorted by (mode, mu_delta, rho, p, n).

    Internal and external-correlated modes use mu_delta x rho x p x n;
    the interaction mode uses mu_delta x interaction_p x interaction_n with rho = 0.
    """
    grid = config.grid.resolved()
    if config.preset == "published":
        _check_published_values("n", grid.n, PUBLISHED_N)
        _check_published_values("p", grid.p, PUBLISHED_P)
        _check_published_values("rho", grid.rho, PUBLISHED_RHO)
        _check_published_values("mu_delta", grid.mu_delta, PUBLISHED_MU_DELTA)
        _check_published_values("interaction_n", grid.interaction_n, PUBLISHED_INTERACTION_N)
        _check_published_values("interaction_p", grid.interaction_p, PUBLISHED_INTERACTION_P)

    common = dict(
        replications=config.replications,
        master_seed=config.master_seed,
        learners=tuple(config.learners),
        cv_folds=config.cv_folds,
    )
    scenarios = []
    for mode in config.modes:
        mode = Mode(mode)
        if mode is Mode.EXTERNAL_INTERACTION:
            cells = itertools.product(grid.mu_delta, [0.0], grid.interaction_p, grid.interaction_n)
        else:
            cells = itertools.product(grid.mu_delta, grid.rho, grid.p, grid.n)
        for mu, rho, p, n in cells:
            try:
                scenarios.append(
                    ScenarioConfig(n=int(n), p=int(p), rho=float(rho), mu_delta=float(mu), mode=mode, **common)
                )
            except ValueError as e:
                raise InvalidParameterError(f"invalid grid cell {mode.value} mu={mu} rho={rho} p={p} n={n}: {e}")
    return sorted(scenarios, key=lambda s: s.key)


def learner_specs(config: RunConfig) -> List[LearnerSpec]:
    return [
        make_learner_spec(lid, config.learner_grids.get(lid), cv_folds=config.cv_folds)
        for lid in config.learners
    ]


def scenario_slug(scenario: ScenarioConfig) -> str:
    """File-name friendly scenario label."""
    return (
        f"{scenario.mode.value}_mu{scenario.mu_delta:g}_rho{scenario.rho:g}"
        f"_p{scenario.p}_n{scenario.n}"
    )


def classify_zones(report: Any, mode: Mode) -> ZoneFlags:
    """
    Failure and success zone membership of a (rmse, dir) point.

    report may be a MetricReport, a mapping with "rmse" and "dir" keys, or any
    object with rmse and dir attributes.
    """
    if isinstance(report, Mapping):
        rmse_value, dir_value = float(report["rmse"]), float(report["dir"])
    else:
        rmse_value, dir_value = float(report.rmse), float(report.dir)
    fail_rmse, fail_dir, ok_rmse, ok_dir = ZONE_THRESHOLDS[Mode(mode)]
    failure = rmse_value >= fail_rmse and dir_value <= fail_dir
    success = rmse_value < ok_rmse and dir_value > ok_dir
    assert not (failure and success), "zone thresholds overlap"
    return ZoneFlags(failure=failure, success=success)


def zone_rectangles() -> pd.DataFrame:
    """Zone boundaries per mode in (rmse, dir) space, for plotting."""
    rows = []
    for mode, (fail_rmse, fail_dir, ok_rmse, ok_dir) in ZONE_THRESHOLDS.items():
        rows.append(
            {"mode": mode.value, "zone": "failure", "rmse_min": fail_rmse, "rmse_max": np.inf, "dir_min": 0.0, "dir_max": fail_dir}
        )
        rows.append(
            {"mode": mode.value, "zone": "success", "rmse_min": 0.0, "rmse_max": ok_rmse, "dir_min": ok_dir, "dir_max": 1.0}
        )
    return pd.DataFrame(rows)


def run_replication(
    scenario: ScenarioConfig,
    rep_index: int,
    learners: Sequence[LearnerSpec],
    dump_dir: Optional[str] = None,
) -> List[ReplicationRecord]:
    """
    Run every learner on one replication of a scenario.

    Internal mode splits one population 50:50 and scores the predicted PITE
    against the true effect on the held-out half. External modes train on one
    population, generate an independent validation population (new covariates,
    effect coefficients, assignment and noise; shared baseline coefficients),
    match it, and score pair-level predictions against the treated subject's
    true effect, recording the observed pair difference alongside.
    """
    seed, sid = scenario.master_seed, scenario.scenario_id
    dump = dump_dir is not None and rep_index == 0
    slug = scenario_slug(scenario)

    if scenario.mode is Mode.INTERNAL:
        pop = generate_population(scenario, derive_rng(seed, sid, rep_index, "population"))
        train, evaluation = internal_split(pop, derive_rng(seed, sid, rep_index, "split"))
        pairs = None
        if dump:
            dump_population(pop, os.path.join(dump_dir, f"population_{slug}.csv"))
    else:
        train = generate_population(scenario, derive_rng(seed, sid, rep_index, "train"))
        evaluation = generate_population(
            scenario,
            derive_rng(seed, sid, rep_index, "validation"),
            beta0=train.beta0,
            subset=train.subset,
        )
        pairs = match_population(evaluation)
        if dump:
            dump_population(train, os.path.join(dump_dir, f"population_{slug}_train.csv"))
            dump_population(evaluation, os.path.join(dump_dir, f"population_{slug}_validation.csv"))

    D0, D1 = split_by_arm(train)
    records = []
    for spec in learners:
        base = dict(
            mode=scenario.mode.value,
            mu_delta=scenario.mu_delta,
            rho=scenario.rho,
            p=scenario.p,
            n=scenario.n,
            learner=spec.id,
            replication=rep_index,
        )
        try:
            pair = fit_pair(spec, D0, D1, derive_rng(seed, sid, rep_index, "fit", spec.id))
            if pairs is None:
                est = predict_pite(pair, evaluation.X)
                report = score(est, evaluation.delta_true)
                records.append(ReplicationRecord(status="ok", report=report, n_scored=est.size, **base))
            else:
                pred_t, pred_c = predict_arms(pair, evaluation.X)
                effects = pairwise_effects(
                    pairs, evaluation.y_obs, pred_t, pred_c, evaluation.delta_true
                )
                report = score(effects.predicted, effects.truth)
                obs_dir, _ = direction(effects.predicted, effects.observed)
                records.append(
                    ReplicationRecord(
                        status="ok",
                        report=report,
                        obs_rmse=rmse(effects.predicted, effects.observed),
                        obs_dir=obs_dir,
                        n_scored=len(pairs),
                        **base,
                    )
                )
                if dump:
                    dump_pairs(pairs, effects, os.path.join(dump_dir, f"pairs_{slug}_{spec.id}.csv"))
        except Exception as e:
            logger.warning(f"{sid} rep {rep_index}: learner {spec.id} failed: {e}")
            records.append(ReplicationRecord(status="failed", reason=str(e), **base))
    return records


def record_to_row(record: ReplicationRecord) -> Dict[str, Any]:
    """Flatten a record into a results.csv row."""
    row: Dict[str, Any] = {col: None for col in RESULT_COLUMNS}
    row.update(
        mode=record.mode,
        mu_delta=record.mu_delta,
        rho=record.rho,
        p=record.p,
        n=record.n,
        learner=record.learner,
        replication=record.replication,
        status=record.status,
        reason=record.reason,
        obs_rmse=record.obs_rmse,
        obs_dir=record.obs_dir,
        n_scored=record.n_scored,
    )
    if record.report is not None:
        row.update(record.report.to_dict())
        zones = classify_zones(record.report, Mode(record.mode))
        row["zone_failure"] = int(zones.failure)
        row["zone_success"] = int(zones.success)
    else:
        for metric in AGGREGATED_METRICS + ["alpha_se", "beta_se"]:
            row[metric] = float("nan")
    return row


def _run_task(
    scenario: ScenarioConfig,
    rep_index: int,
    specs: Sequence[LearnerSpec],
    dump_dir: Optional[str],
) -> List[Dict[str, Any]]:
    with threadpool_limits(limits=1):
        records = run_replication(scenario, rep_index, specs, dump_dir)
    return [record_to_row(r) for r in records]


def results_frame(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """Rows in canonical column order, sorted by the result key."""
    df = pd.DataFrame(list(rows), columns=RESULT_COLUMNS)
    df = df.sort_values(RESULT_KEY_COLUMNS, kind="mergesort").reset_index(drop=True)
    return df


def _stats(values: np.ndarray) -> Dict[str, float]:
    values = values[~np.isnan(values)]
    if values.size == 0:
        nan = float("nan")
        return {"mean": nan, "median": nan, "min": nan, "max": nan}
    return {
        "mean": float(np.mean(values)),
        "median": float(np.median(values)),
        "min": float(np.min(values)),
        "max": float(np.max(values)),
    }


def _coverage(series: pd.Series) -> float:
    values = series.dropna().astype(float).to_numpy()
    return float(np.mean(values)) if values.size else float("nan")


def aggregate(rows: pd.DataFrame) -> pd.DataFrame:
    """
    Per (scenario, learner) summary of the replication rows.

    Missing values (failed fits, undefined r2 or calibration) are excluded from
    every statistic and counted instead. Zone flags use the mean rmse and dir.
    """
    out = []
    for key, group in rows.groupby(GROUP_COLUMNS, sort=True):
        ok = group[group["status"] == "ok"]
        agg: Dict[str, Any] = dict(zip(GROUP_COLUMNS, key))
        agg["n_reps"] = int(len(group))
        agg["n_failed"] = int(len(group) - len(ok))
        agg["n_r2_missing"] = int(ok["r2"].isna().sum())
        for metric in AGGREGATED_METRICS:
            for stat, value in _stats(ok[metric].to_numpy(dtype=float)).items():
                agg[f"{metric}_{stat}"] = value
        agg["alpha_coverage"] = _coverage(ok["alpha_covers"])
        agg["beta_coverage"] = _coverage(ok["beta_covers"])
        agg["success_count"] = int((ok["zone_success"].astype(float) == 1).sum())
        agg["failure_count"] = int((ok["zone_failure"].astype(float) == 1).sum())
        if np.isfinite(agg["rmse_mean"]) and np.isfinite(agg["dir_mean"]):
            zones = classify_zones({"rmse": agg["rmse_mean"], "dir": agg["dir_mean"]}, Mode(agg["mode"]))
            agg["zone_failure"] = int(zones.failure)
            agg["zone_success"] = int(zones.success)
        else:
            agg["zone_failure"] = None
            agg["zone_success"] = None
        out.append(agg)
    return pd.DataFrame(out, columns=aggregate_columns())


def aggregate_columns() -> List[str]:
    cols = GROUP_COLUMNS + ["n_reps", "n_failed", "n_r2_missing"]
    for metric in AGGREGATED_METRICS:
        cols += [f"{metric}_{stat}" for stat in ("mean", "median", "min", "max")]
    cols += ["alpha_coverage", "beta_coverage", "success_count", "failure_count", "zone_failure", "zone_success"]
    return cols


def summary_table(aggregates: pd.DataFrame, mode: Mode) -> pd.DataFrame:
    """Min / quartiles / mean / max / NA count of the headline metrics across one mode's rows."""
    subset = aggregates[aggregates["mode"] == Mode(mode).value]
    table: Dict[str, List[float]] = {"stat": list(SUMMARY_STATS)}
    for label, column in SUMMARY_COLUMNS.items():
        values = subset[column].to_numpy(dtype=float)
        finite = values[~np.isnan(values)]
        n_missing = float(values.size - finite.size)
        if finite.size == 0:
            table[label] = [float("nan")] * 6 + [n_missing]
            continue
        q1, med, q3 = np.quantile(finite, [0.25, 0.5, 0.75])
        table[label] = [
            float(finite.min()),
            float(q1),
            float(med),
            float(np.mean(finite)),
            float(q3),
            float(finite.max()),
            n_missing,
        ]
    return pd.DataFrame(table)


def run_complexity(
    config: RunConfig, specs: Optional[Sequence[LearnerSpec]] = None
) -> Optional[ComplexityTable]:
    """Complexity classes from one replication of the configured representative scenario."""
    if not config.complexity.enabled:
        return None
    specs = list(specs) if specs is not None else learner_specs(config)
    scenario = config.complexity.scenario(config)
    with threadpool_limits(limits=1):
        records = run_replication(scenario, 0, specs)
    ok = [r for r in records if r.report is not None]
    if not ok:
        logger.warning("complexity analysis skipped: no learner succeeded")
        return None
    flags = np.vstack([r.report.dir_flags for r in ok])
    return complexity_table(flags, [r.learner for r in ok])


def run_all(config: RunConfig, workers: Optional[int] = None, dump_dir: Optional[str] = None) -> GridResult:
    """
    Run every (scenario, replication) task of a config.

    Args:
        config: Validated run configuration
        workers: Parallel worker processes (defaults to config.workers)
        dump_dir: Write population and pair dumps for replication 0 here

    Returns:
        GridResult with canonically sorted rows and aggregates
    """
    n_jobs = workers if workers is not None else config.workers
    if n_jobs < 1:
        raise InvalidParameterError(f"workers must be >= 1, got {n_jobs}")

    scenarios = build_grid(config)
    specs = learner_specs(config)
    tasks = [(s, r) for s in scenarios for r in range(config.replications)]
    logger.info(
        f"Running {len(scenarios)} scenarios x {config.replications} replications "
        f"x {len(specs)} learners on {n_jobs} worker(s)"
    )

    chunks = Parallel(n_jobs=n_jobs)(delayed(_run_task)(s, r, specs, dump_dir) for s, r in tasks)
    rows = results_frame([row for chunk in chunks for row in chunk])
    n_failed = int((rows["status"] == "failed").sum())
    if n_failed:
        logger.warning(f"{n_failed} learner fits failed; recorded as failed rows")

    return GridResult(rows=rows, aggregates=aggregate(rows), complexity=run_complexity(config, specs))
