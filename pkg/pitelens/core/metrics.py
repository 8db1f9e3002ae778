"""
Scoring and diagnostic mathematics for PITE estimates.

Covers RMSE, direction agreement, MAE, R-squared, calibration lines, the
Monte Carlo error decomposition of a two-arm estimator, the arm-level R-squared
and MAE identities, and the per-patient complexity-class consensus table.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from pitelens.models.records import (
    CalibrationDecomposition,
    CalibrationResult,
    ComplexityTable,
    DecompositionReport,
    MaeBounds,
    MetricReport,
    R2Components,
)
from pitelens.utils.errors import IdentityViolationError, InvalidParameterError

CI_LEVEL = 0.95
# Coverage checks tolerate round-off when the interval collapses to a point
COVER_TOL = 1e-12

COMPLEXITY_CLASSES = (
    ["0%"] + [f"({10 * k}-{10 * (k + 1)}]" for k in range(9)] + ["(90-100)", "100%"]
)


def _pair(est, truth) -> Tuple[np.ndarray, np.ndarray]:
    est = np.asarray(est, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if est.shape != truth.shape:
        raise InvalidParameterError(f"length mismatch: est {est.size}, truth {truth.size}")
    if est.size == 0:
        raise InvalidParameterError("metrics need at least one value")
    if not (np.all(np.isfinite(est)) and np.all(np.isfinite(truth))):
        raise InvalidParameterError("metrics need finite values")
    return est, truth


def rmse(est, truth) -> float:
    est, truth = _pair(est, truth)
    return float(np.sqrt(np.mean((est - truth) ** 2)))


def mae(est, truth) -> float:
    est, truth = _pair(est, truth)
    return float(np.mean(np.abs(est - truth)))


def direction(est, truth) -> Tuple[float, np.ndarray]:
    """Share of subjects whose estimated and true effect signs agree (sign(0) = 0)."""
    est, truth = _pair(est, truth)
    flags = (np.sign(est) == np.sign(truth)).astype(np.int64)
    return float(flags.mean()), flags


def r2(est, truth) -> float:
    """1 - SSE / SS of the centered truth; nan when the truth is constant."""
    est, truth = _pair(est, truth)
    ss_tot = np.sum((truth - truth.mean()) ** 2)
    if ss_tot == 0:
        return float("nan")
    return float(1.0 - np.sum((truth - est) ** 2) / ss_tot)


def _nan_calibration() -> CalibrationResult:
    nan = float("nan")
    return CalibrationResult(
        alpha=nan,
        beta=nan,
        alpha_se=nan,
        beta_se=nan,
        alpha_covers=None,
        beta_covers=None,
        r2=nan,
        adj_r2=nan,
    )


def calibration(est, truth, level: float = CI_LEVEL) -> CalibrationResult:
    """
    Regress truth on est: truth = alpha + beta * est + noise.

    Returns the fitted line with standard errors, t-interval coverage of
    alpha = 0 and beta = 1, and the regression's (adjusted) R-squared. A
    constant est leaves everything missing.
    """
    est, truth = _pair(est, truth)
    m = est.size
    if m < 3:
        raise InvalidParameterError(f"calibration needs at least 3 values, got {m}")

    est_mean = est.mean()
    truth_mean = truth.mean()
    xc = est - est_mean
    sxx = float(np.sum(xc * xc))
    if sxx == 0:
        return _nan_calibration()

    beta = float(np.sum(xc * (truth - truth_mean)) / sxx)
    alpha = float(truth_mean - beta * est_mean)
    resid = truth - (alpha + beta * est)
    ssr = float(np.sum(resid**2))
    dof = m - 2
    s2 = ssr / dof
    beta_se = float(np.sqrt(s2 / sxx))
    alpha_se = float(np.sqrt(s2 * (1.0 / m + est_mean**2 / sxx)))

    tq = float(stats.t.ppf(0.5 + level / 2.0, dof))
    alpha_covers = bool(abs(alpha) <= tq * alpha_se + COVER_TOL)
    beta_covers = bool(abs(beta - 1.0) <= tq * beta_se + COVER_TOL)

    sst = float(np.sum((truth - truth_mean) ** 2))
    if sst == 0:
        r2_cal = adj = float("nan")
    else:
        r2_cal = 1.0 - ssr / sst
        adj = 1.0 - (1.0 - r2_cal) * (m - 1) / dof

    return CalibrationResult(
        alpha=alpha,
        beta=beta,
        alpha_se=alpha_se,
        beta_se=beta_se,
        alpha_covers=alpha_covers,
        beta_covers=beta_covers,
        r2=float(r2_cal),
        adj_r2=float(adj),
    )


def score(est, truth) -> MetricReport:
    """Full metric report for one PITE vector."""
    est, truth = _pair(est, truth)
    dir_value, flags = direction(est, truth)
    cal = calibration(est, truth) if est.size >= 3 else _nan_calibration()
    return MetricReport(
        rmse=rmse(est, truth),
        mae=mae(est, truth),
        r2=r2(est, truth),
        dir=dir_value,
        calibration=cal,
        dir_flags=flags,
    )


def r2_decompose(e1, e0, eps1, eps0) -> R2Components:
    """
    R-squared of a PITE estimate from its arm-level pieces.

    e1, e0 are arm prediction errors (f_hat - f); eps1, eps0 the arm truths. The
    implied PITE truth is eps1 - eps0 and its estimate adds e1 - e0, so

        R2 = 1 - (MSE1 + MSE0 - 2 Cov_e) / (VAR1 + VAR0 - 2 Cov_eps)

    with raw error moments and centered truth moments.
    """
    arrays = [np.asarray(a, dtype=float).ravel() for a in (e1, e0, eps1, eps0)]
    if len({a.size for a in arrays}) != 1 or arrays[0].size == 0:
        raise InvalidParameterError("r2_decompose needs four non-empty vectors of equal length")
    e1, e0, eps1, eps0 = arrays
    c1 = eps1 - eps1.mean()
    c0 = eps0 - eps0.mean()

    mse_1 = float(np.mean(e1 * e1))
    mse_0 = float(np.mean(e0 * e0))
    cov_e = float(np.mean(e1 * e0))
    var_1 = float(np.mean(c1 * c1))
    var_0 = float(np.mean(c0 * c0))
    cov_eps = float(np.mean(c1 * c0))

    num = mse_1 + mse_0 - 2.0 * cov_e
    den = var_1 + var_0 - 2.0 * cov_eps
    value = float("nan") if den == 0 else 1.0 - num / den
    return R2Components(
        mse_1=mse_1,
        mse_0=mse_0,
        cov_e=cov_e,
        var_1=var_1,
        var_0=var_0,
        cov_eps=cov_eps,
        r2=value,
    )


def r2_decompose_from_predictions(f1, f1_hat, f0, f0_hat) -> R2Components:
    """r2_decompose from arm truths and arm predictions."""
    f1 = np.asarray(f1, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    return r2_decompose(
        np.asarray(f1_hat, dtype=float) - f1,
        np.asarray(f0_hat, dtype=float) - f0,
        f1 - f1.mean(),
        f0 - f0.mean(),
    )


def mae_bounds(e1, e0) -> MaeBounds:
    """
    Triangle-inequality bounds on the PITE MAE from the arm MAEs.

    Raises:
        IdentityViolationError: The PITE MAE falls outside the bounds
    """
    e1 = np.asarray(e1, dtype=float).ravel()
    e0 = np.asarray(e0, dtype=float).ravel()
    if e1.shape != e0.shape or e1.size == 0:
        raise InvalidParameterError("mae_bounds needs two non-empty vectors of equal length")
    mae_1 = float(np.mean(np.abs(e1)))
    mae_0 = float(np.mean(np.abs(e0)))
    mae_pite = float(np.mean(np.abs(e1 - e0)))
    lower = abs(mae_1 - mae_0)
    upper = mae_1 + mae_0
    slack = 1e-12 * max(1.0, upper)
    if not (lower - slack <= mae_pite <= upper + slack):
        raise IdentityViolationError(
            "mae_bounds", f"PITE MAE {mae_pite!r} outside [{lower!r}, {upper!r}]"
        )
    return MaeBounds(lower=lower, upper=upper, mae_pite=mae_pite)


def prop1_decompose(f_t_hat, f_c_hat, f_t_true, f_c_true) -> DecompositionReport:
    """
    Monte Carlo decomposition of the PITE mean squared error.

    For independently fitted arms,

        MSE_PITE = MSE_t + MSE_c - 2 bias_t bias_c

    Args:
        f_t_hat: R x m treatment-arm predictions over R replications
        f_c_hat: R x m control-arm predictions
        f_t_true: m true treatment-arm means
        f_c_true: m true control-arm means

    Returns:
        DecompositionReport with both sides, their gap and its standard error,
        and the variance identity Var(PITE) = Var_t + Var_c - 2 Cov
    """
    f_t_hat = np.atleast_2d(np.asarray(f_t_hat, dtype=float))
    f_c_hat = np.atleast_2d(np.asarray(f_c_hat, dtype=float))
    f_t_true = np.asarray(f_t_true, dtype=float).ravel()
    f_c_true = np.asarray(f_c_true, dtype=float).ravel()
    if f_t_hat.shape != f_c_hat.shape:
        raise InvalidParameterError(f"arm shapes differ: {f_t_hat.shape} vs {f_c_hat.shape}")
    R, m = f_t_hat.shape
    if R < 2:
        raise InvalidParameterError(f"decomposition needs at least 2 replications, got {R}")
    if f_t_true.size != m or f_c_true.size != m:
        raise InvalidParameterError("truth vectors must match the prediction width")

    e_t = f_t_hat - f_t_true
    e_c = f_c_hat - f_c_true
    e = e_t - e_c

    mse_pite = float(np.mean(e * e))
    mse_t = float(np.mean(e_t * e_t))
    mse_c = float(np.mean(e_c * e_c))
    bias_t = float(np.mean(e_t))
    bias_c = float(np.mean(e_c))

    # The gap equals -2 times the pooled error covariance; per-replication
    # terms give its Monte Carlo standard error.
    g = -2.0 * np.mean((e_t - bias_t) * (e_c - bias_c), axis=1)
    gap = mse_pite - (mse_t + mse_c - 2.0 * bias_t * bias_c)
    gap_se = float(np.std(g, ddof=1) / np.sqrt(R))

    pite = f_t_hat - f_c_hat
    var_t = float(np.mean(np.var(f_t_hat, axis=0, ddof=1)))
    var_c = float(np.mean(np.var(f_c_hat, axis=0, ddof=1)))
    var_pite = float(np.mean(np.var(pite, axis=0, ddof=1)))
    cross = np.mean(
        (f_t_hat - f_t_hat.mean(axis=0)) * (f_c_hat - f_c_hat.mean(axis=0)), axis=1
    )
    cov_tc = float(np.sum(cross) / (R - 1))
    cov_tc_se = float(np.std(cross, ddof=1) * R / (R - 1) / np.sqrt(R))

    truth_t = np.broadcast_to(f_t_true, f_t_hat.shape).ravel()
    truth_c = np.broadcast_to(f_c_true, f_c_hat.shape).ravel()
    return DecompositionReport(
        mse_pite=mse_pite,
        mse_t=mse_t,
        mse_c=mse_c,
        bias_t=bias_t,
        bias_c=bias_c,
        gap=float(gap),
        gap_se=gap_se,
        var_pite=var_pite,
        var_t=var_t,
        var_c=var_c,
        cov_tc=cov_tc,
        cov_tc_se=cov_tc_se,
        replications=R,
        r2=r2_decompose_from_predictions(truth_t, f_t_hat.ravel(), truth_c, f_c_hat.ravel()),
        mae=mae_bounds(e_t.ravel(), e_c.ravel()),
    )


def calibration_decompose(f1, f1_hat, f0, f0_hat, tol: float = 1e-8) -> CalibrationDecomposition:
    """
    Arm calibration lines f = alpha + beta * f_hat and the PITE line.

    When both arms share a slope, the PITE intercept equals alpha_t - alpha_c;
    intercept_gap reports how far it is from that.
    """
    cal_t = calibration(f1_hat, f1)
    cal_c = calibration(f0_hat, f0)
    cal_pite = calibration(
        np.asarray(f1_hat, dtype=float) - np.asarray(f0_hat, dtype=float),
        np.asarray(f1, dtype=float) - np.asarray(f0, dtype=float),
    )
    slopes_match = bool(abs(cal_t.beta - cal_c.beta) <= tol)
    gap = abs(cal_pite.alpha - (cal_t.alpha - cal_c.alpha)) if slopes_match else None
    return CalibrationDecomposition(
        alpha_t=cal_t.alpha,
        beta_t=cal_t.beta,
        alpha_c=cal_c.alpha,
        beta_c=cal_c.beta,
        alpha_pite=cal_pite.alpha,
        beta_pite=cal_pite.beta,
        slopes_match=slopes_match,
        intercept_gap=gap,
    )


def complexity_class(correct: int, n_learners: int) -> str:
    """Class label when `correct` of `n_learners` learners got the direction right."""
    if correct == 0:
        return "0%"
    if correct == n_learners:
        return "100%"
    if 10 * correct > 9 * n_learners:
        return "(90-100)"
    k = (10 * correct + n_learners - 1) // n_learners
    return f"({10 * (k - 1)}-{10 * k}]"


def complexity_table(dir_flags, learners: Optional[Sequence[str]] = None) -> ComplexityTable:
    """
    Per-patient consensus C_i and per-learner accuracy inside each complexity class.

    Args:
        dir_flags: K x m matrix of 0/1 direction flags (learners x patients)
        learners: Optional learner names (default "learner_k")

    Returns:
        ComplexityTable; accuracy is a percentage, nan for empty classes
    """
    flags = np.asarray(dir_flags)
    if flags.ndim != 2 or flags.size == 0:
        raise InvalidParameterError("complexity_table needs a non-empty K x m flag matrix")
    flags = flags.astype(np.int64)
    K, m = flags.shape
    names: List[str] = list(learners) if learners is not None else [f"learner_{k}" for k in range(K)]
    if len(names) != K:
        raise InvalidParameterError(f"{len(names)} learner names for {K} flag rows")

    correct = flags.sum(axis=0)
    labels = [complexity_class(int(c), K) for c in correct]
    label_arr = np.asarray(labels)
    counts = {cls: int(np.sum(label_arr == cls)) for cls in COMPLEXITY_CLASSES}

    accuracy = {}
    for k, name in enumerate(names):
        per_class = {}
        for cls in COMPLEXITY_CLASSES:
            members = label_arr == cls
            per_class[cls] = float(100.0 * flags[k, members].mean()) if members.any() else float("nan")
        accuracy[name] = per_class

    return ComplexityTable(
        consensus=correct / K,
        labels=labels,
        counts=counts,
        accuracy=accuracy,
        learners=names,
    )
