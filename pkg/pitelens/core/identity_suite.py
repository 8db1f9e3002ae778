"""
Self-checks of the metric identities.

Each suite draws random instances, evaluates an identity both directly and
through the decomposition in pitelens.core.metrics, and reports the largest
gap against its tolerance.
"""

from typing import Callable, Dict, List, Optional

import numpy as np

from pitelens.core.metrics import (
    calibration,
    calibration_decompose,
    mae_bounds,
    prop1_decompose,
    r2_decompose_from_predictions,
)
from pitelens.models.records import IdentityCheck
from pitelens.utils.errors import IdentityViolationError, InvalidParameterError
from pitelens.utils.logger import logger
from pitelens.utils.rng import derive_rng

R2_TOL = 1e-10
CALIBRATION_TOL = 1e-12
INTERCEPT_TOL = 1e-10
MAE_TOL = 1e-12

# (bias_t, bias_c) of the synthetic arm predictors
PROP1_CASES = [(0.0, 0.0), (1.0, -1.0), (0.5, 0.5)]

FAULTS = ("prop1",)


def _check(name: str, gap: float, tolerance: float, detail: str = "") -> IdentityCheck:
    passed = bool(np.isfinite(gap) and gap <= tolerance)
    if not passed:
        logger.warning(f"identity {name} failed: gap {gap:.3g} > tolerance {tolerance:.3g}")
    return IdentityCheck(name=name, gap=float(gap), tolerance=float(tolerance), passed=passed, detail=detail)


def check_r2_reconstruction(rng: np.random.Generator, instances: int = 1000, m: int = 100) -> IdentityCheck:
    """PITE R-squared from arm-level moments against the direct formula."""
    worst = 0.0
    for _ in range(instances):
        f1 = rng.normal(size=m)
        f0 = rng.normal(size=m)
        f1_hat = f1 + rng.normal(scale=rng.uniform(0.1, 2.0), size=m) + rng.normal()
        f0_hat = f0 + rng.normal(scale=rng.uniform(0.1, 2.0), size=m) + rng.normal()
        truth = f1 - f0
        est = f1_hat - f0_hat
        direct = 1.0 - np.sum((est - truth) ** 2) / np.sum((truth - truth.mean()) ** 2)
        parts = r2_decompose_from_predictions(f1, f1_hat, f0, f0_hat)
        worst = max(worst, abs(parts.r2 - direct))
    return _check("r2_reconstruction", worst, R2_TOL, f"{instances} instances, m={m}")


def check_mae_bounds(rng: np.random.Generator, instances: int = 1000, m: int = 100) -> IdentityCheck:
    """Triangle-inequality bounds on the PITE MAE."""
    worst = 0.0
    for _ in range(instances):
        e1 = rng.standard_t(df=3, size=m) * rng.uniform(0.1, 3.0) + rng.normal()
        e0 = rng.standard_t(df=3, size=m) * rng.uniform(0.1, 3.0) + rng.normal()
        try:
            bounds = mae_bounds(e1, e0)
        except IdentityViolationError as e:
            logger.warning(str(e))
            return _check("mae_bounds", float("inf"), MAE_TOL, str(e))
        worst = max(worst, bounds.lower - bounds.mae_pite, bounds.mae_pite - bounds.upper)
    return _check("mae_bounds", worst, MAE_TOL, f"{instances} instances, m={m}; gap is the largest bound excess")


def check_calibration_identity(rng: np.random.Generator, instances: int = 1000, m: int = 100) -> IdentityCheck:
    """Calibrating an estimate against itself gives alpha = 0 and beta = 1."""
    worst = 0.0
    for _ in range(instances):
        est = rng.normal(loc=rng.normal(), scale=rng.uniform(0.1, 3.0), size=m)
        cal = calibration(est, est)
        worst = max(worst, abs(cal.alpha), abs(cal.beta - 1.0))
    return _check("calibration_identity", worst, CALIBRATION_TOL, f"{instances} instances, m={m}")


def check_calibration_decomposition(
    rng: np.random.Generator, instances: int = 200, m: int = 100
) -> IdentityCheck:
    """PITE intercept equals alpha_t - alpha_c when both arms are affine in a common slope."""
    worst = 0.0
    for _ in range(instances):
        slope = rng.uniform(0.5, 2.0)
        f1_hat = rng.normal(size=m)
        f0_hat = rng.normal(size=m)
        f1 = rng.normal() + slope * f1_hat
        f0 = rng.normal() + slope * f0_hat
        dec = calibration_decompose(f1, f1_hat, f0, f0_hat)
        if not dec.slopes_match or dec.intercept_gap is None:
            return _check("calibration_decomposition", float("inf"), INTERCEPT_TOL, "arm slopes differ")
        worst = max(worst, dec.intercept_gap)
    return _check("calibration_decomposition", worst, INTERCEPT_TOL, f"{instances} instances, m={m}")


def check_prop1(
    rng: np.random.Generator,
    bias_t: float,
    bias_c: float,
    replications: int = 10_000,
    m: int = 50,
    cross_sign: float = -1.0,
) -> List[IdentityCheck]:
    """
    Monte Carlo error decomposition with independent arm predictors of known bias.

    cross_sign is the sign of the 2 * bias_t * bias_c term; anything other than
    -1 is a deliberately broken formula used to check that the suite can fail.
    """
    f_t = rng.normal(size=m)
    f_c = rng.normal(size=m)
    sd_t, sd_c = rng.uniform(0.5, 1.5, size=2)
    f_t_hat = f_t + bias_t + sd_t * rng.standard_normal((replications, m))
    f_c_hat = f_c + bias_c + sd_c * rng.standard_normal((replications, m))

    report = prop1_decompose(f_t_hat, f_c_hat, f_t, f_c)
    predicted = report.mse_t + report.mse_c + cross_sign * 2.0 * report.bias_t * report.bias_c
    tag = f"bt={bias_t:g},bc={bias_c:g}"
    mse_check = _check(
        f"prop1[{tag}]",
        abs(report.mse_pite - predicted),
        max(3.0 * report.gap_se, 1e-12),
        f"MSE_PITE={report.mse_pite:.6g}, predicted={predicted:.6g}, R={replications}",
    )
    cov_check = _check(
        f"variance_identity[{tag}]",
        abs(report.cov_tc),
        max(3.0 * report.cov_tc_se, 1e-12),
        f"Var_PITE={report.var_pite:.6g}, Var_t+Var_c={report.var_t + report.var_c:.6g}",
    )
    return [mse_check, cov_check]


def run_identity_suite(
    master_seed: int = 0,
    inject_fault: Optional[str] = None,
    instances: int = 1000,
    m: int = 100,
    mc_replications: int = 10_000,
) -> List[IdentityCheck]:
    """
    Run every identity check.

    Args:
        master_seed: Seed of the random instances
        inject_fault: "prop1" flips the sign of the cross term in the
            decomposition formula (mutation check of the suite itself)
        instances: Random instances for the exact identities
        m: Instance length for the exact identities
        mc_replications: Monte Carlo replications per decomposition case

    Returns:
        One IdentityCheck per identity (and per decomposition case)
    """
    if inject_fault is not None and inject_fault not in FAULTS:
        raise InvalidParameterError(f"unknown fault '{inject_fault}' (expected one of {', '.join(FAULTS)})")

    suites: Dict[str, Callable[[np.random.Generator], IdentityCheck]] = {
        "r2_reconstruction": lambda r: check_r2_reconstruction(r, instances, m),
        "mae_bounds": lambda r: check_mae_bounds(r, instances, m),
        "calibration_identity": lambda r: check_calibration_identity(r, instances, m),
        "calibration_decomposition": lambda r: check_calibration_decomposition(r, max(1, instances // 5), m),
    }
    checks = [suite(derive_rng(master_seed, "identity", name)) for name, suite in suites.items()]

    cross_sign = 1.0 if inject_fault == "prop1" else -1.0
    for k, (bias_t, bias_c) in enumerate(PROP1_CASES):
        checks.extend(
            check_prop1(
                derive_rng(master_seed, "identity", "prop1", k),
                bias_t,
                bias_c,
                replications=mc_replications,
                cross_sign=cross_sign,
            )
        )

    n_failed = sum(not c.passed for c in checks)
    logger.info(f"identity suite: {len(checks) - n_failed}/{len(checks)} checks passed")
    return checks
