"""
Greedy Mahalanobis nearest-neighbor matching for external validation.

Treated subjects are processed in data order; each takes the nearest control
not yet used, with distance ties going to the lowest control index.
"""

from typing import Optional

import numpy as np
import pandas as pd
from scipy.spatial import distance

from pitelens.models.records import MatchedPairs, PairEffects, Population
from pitelens.utils.errors import InvalidParameterError
from pitelens.utils.logger import logger
from pitelens.utils.report_utils import write_csv

MAX_CONDITION = 1e10
RIDGE_FACTOR = 1e-8

PAIR_COLUMNS = ["pair_id", "i_control", "i_treated", "distance", "O", "D_hat", "D_true"]


def _check_positive_definite(cov_inv: np.ndarray) -> np.ndarray:
    cov_inv = np.atleast_2d(np.asarray(cov_inv, dtype=float))
    if cov_inv.shape[0] != cov_inv.shape[1]:
        raise InvalidParameterError(f"cov_inv must be square, got shape {cov_inv.shape}")
    if not np.allclose(cov_inv, cov_inv.T):
        raise InvalidParameterError("cov_inv must be symmetric")
    try:
        np.linalg.cholesky(cov_inv)
    except np.linalg.LinAlgError:
        raise InvalidParameterError("cov_inv must be positive definite") from None
    return cov_inv


def mahalanobis(x: np.ndarray, y: np.ndarray, cov_inv: np.ndarray) -> float:
    """sqrt((x - y)^T cov_inv (x - y))."""
    cov_inv = _check_positive_definite(cov_inv)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.shape[0] != cov_inv.shape[0]:
        raise InvalidParameterError(
            f"dimension mismatch: x {x.shape}, y {y.shape}, cov_inv {cov_inv.shape}"
        )
    return float(distance.mahalanobis(x, y, cov_inv))


def pooled_inverse_covariance(X: np.ndarray) -> np.ndarray:
    """
    Inverse sample covariance of the stacked treated and control covariates.

    A covariance with condition number above 1e10 gets 1e-8 * trace / p added to
    its diagonal before inversion.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    cond = np.linalg.cond(cov)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        trace = float(np.trace(cov))
        if trace > 0:
            cov = cov + RIDGE_FACTOR * trace / p * np.eye(p)
            logger.warning(f"pooled covariance condition {cond:.3g}; added diagonal ridge")
        else:
            logger.warning("pooled covariance is zero; using the identity metric")
            cov = np.eye(p)
    inv = np.linalg.inv(cov)
    return (inv + inv.T) / 2.0


def match_nn(
    X_treated: np.ndarray, X_control: np.ndarray, cov_inv: Optional[np.ndarray] = None
) -> MatchedPairs:
    """
    Greedy one-to-one matching without replacement.

    Args:
        X_treated: m1 x p treated covariates
        X_control: m0 x p control covariates
        cov_inv: Metric to use; defaults to the pooled inverse covariance

    Returns:
        MatchedPairs with indices into X_control and X_treated
    """
    X_treated = np.asarray(X_treated, dtype=float)
    X_control = np.asarray(X_control, dtype=float)
    if X_treated.ndim == 1:
        X_treated = X_treated.reshape(-1, 1)
    if X_control.ndim == 1:
        X_control = X_control.reshape(-1, 1)
    if X_treated.shape[1] == 0 or X_control.shape[1] == 0:
        raise InvalidParameterError("matching needs at least one covariate")
    if X_treated.shape[1] != X_control.shape[1]:
        raise InvalidParameterError(
            f"covariate count mismatch: {X_treated.shape[1]} treated vs {X_control.shape[1]} control"
        )
    m1, m0 = X_treated.shape[0], X_control.shape[0]
    if m1 < 1 or m0 < 1:
        raise InvalidParameterError(f"both groups must be non-empty, got {m1} treated, {m0} control")

    if cov_inv is None:
        cov_inv = pooled_inverse_covariance(np.vstack([X_treated, X_control]))
    else:
        cov_inv = _check_positive_definite(cov_inv)

    dist = distance.cdist(X_treated, X_control, metric="mahalanobis", VI=cov_inv)
    available = np.ones(m0, dtype=bool)
    i_control, i_treated, dists = [], [], []
    for i in range(m1):
        if len(i_control) == m0:
            break
        row = np.where(available, dist[i], np.inf)
        j = int(np.argmin(row))
        available[j] = False
        i_control.append(j)
        i_treated.append(i)
        dists.append(dist[i, j])

    return MatchedPairs(
        i_control=np.asarray(i_control, dtype=np.intp),
        i_treated=np.asarray(i_treated, dtype=np.intp),
        distances=np.asarray(dists, dtype=float),
        cov_inv=cov_inv,
    )


def match_population(pop: Population) -> MatchedPairs:
    """Match treated to control subjects of a population; indices are population rows."""
    treated = np.flatnonzero(pop.T == 1)
    control = np.flatnonzero(pop.T == 0)
    local = match_nn(pop.match_X[treated], pop.match_X[control])
    return MatchedPairs(
        i_control=control[local.i_control],
        i_treated=treated[local.i_treated],
        distances=local.distances,
        cov_inv=local.cov_inv,
    )


def pairwise_effects(
    pairs: MatchedPairs,
    y: np.ndarray,
    pred_t: np.ndarray,
    pred_c: np.ndarray,
    delta_true: np.ndarray,
) -> PairEffects:
    """
    Observed, predicted and true differences per matched pair.

    pred_t and pred_c are treatment-arm and control-arm predictions for every
    row the pair indices refer to.
    """
    n = len(y)
    for name, arr in (("pred_t", pred_t), ("pred_c", pred_c), ("delta_true", delta_true)):
        if len(arr) != n:
            raise InvalidParameterError(f"{name} has length {len(arr)}, expected {n}")
    for name, idx in (("i_control", pairs.i_control), ("i_treated", pairs.i_treated)):
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InvalidParameterError(f"{name} index out of range for {n} rows")
    y = np.asarray(y, dtype=float)
    return PairEffects(
        observed=y[pairs.i_treated] - y[pairs.i_control],
        predicted=np.asarray(pred_t)[pairs.i_treated] - np.asarray(pred_c)[pairs.i_control],
        truth=np.asarray(delta_true)[pairs.i_treated],
    )


def pairs_frame(pairs: MatchedPairs, effects: PairEffects) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "pair_id": np.arange(len(pairs)),
            "i_control": pairs.i_control,
            "i_treated": pairs.i_treated,
            "distance": pairs.distances,
            "O": effects.observed,
            "D_hat": effects.predicted,
            "D_true": effects.truth,
        },
        columns=PAIR_COLUMNS,
    )


def dump_pairs(pairs: MatchedPairs, effects: PairEffects, path: str) -> str:
    """Write matched pairs with their effect differences to CSV."""
    return write_csv(pairs_frame(pairs, effects), path)
