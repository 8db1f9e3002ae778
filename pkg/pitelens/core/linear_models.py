"""
Linear, penalized and projection regression models.

Penalized and projection models work on a design standardized to zero mean and
unit (population) variance, with a centered response, and report coefficients
on the original scale. The intercept is never penalized.

Penalized objective, for mixing alpha in [0, 1]:

    (1 / 2n) ||y - b0 - X b||^2 + lam * ((1 - alpha) / 2 ||b||^2 + alpha ||b||_1)
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from sklearn.linear_model import enet_path

from pitelens.utils.errors import RankDeficiencyError

ENET_TOL = 1e-10
ENET_MAX_ITER = 100_000


@dataclass(frozen=True)
class Standardizer:
    """Per-feature centering and scaling fitted on training data."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        # Constant columns stay at zero after centering
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


@dataclass(frozen=True)
class LinearModel:
    """Prediction = intercept + X @ coef, on the original feature scale."""

    intercept: float
    coef: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coef


def _to_original_scale(
    std: Standardizer, y_mean: float, coef_std: np.ndarray
) -> LinearModel:
    coef = coef_std / std.scale
    return LinearModel(intercept=float(y_mean - std.mean @ coef), coef=coef)


def _standardized(X: np.ndarray, y: np.ndarray):
    std = Standardizer.fit(X)
    y_mean = float(y.mean())
    return std, std.transform(X), y - y_mean, y_mean


def fit_ols(X: np.ndarray, y: np.ndarray) -> LinearModel:
    """
    Ordinary least squares with intercept.

    Raises:
        RankDeficiencyError: n <= p or the design is rank deficient
    """
    n, p = X.shape
    if n <= p:
        raise RankDeficiencyError(f"ols needs n > p, got n={n}, p={p}; use a penalized learner")
    design = np.column_stack([np.ones(n), X])
    solution, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < p + 1:
        raise RankDeficiencyError(f"ols design has rank {rank} < {p + 1}")
    return LinearModel(intercept=float(solution[0]), coef=solution[1:])


def lambda_max(X: np.ndarray, y: np.ndarray, alpha: float) -> float:
    """
    Smallest lambda that zeroes every coefficient at mixing weight alpha.

    Ridge (alpha=0) never zeroes coefficients and uses the lasso value.
    """
    _, Xs, yc, _ = _standardized(X, y)
    n = X.shape[0]
    weight = alpha if alpha > 0 else 1.0
    return float(np.max(np.abs(Xs.T @ yc)) / (n * weight))


def lambda_grid(
    X: np.ndarray, y: np.ndarray, alpha: float, n_lambda: int = 50, min_ratio: float = 1e-4
) -> List[float]:
    """Descending log-spaced lambdas from lambda_max to lambda_max * min_ratio."""
    lam_max = lambda_max(X, y, alpha)
    if lam_max <= 0:
        # Constant response: every lambda gives the same fit
        return [0.0]
    return np.geomspace(lam_max, lam_max * min_ratio, n_lambda).tolist()


def ridge_path(X: np.ndarray, y: np.ndarray, lambdas: Sequence[float]) -> List[LinearModel]:
    """Closed-form ridge fits via the SVD of the standardized design."""
    n = X.shape[0]
    std, Xs, yc, y_mean = _standardized(X, y)
    U, s, Vt = np.linalg.svd(Xs, full_matrices=False)
    uty = U.T @ yc
    models = []
    for lam in lambdas:
        denom = s**2 + n * lam
        d = np.divide(s, denom, out=np.zeros_like(s), where=denom > 0)
        models.append(_to_original_scale(std, y_mean, Vt.T @ (d * uty)))
    return models


def elastic_net_path(
    X: np.ndarray, y: np.ndarray, alpha: float, lambdas: Sequence[float]
) -> List[LinearModel]:
    """
    Lasso (alpha=1) or elastic-net fits by coordinate descent, one per lambda.

    Models come back in the order of lambdas.
    """
    std, Xs, yc, y_mean = _standardized(X, y)
    lambdas = np.asarray(lambdas, dtype=float)
    # enet_path walks the path from the largest lambda down
    order = np.argsort(-lambdas, kind="stable")
    _, coefs, _ = enet_path(
        np.asfortranarray(Xs),
        yc,
        l1_ratio=alpha,
        alphas=lambdas[order],
        tol=ENET_TOL,
        max_iter=ENET_MAX_ITER,
    )
    models: List[LinearModel] = [None] * len(lambdas)  # type: ignore[list-item]
    for pos, idx in enumerate(order):
        models[idx] = _to_original_scale(std, y_mean, coefs[:, pos])
    return models


def pcr_path(X: np.ndarray, y: np.ndarray, components: Sequence[int]) -> List[LinearModel]:
    """Principal component regression keeping the leading k components, for each k."""
    std, Xs, yc, y_mean = _standardized(X, y)
    U, s, Vt = np.linalg.svd(Xs, full_matrices=False)
    tol = s[0] * max(Xs.shape) * np.finfo(float).eps if s.size and s[0] > 0 else 0.0
    inv_s = np.divide(1.0, s, out=np.zeros_like(s), where=s > tol)
    uty = U.T @ yc
    return [
        _to_original_scale(std, y_mean, Vt[:k].T @ (inv_s[:k] * uty[:k])) for k in components
    ]


def pls_path(X: np.ndarray, y: np.ndarray, components: Sequence[int]) -> List[LinearModel]:
    """
    PLS1 by NIPALS deflation, one model per requested component count.

    Stops extracting once the covariance between the deflated design and
    response vanishes; larger counts then reuse the last model.
    """
    std, Xs, yc, y_mean = _standardized(X, y)
    max_k = max(components)
    E = Xs.copy()
    f = yc.copy()
    ref = np.linalg.norm(Xs) * np.linalg.norm(yc)

    W, P, q = [], [], []
    coef_by_k = {0: np.zeros(X.shape[1])}
    for k in range(1, max_k + 1):
        w = E.T @ f
        nw = np.linalg.norm(w)
        if ref == 0 or nw <= 1e-12 * ref:
            break
        w = w / nw
        t = E @ w
        tt = t @ t
        p_load = E.T @ t / tt
        q_load = (f @ t) / tt
        E = E - np.outer(t, p_load)
        f = f - q_load * t
        W.append(w)
        P.append(p_load)
        q.append(q_load)

        Wm = np.column_stack(W)
        Pm = np.column_stack(P)
        coef_by_k[k] = Wm @ np.linalg.solve(Pm.T @ Wm, np.asarray(q))

    last = max(coef_by_k)
    return [
        _to_original_scale(std, y_mean, coef_by_k[min(k, last)]) for k in components
    ]
