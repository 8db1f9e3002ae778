"""
Learner zoo with cross-validated hyperparameter selection.

Every learner turns a hyperparameter grid into an ordered list of candidates,
most parsimonious first (strongest penalty, fewest components, shallowest
tree). fit scores all candidates by K-fold CV mean squared error, keeps the
first minimizer and refits it on all rows.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from sklearn.model_selection import KFold

from pitelens.core import linear_models, tree_models
from pitelens.core.linear_models import Standardizer
from pitelens.utils.errors import InvalidParameterError
from pitelens.utils.logger import logger
from pitelens.utils.rng import draw_seed

Candidate = Dict[str, Any]


@dataclass(frozen=True)
class LearnerSpec:
    """A learner id with its hyperparameter grid and CV fold count."""

    id: str
    hyper_grid: Dict[str, Any] = field(default_factory=dict)
    cv_folds: int = 10


@dataclass(frozen=True)
class FittedPredictor:
    """Immutable fitted model plus the training-time standardization constants."""

    learner_id: str
    model: Any
    x_mean: np.ndarray
    x_scale: np.ndarray
    params: Candidate
    n_features: int
    cv_errors: Optional[Tuple[float, ...]] = None


class Learner(ABC):
    """Fitting procedure behind a learner id."""

    id: str = ""
    default_grid: Dict[str, Any] = {}

    @abstractmethod
    def candidates(self, X: np.ndarray, y: np.ndarray, grid: Dict[str, Any]) -> List[Candidate]:
        """Ordered hyperparameter candidates, parsimonious first."""

    @abstractmethod
    def fit_candidates(
        self, X: np.ndarray, y: np.ndarray, candidates: List[Candidate], seed: int
    ) -> List[Any]:
        """Fit one model per candidate on (X, y)."""


class OLSLearner(Learner):
    id = "ols"
    default_grid: Dict[str, Any] = {}

    def candidates(self, X, y, grid):
        return [{}]

    def fit_candidates(self, X, y, candidates, seed):
        return [linear_models.fit_ols(X, y) for _ in candidates]


class PenalizedLearner(Learner):
    """glmnet-style penalized regression with a fixed mixing weight."""

    alpha: float = 1.0

    def __init__(self, learner_id: str, alpha: float):
        self.id = learner_id
        self.alpha = alpha
        self.default_grid = {"n_lambda": 50, "lambda_min_ratio": 1e-4}

    def candidates(self, X, y, grid):
        if grid.get("lambdas") is not None:
            lambdas = sorted((float(v) for v in grid["lambdas"]), reverse=True)
        else:
            lambdas = linear_models.lambda_grid(
                X, y, self.alpha, n_lambda=int(grid["n_lambda"]), min_ratio=float(grid["lambda_min_ratio"])
            )
        return [{"lambda": lam, "alpha": self.alpha} for lam in lambdas]

    def fit_candidates(self, X, y, candidates, seed):
        lambdas = [c["lambda"] for c in candidates]
        if self.alpha == 0.0:
            return linear_models.ridge_path(X, y, lambdas)
        return linear_models.elastic_net_path(X, y, self.alpha, lambdas)


class ProjectionLearner(Learner):
    """Principal component or partial least squares regression."""

    def __init__(self, learner_id: str):
        self.id = learner_id
        self.default_grid = {"max_components": 20}

    def candidates(self, X, y, grid):
        if grid.get("components") is not None:
            ks = sorted({int(k) for k in grid["components"]})
        else:
            ks = list(range(1, min(X.shape[1], int(grid["max_components"])) + 1))
        if not ks or ks[0] < 1 or ks[-1] > X.shape[1]:
            raise InvalidParameterError(f"{self.id} components must lie in 1..{X.shape[1]}, got {ks}")
        return [{"components": k} for k in ks]

    def fit_candidates(self, X, y, candidates, seed):
        ks = [c["components"] for c in candidates]
        if self.id == "pcr":
            return linear_models.pcr_path(X, y, ks)
        return linear_models.pls_path(X, y, ks)


class CARTLearner(Learner):
    id = "cart"
    default_grid: Dict[str, Any] = {"max_depth": [2, 3, 4, 5, 6, 7, 8], "min_leaf": 5}

    def candidates(self, X, y, grid):
        depths = sorted(int(d) for d in grid["max_depth"])
        return [{"max_depth": d, "min_leaf": int(grid["min_leaf"])} for d in depths]

    def fit_candidates(self, X, y, candidates, seed):
        return [
            tree_models.fit_cart(X, y, max_depth=c["max_depth"], min_leaf=c["min_leaf"], seed=seed)
            for c in candidates
        ]


class RandomForestLearner(Learner):
    id = "rf"
    default_grid: Dict[str, Any] = {
        "n_trees": 500,
        "mtry": None,
        "min_leaf": 5,
        "max_depth": None,
        "bootstrap": True,
    }

    def candidates(self, X, y, grid):
        mtry = grid["mtry"]
        mtry_values = [math.ceil(X.shape[1] / 3)] if mtry is None else mtry
        if not isinstance(mtry_values, list):
            mtry_values = [mtry_values]
        return [
            {
                "n_trees": int(grid["n_trees"]),
                "mtry": int(m),
                "min_leaf": int(grid["min_leaf"]),
                "max_depth": grid["max_depth"],
                "bootstrap": bool(grid["bootstrap"]),
            }
            for m in sorted(mtry_values)
        ]

    def fit_candidates(self, X, y, candidates, seed):
        return [tree_models.fit_random_forest(X, y, seed=seed, **c) for c in candidates]


class GradientBoostingLearner(Learner):
    id = "gbm"
    default_grid: Dict[str, Any] = {
        "n_trees": 200,
        "learning_rate": 0.05,
        "max_depth": 3,
        "min_leaf": 5,
    }

    def candidates(self, X, y, grid):
        n_trees = grid["n_trees"]
        values = n_trees if isinstance(n_trees, list) else [n_trees]
        return [
            {
                "n_trees": int(t),
                "learning_rate": float(grid["learning_rate"]),
                "max_depth": int(grid["max_depth"]),
                "min_leaf": int(grid["min_leaf"]),
            }
            for t in sorted(values)
        ]

    def fit_candidates(self, X, y, candidates, seed):
        return [tree_models.fit_gradient_boosting(X, y, seed=seed, **c) for c in candidates]


LEARNERS: Dict[str, Learner] = {
    learner.id: learner
    for learner in [
        OLSLearner(),
        PenalizedLearner("ridge", alpha=0.0),
        PenalizedLearner("lasso", alpha=1.0),
        PenalizedLearner("enet", alpha=0.2),
        ProjectionLearner("pcr"),
        ProjectionLearner("pls"),
        CARTLearner(),
        RandomForestLearner(),
        GradientBoostingLearner(),
    ]
}

LEARNER_IDS = list(LEARNERS)

# Learners whose fit does not depend on the random stream
DETERMINISTIC_LEARNERS = ["ols", "ridge", "lasso", "enet", "pcr", "pls"]


def get_learner(learner_id: str) -> Learner:
    try:
        return LEARNERS[learner_id]
    except KeyError:
        raise InvalidParameterError(f"unknown learner: '{learner_id}'") from None


def make_learner_spec(
    learner_id: str, overrides: Optional[Dict[str, Any]] = None, cv_folds: int = 10
) -> LearnerSpec:
    """Build a spec from the learner's default grid merged with overrides."""
    learner = get_learner(learner_id)
    grid = dict(learner.default_grid)
    for key, value in (overrides or {}).items():
        if key not in grid and key not in ("lambdas", "components"):
            raise InvalidParameterError(f"unknown hyperparameter '{key}' for learner '{learner_id}'")
        grid[key] = value
    for key, value in grid.items():
        if isinstance(value, list) and not value:
            raise InvalidParameterError(f"empty grid '{key}' for learner '{learner_id}'")
    return LearnerSpec(id=learner_id, hyper_grid=grid, cv_folds=cv_folds)


def assign_folds(n: int, n_folds: int, seed: int) -> np.ndarray:
    """Fold id per row from a shuffled KFold split."""
    folds = np.empty(n, dtype=np.int64)
    kf = KFold(n_splits=n_folds, shuffle=True, random_state=seed)
    for fold, (_, test_index) in enumerate(kf.split(np.zeros((n, 1)))):
        folds[test_index] = fold
    return folds


def _check_design(X: np.ndarray, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidParameterError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return X


def fit(
    spec: LearnerSpec,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    folds: Optional[np.ndarray] = None,
) -> FittedPredictor:
    """
    Fit a learner with CV-selected hyperparameters.

    Args:
        spec: Learner id, grid and fold count
        X: n x p training design
        y: n training outcomes
        rng: Random stream for tree seeds and fold assignment
        folds: Optional fold id per row, overriding the derived assignment

    Returns:
        FittedPredictor refit on all rows with the winning candidate
    """
    learner = get_learner(spec.id)
    X = _check_design(X)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise InvalidParameterError(f"y has shape {y.shape}, expected ({n},)")
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("y contains non-finite entries")
    if n <= spec.cv_folds:
        raise InvalidParameterError(f"{spec.id} needs n > cv_folds, got n={n}, cv_folds={spec.cv_folds}")

    # Seeds are drawn in a fixed order whether or not CV runs
    base_seed = draw_seed(rng)
    fold_seed = draw_seed(rng)

    grid = {**learner.default_grid, **spec.hyper_grid}
    cands = learner.candidates(X, y, grid)
    if not cands:
        raise InvalidParameterError(f"{spec.id} has an empty hyperparameter grid")

    cv_errors: Optional[Tuple[float, ...]] = None
    best = 0
    if len(cands) > 1:
        if folds is None:
            folds = assign_folds(n, spec.cv_folds, fold_seed)
        else:
            folds = np.asarray(folds, dtype=np.int64)
            if folds.shape != (n,):
                raise InvalidParameterError(f"folds has shape {folds.shape}, expected ({n},)")
        sse = np.zeros(len(cands))
        for fold in np.unique(folds):
            train = folds != fold
            test = ~train
            models = learner.fit_candidates(X[train], y[train], cands, base_seed)
            for j, model in enumerate(models):
                sse[j] += np.sum((y[test] - model.predict(X[test])) ** 2)
        mse = sse / n
        # argmin returns the first minimizer, i.e. the most parsimonious
        best = int(np.argmin(mse))
        cv_errors = tuple(float(e) for e in mse)
        logger.debug(f"{spec.id}: chose {cands[best]} with CV MSE {mse[best]:.6g}")

    model = learner.fit_candidates(X, y, [cands[best]], base_seed)[0]
    std = Standardizer.fit(X)
    return FittedPredictor(
        learner_id=spec.id,
        model=model,
        x_mean=std.mean,
        x_scale=std.scale,
        params=dict(cands[best]),
        n_features=p,
        cv_errors=cv_errors,
    )


def predict(model: FittedPredictor, Xnew: np.ndarray) -> np.ndarray:
    """Predict outcomes for new rows."""
    Xnew = _check_design(Xnew, "Xnew")
    if Xnew.shape[1] != model.n_features:
        raise InvalidParameterError(
            f"Xnew has {Xnew.shape[1]} columns, model was trained on {model.n_features}"
        )
    return np.asarray(model.model.predict(Xnew), dtype=float)
