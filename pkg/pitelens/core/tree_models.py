"""Tree learners built on sklearn's variance-reduction regression tree."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from sklearn.tree import DecisionTreeRegressor


@dataclass(frozen=True)
class ConstantModel:
    value: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)


@dataclass(frozen=True)
class TreeModel:
    tree: DecisionTreeRegressor

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)


def fit_cart(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: Optional[int],
    min_leaf: int = 5,
    seed: int = 0,
    max_features: Optional[int] = None,
):
    """
    Fit one regression tree.

    max_depth=0 gives the constant model predicting the training mean.
    """
    if max_depth == 0:
        return ConstantModel(float(np.mean(y)))
    tree = DecisionTreeRegressor(
        max_depth=max_depth,
        min_samples_leaf=min_leaf,
        max_features=max_features,
        random_state=seed,
    )
    tree.fit(X, y)
    return TreeModel(tree)


@dataclass(frozen=True)
class RandomForestModel:
    """Bagged trees; prediction is the mean of the tree predictions."""

    trees: List[TreeModel] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.mean(np.stack([t.predict(X) for t in self.trees]), axis=0)


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 500,
    mtry: Optional[int] = None,
    min_leaf: int = 5,
    max_depth: Optional[int] = None,
    bootstrap: bool = True,
    seed: int = 0,
) -> RandomForestModel:
    """
    Fit a random forest.

    Tree t uses seed + t both for its bootstrap sample and its feature draws,
    so a forest is reproducible tree by tree.
    """
    n, p = X.shape
    if mtry is None:
        mtry = int(np.ceil(p / 3))
    trees = []
    for t in range(n_trees):
        tree_seed = seed + t
        if bootstrap:
            rows = np.random.default_rng(tree_seed).integers(0, n, size=n)
            X_t, y_t = X[rows], y[rows]
        else:
            X_t, y_t = X, y
        trees.append(
            fit_cart(X_t, y_t, max_depth=max_depth, min_leaf=min_leaf, seed=tree_seed, max_features=mtry)
        )
    return RandomForestModel(trees=trees)


@dataclass(frozen=True)
class GradientBoostingModel:
    """F(x) = init + sum_m learning_rate * tree_m(x)."""

    init: float
    learning_rate: float
    trees: List[TreeModel] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        fm = np.zeros(X.shape[0])
        for tree in self.trees:
            fm = fm + self.learning_rate * tree.predict(X)
        return fm + self.init


def fit_gradient_boosting(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 200,
    learning_rate: float = 0.05,
    max_depth: int = 3,
    min_leaf: int = 5,
    seed: int = 0,
) -> GradientBoostingModel:
    """Least-squares boosting of depth-limited trees on the running residuals."""
    y_mean = float(np.mean(y))
    res = y - y_mean
    trees = []
    for m in range(n_trees):
        tree = fit_cart(X, res, max_depth=max_depth, min_leaf=min_leaf, seed=seed + m)
        res = res - learning_rate * tree.predict(X)
        trees.append(tree)
    return GradientBoostingModel(init=y_mean, learning_rate=learning_rate, trees=trees)
