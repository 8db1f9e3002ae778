"""
PITE estimates from two independently fitted arm models.

The treatment-arm model only ever sees treated rows and the control-arm model
only control rows; each arm fits on its own random stream.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pitelens.core import learners
from pitelens.core.learners import FittedPredictor, LearnerSpec
from pitelens.models.records import Population
from pitelens.utils.errors import ArmFitError, InvalidParameterError


@dataclass(frozen=True)
class ArmData:
    """Rows of one treatment arm; rows are positions in the source population."""

    arm: int  # 1 treated, 0 control
    rows: np.ndarray
    X: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class FittedPair:
    model_t: FittedPredictor
    model_c: FittedPredictor
    learner_id: str


def split_by_arm(pop: Population) -> Tuple[ArmData, ArmData]:
    """Partition a population into (control, treated) arm data."""
    treated = np.flatnonzero(pop.T == 1)
    control = np.flatnonzero(pop.T == 0)
    if treated.size == 0 or control.size == 0:
        raise InvalidParameterError(
            f"both arms must be non-empty, got {control.size} control and {treated.size} treated"
        )
    d0 = ArmData(arm=0, rows=control, X=pop.X[control], y=pop.y_obs[control])
    d1 = ArmData(arm=1, rows=treated, X=pop.X[treated], y=pop.y_obs[treated])
    return d0, d1


def fit_pair(spec: LearnerSpec, D0: ArmData, D1: ArmData, rng: np.random.Generator) -> FittedPair:
    """
    Fit the treatment and control models on independent sub-streams.

    Raises:
        ArmFitError: A learner error, naming the arm it came from
    """
    if D0.arm != 0 or D1.arm != 1:
        raise InvalidParameterError("fit_pair expects (control, treated) arm data")
    rng_t, rng_c = rng.spawn(2)
    try:
        model_t = learners.fit(spec, D1.X, D1.y, rng_t)
    except Exception as e:
        raise ArmFitError("treatment", e) from e
    try:
        model_c = learners.fit(spec, D0.X, D0.y, rng_c)
    except Exception as e:
        raise ArmFitError("control", e) from e
    return FittedPair(model_t=model_t, model_c=model_c, learner_id=spec.id)


def predict_arms(pair: FittedPair, Xnew: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Treatment-arm and control-arm predictions at Xnew."""
    return learners.predict(pair.model_t, Xnew), learners.predict(pair.model_c, Xnew)


def predict_pite(pair: FittedPair, Xnew: np.ndarray) -> np.ndarray:
    """Predicted individual treatment effect f_t(x) - f_c(x)."""
    pred_t, pred_c = predict_arms(pair, Xnew)
    return pred_t - pred_c


def internal_split(pop: Population, rng: np.random.Generator) -> Tuple[Population, Population]:
    """
    Random 50:50 split stratified by arm.

    The training half takes ceil(n1/2) treated and floor(n0/2) control rows;
    row order inside each half follows the original population.
    """
    if pop.n < 4:
        raise InvalidParameterError(f"internal split needs n >= 4, got {pop.n}")
    treated = np.flatnonzero(pop.T == 1)
    control = np.flatnonzero(pop.T == 0)
    treated = rng.permutation(treated)
    control = rng.permutation(control)
    n_t = (treated.size + 1) // 2
    n_c = control.size // 2
    train_rows = np.sort(np.concatenate([treated[:n_t], control[:n_c]]))
    test_rows = np.sort(np.concatenate([treated[n_t:], control[n_c:]]))
    return pop.take(train_rows), pop.take(test_rows)
