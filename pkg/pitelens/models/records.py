"""Data records produced by simulation, matching and scoring."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass(eq=False)
class Population:
    """
    A simulated trial population.

    X holds the covariates the learners see. In interaction mode that is the full
    63-column expansion; base_X keeps the six base covariates, which drive f0 and
    the matching metric, and subset lists the expansion columns that define the
    treatment effect.
    """

    ids: np.ndarray
    X: np.ndarray
    T: np.ndarray
    y_obs: np.ndarray
    delta_true: np.ndarray
    f0_true: np.ndarray
    beta0: np.ndarray
    beta_delta: np.ndarray
    base_X: Optional[np.ndarray] = None
    subset: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def match_X(self) -> np.ndarray:
        """Covariates used for Mahalanobis matching."""
        return self.base_X if self.base_X is not None else self.X

    def take(self, rows: np.ndarray) -> "Population":
        """Return the sub-population at the given row positions (ids are kept)."""
        rows = np.asarray(rows, dtype=np.intp)
        return Population(
            ids=self.ids[rows],
            X=self.X[rows],
            T=self.T[rows],
            y_obs=self.y_obs[rows],
            delta_true=self.delta_true[rows],
            f0_true=self.f0_true[rows],
            beta0=self.beta0,
            beta_delta=self.beta_delta,
            base_X=self.base_X[rows] if self.base_X is not None else None,
            subset=self.subset,
        )


@dataclass(eq=False)
class MatchedPairs:
    """Greedy Mahalanobis matching result; indices are row positions in the matched arrays."""

    i_control: np.ndarray
    i_treated: np.ndarray
    distances: np.ndarray
    cov_inv: np.ndarray

    def __len__(self) -> int:
        return int(self.i_control.shape[0])

    @property
    def pairs(self) -> List[tuple]:
        return list(zip(self.i_control.tolist(), self.i_treated.tolist()))


@dataclass(eq=False)
class PairEffects:
    """Per-pair observed, predicted and true effect differences."""

    observed: np.ndarray
    predicted: np.ndarray
    truth: np.ndarray


@dataclass(frozen=True)
class CalibrationResult:
    """OLS of truth on estimate: truth = alpha + beta * est."""

    alpha: float
    beta: float
    alpha_se: float
    beta_se: float
    alpha_covers: Optional[bool]
    beta_covers: Optional[bool]
    r2: float
    adj_r2: float


@dataclass(eq=False)
class MetricReport:
    """Scores for one PITE vector against its truth."""

    rmse: float
    mae: float
    r2: float
    dir: float
    calibration: CalibrationResult
    dir_flags: np.ndarray = field(repr=False)

    @property
    def alpha(self) -> float:
        return self.calibration.alpha

    @property
    def beta(self) -> float:
        return self.calibration.beta

    def to_dict(self) -> Dict[str, Any]:
        cal = self.calibration
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "r2": self.r2,
            "adj_r2": cal.adj_r2,
            "dir": self.dir,
            "alpha": cal.alpha,
            "beta": cal.beta,
            "alpha_se": cal.alpha_se,
            "beta_se": cal.beta_se,
            "alpha_covers": cal.alpha_covers,
            "beta_covers": cal.beta_covers,
        }


@dataclass(frozen=True)
class R2Components:
    """Arm-level pieces of the PITE R-squared."""

    mse_1: float
    mse_0: float
    cov_e: float
    var_1: float
    var_0: float
    cov_eps: float
    r2: float


@dataclass(frozen=True)
class MaeBounds:
    lower: float
    upper: float
    mae_pite: float


@dataclass(frozen=True)
class DecompositionReport:
    """Monte Carlo error decomposition of a PITE estimator."""

    mse_pite: float
    mse_t: float
    mse_c: float
    bias_t: float
    bias_c: float
    gap: float  # mse_pite - (mse_t + mse_c - 2 bias_t bias_c)
    gap_se: float
    var_pite: float
    var_t: float
    var_c: float
    cov_tc: float
    cov_tc_se: float
    replications: int
    r2: Optional[R2Components] = None
    mae: Optional[MaeBounds] = None

    @property
    def predicted_mse(self) -> float:
        return self.mse_t + self.mse_c - 2.0 * self.bias_t * self.bias_c


@dataclass(frozen=True)
class CalibrationDecomposition:
    """Arm calibration lines and the implied PITE intercept."""

    alpha_t: float
    beta_t: float
    alpha_c: float
    beta_c: float
    alpha_pite: float
    beta_pite: float
    slopes_match: bool
    intercept_gap: Optional[float]


@dataclass(eq=False)
class ComplexityTable:
    """Per-patient consensus fractions, class labels and per-learner class accuracy."""

    consensus: np.ndarray
    labels: List[str]
    counts: Dict[str, int]
    accuracy: Dict[str, Dict[str, float]]  # learner -> class -> percent (nan if bin empty)
    learners: List[str]


@dataclass(frozen=True)
class ZoneFlags:
    failure: bool
    success: bool


@dataclass(eq=False)
class ReplicationRecord:
    """Result of one learner on one replication of one scenario."""

    mode: str
    mu_delta: float
    rho: float
    p: int
    n: int
    learner: str
    replication: int
    status: str  # "ok" or "failed"
    reason: str = ""
    report: Optional[MetricReport] = None
    obs_rmse: float = float("nan")
    obs_dir: float = float("nan")
    n_scored: int = 0


@dataclass(eq=False)
class GridResult:
    """Raw per-replication rows and per-scenario aggregates of a run."""

    rows: Any  # pandas.DataFrame
    aggregates: Any  # pandas.DataFrame
    complexity: Optional[ComplexityTable] = None

    @property
    def n_failed(self) -> int:
        return int((self.rows["status"] == "failed").sum())


@dataclass(frozen=True)
class IdentityCheck:
    """Measured gap of one metric identity against its tolerance."""

    name: str
    gap: float
    tolerance: float
    passed: bool
    detail: str = ""
