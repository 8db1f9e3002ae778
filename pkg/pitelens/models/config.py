"""Configuration models for PiteLens."""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

# Interaction mode always expands six base covariates
N_BASE = 6
N_INTERACTIONS = 2**N_BASE - 1


class Mode(str, Enum):
    """Validation mode of a scenario."""

    INTERNAL = "internal"
    EXTERNAL_CORRELATED = "external-correlated"
    EXTERNAL_INTERACTION = "external-interaction"


# Published grid values
PUBLISHED_N = [250, 500, 750]
PUBLISHED_P = [5, 15, 45]
PUBLISHED_RHO = [0.0, 0.5, 0.95]
PUBLISHED_MU_DELTA = [0.0, 0.25, 0.5]
PUBLISHED_INTERACTION_N = [500, 750, 1000]
PUBLISHED_INTERACTION_P = [5, 15, 45]


@dataclass(frozen=True)
class ScenarioConfig:
    """One cell of the simulation grid."""

    n: int
    p: int
    rho: float
    mu_delta: float
    mode: Mode = Mode.INTERNAL
    n_base: int = N_BASE
    replications: int = 20
    master_seed: int = 0
    learners: Tuple[str, ...] = ()
    cv_folds: int = 10
    noise_sd: float = 1.0  # 0 gives the noiseless sanity scenario
    zero_effect: bool = False  # force beta_delta to exactly 0

    def __post_init__(self):
        """Validate scenario parameters."""
        # Mode may arrive as a plain string from YAML
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "learners", tuple(self.learners))

        if self.n < 1 or self.p < 1:
            raise ValueError(f"n and p must be positive, got n={self.n}, p={self.p}")
        if self.n % 2 != 0:
            raise ValueError(f"n must be even to keep arms balanced, got n={self.n}")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if not math.isfinite(self.mu_delta):
            raise ValueError(f"mu_delta must be finite, got {self.mu_delta}")
        if self.mode is Mode.EXTERNAL_INTERACTION:
            if self.p > N_INTERACTIONS:
                raise ValueError(f"interaction mode needs p <= {N_INTERACTIONS}, got {self.p}")
            if self.rho != 0.0:
                raise ValueError("interaction mode draws base covariates independently (rho=0)")
        if self.replications < 1:
            raise ValueError(f"replications must be positive, got {self.replications}")
        if self.cv_folds < 2:
            raise ValueError(f"cv_folds must be at least 2, got {self.cv_folds}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be non-negative, got {self.noise_sd}")

    @property
    def key(self) -> Tuple[str, float, float, int, int]:
        """Sort key (mode, mu_delta, rho, p, n)."""
        return (self.mode.value, self.mu_delta, self.rho, self.p, self.n)

    @property
    def scenario_id(self) -> str:
        """Stable identifier used to derive random streams."""
        tag = f"{self.mode.value}|mu={self.mu_delta!r}|rho={self.rho!r}|p={self.p}|n={self.n}"
        if self.noise_sd != 1.0:
            tag += f"|sd={self.noise_sd!r}"
        if self.zero_effect:
            tag += "|null"
        return tag


@dataclass
class GridSpec:
    """Grid values for one run; None means use the published values."""

    n: Optional[List[int]] = None
    p: Optional[List[int]] = None
    rho: Optional[List[float]] = None
    mu_delta: Optional[List[float]] = None
    interaction_n: Optional[List[int]] = None
    interaction_p: Optional[List[int]] = None

    def resolved(self) -> "GridSpec":
        """Return a copy with published defaults filled in."""
        return GridSpec(
            n=list(self.n) if self.n is not None else list(PUBLISHED_N),
            p=list(self.p) if self.p is not None else list(PUBLISHED_P),
            rho=list(self.rho) if self.rho is not None else list(PUBLISHED_RHO),
            mu_delta=list(self.mu_delta) if self.mu_delta is not None else list(PUBLISHED_MU_DELTA),
            interaction_n=(
                list(self.interaction_n)
                if self.interaction_n is not None
                else list(PUBLISHED_INTERACTION_N)
            ),
            interaction_p=(
                list(self.interaction_p)
                if self.interaction_p is not None
                else list(PUBLISHED_INTERACTION_P)
            ),
        )


@dataclass
class ComplexityConfig:
    """Scenario used for the per-patient complexity-class analysis."""

    enabled: bool = True
    mode: Mode = Mode.INTERNAL
    n: int = 500
    p: int = 45
    rho: float = 0.5
    mu_delta: float = 0.5

    def scenario(self, run_config: "RunConfig") -> ScenarioConfig:
        return ScenarioConfig(
            n=self.n,
            p=self.p,
            rho=self.rho,
            mu_delta=self.mu_delta,
            mode=self.mode,
            replications=1,
            master_seed=run_config.master_seed,
            learners=tuple(run_config.learners),
            cv_folds=run_config.cv_folds,
        )


@dataclass
class RunConfig:
    """Configuration for a full benchmark run."""

    modes: List[Mode]
    learners: List[str]
    preset: str = "custom"  # "published" or "custom"
    grid: GridSpec = field(default_factory=GridSpec)
    learner_grids: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    replications: int = 20
    master_seed: int = 0
    workers: int = 1
    cv_folds: int = 10
    output_dir: str = "results"
    dump_populations: bool = False
    complexity: ComplexityConfig = field(default_factory=ComplexityConfig)

    def to_dict(self) -> Dict[str, Any]:
        """Serializable form written to the run manifest."""
        data = asdict(self)
        data["modes"] = [m.value for m in self.modes]
        data["complexity"]["mode"] = self.complexity.mode.value
        return data
