"""
Synthetic trial populations.

Covariates are equicorrelated Gaussians, outcomes are linear in the covariates,
and treatment is assigned to exactly half of the subjects by random permutation.
The interaction variant expands six independent base covariates into all 63
product terms and lets a random subset of them carry the treatment effect.
"""

from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from pitelens.models.config import N_BASE, N_INTERACTIONS, Mode, ScenarioConfig
from pitelens.models.records import Population
from pitelens.utils.errors import InvalidParameterError
from pitelens.utils.report_utils import write_csv

BETA0_SD = 0.1
BETA_DELTA_SD = 0.01


def equicorrelation_factor(p: int, rho: float) -> np.ndarray:
    """Lower Cholesky factor of the p x p matrix with unit diagonal and off-diagonal rho."""
    if p < 1:
        raise InvalidParameterError(f"p must be positive, got {p}")
    if not (0.0 <= rho < 1.0):
        raise InvalidParameterError(f"rho must be in [0, 1), got {rho}")
    sigma = np.full((p, p), float(rho))
    np.fill_diagonal(sigma, 1.0)
    return linalg.cholesky(sigma, lower=True)


def sample_covariates(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows i.i.d. from N_p(0, Sigma) with equicorrelation rho."""
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    factor = equicorrelation_factor(p, rho)
    z = rng.standard_normal((n, p))
    return z @ factor.T


def draw_coefficients(
    p: int, mu_delta: float, rng: np.random.Generator, p_base: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw baseline and effect coefficients.

    Args:
        p: Length of beta_delta
        mu_delta: Mean of the effect coefficients
        rng: Random stream
        p_base: Length of beta0 (defaults to p)

    Returns:
        (beta0 ~ N(0, 0.1^2), beta_delta ~ N(mu_delta, 0.01^2))
    """
    p_base = p if p_base is None else p_base
    if p < 1 or p_base < 1:
        raise InvalidParameterError(f"coefficient dimensions must be positive, got {p}, {p_base}")
    beta0 = rng.normal(0.0, BETA0_SD, size=p_base)
    beta_delta = rng.normal(mu_delta, BETA_DELTA_SD, size=p)
    return beta0, beta_delta


def _subset_masks() -> np.ndarray:
    return np.arange(1, N_INTERACTIONS + 1)


def expand_interactions(X6: np.ndarray) -> np.ndarray:
    """
    Expand six base covariates into all 63 nonempty products.

    Column k-1 holds the product over the covariates whose bits are set in
    bitmask k, with bit j standing for base column j.
    """
    X6 = np.asarray(X6, dtype=float)
    if X6.ndim != 2 or X6.shape[1] != N_BASE:
        raise InvalidParameterError(
            f"interaction expansion needs exactly {N_BASE} columns, got shape {X6.shape}"
        )
    out = np.empty((X6.shape[0], N_INTERACTIONS))
    for col, mask in enumerate(_subset_masks()):
        members = [j for j in range(N_BASE) if mask >> j & 1]
        out[:, col] = np.prod(X6[:, members], axis=1)
    return out


def select_interaction_subset(p: int, rng: np.random.Generator) -> np.ndarray:
    """Pick p distinct expansion columns uniformly without replacement (sorted)."""
    if not (1 <= p <= N_INTERACTIONS):
        raise InvalidParameterError(f"interaction subset size must be in 1..{N_INTERACTIONS}, got {p}")
    return np.sort(rng.choice(N_INTERACTIONS, size=p, replace=False))


def assign_treatment(n: int, rng: np.random.Generator) -> np.ndarray:
    """Treat exactly n/2 subjects chosen by random permutation."""
    if n % 2 != 0:
        raise InvalidParameterError(f"n must be even to keep arms balanced, got {n}")
    T = np.zeros(n, dtype=np.int64)
    T[rng.permutation(n)[: n // 2]] = 1
    return T


def generate_population(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    *,
    beta0: Optional[np.ndarray] = None,
    subset: Optional[np.ndarray] = None,
) -> Population:
    """
    Generate one population for a scenario.

    Args:
        cfg: Scenario parameters
        rng: Random stream for this population
        beta0: Baseline coefficients to reuse instead of the drawn ones
        subset: Interaction columns to reuse (interaction mode only)

    Returns:
        Population with y_obs = f0 + eps + T * delta
    """
    n = cfg.n
    if n % 2 != 0:
        raise InvalidParameterError(f"n must be even to keep arms balanced, got {n}")

    if cfg.mode is Mode.EXTERNAL_INTERACTION:
        base_X = sample_covariates(n, N_BASE, 0.0, rng)
        X = expand_interactions(base_X)
        drawn_subset = select_interaction_subset(cfg.p, rng)
        subset = drawn_subset if subset is None else np.asarray(subset, dtype=np.intp)
        drawn_beta0, beta_delta = draw_coefficients(cfg.p, cfg.mu_delta, rng, p_base=N_BASE)
        f0_X = base_X
        effect_X = X[:, subset]
    else:
        base_X = None
        X = sample_covariates(n, cfg.p, cfg.rho, rng)
        drawn_beta0, beta_delta = draw_coefficients(cfg.p, cfg.mu_delta, rng)
        f0_X = X
        effect_X = X

    beta0 = drawn_beta0 if beta0 is None else np.asarray(beta0, dtype=float)
    if beta0.shape[0] != f0_X.shape[1]:
        raise InvalidParameterError(
            f"beta0 has length {beta0.shape[0]}, expected {f0_X.shape[1]}"
        )
    if cfg.zero_effect:
        beta_delta = np.zeros_like(beta_delta)

    T = assign_treatment(n, rng)
    eps = rng.standard_normal(n) * cfg.noise_sd

    f0 = f0_X @ beta0
    delta = effect_X @ beta_delta
    y_obs = f0 + eps + T * delta

    return Population(
        ids=np.arange(n),
        X=X,
        T=T,
        y_obs=y_obs,
        delta_true=delta,
        f0_true=f0,
        beta0=beta0,
        beta_delta=beta_delta,
        base_X=base_X,
        subset=subset if cfg.mode is Mode.EXTERNAL_INTERACTION else None,
    )


def population_frame(pop: Population) -> pd.DataFrame:
    """Tabular form `id,T,y_obs,delta_true,x1..xp`."""
    data = {
        "id": pop.ids,
        "T": pop.T,
        "y_obs": pop.y_obs,
        "delta_true": pop.delta_true,
    }
    for j in range(pop.X.shape[1]):
        data[f"x{j + 1}"] = pop.X[:, j]
    return pd.DataFrame(data)


def dump_population(pop: Population, path: str) -> str:
    """Write a population to CSV at full double precision."""
    return write_csv(population_frame(pop), path)
