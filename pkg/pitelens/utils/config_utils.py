"""
Run configuration loading and validation.

A run config is a YAML document merged over DEFAULT_RUN_CONFIG and then
validated field by field; every violation is collected before raising.
"""

import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from pitelens.core.learners import LEARNER_IDS, get_learner
from pitelens.models.config import ComplexityConfig, GridSpec, Mode, RunConfig
from pitelens.utils.errors import ConfigValidationError, ResultsIOError

OUTPUT_DIR_ENV = "PITELENS_OUTPUT_DIR"

DEFAULT_RUN_CONFIG: Dict[str, Any] = {
    "modes": ["internal"],
    "preset": "published",
    "grid": {},
    "learners": list(LEARNER_IDS),
    "learner_grids": {},
    "replications": 20,
    "master_seed": 20240101,
    "workers": None,  # all available cores
    "cv_folds": 10,
    "output_dir": "results",
    "dump_populations": False,
    "complexity": {},
}

GRID_KEYS = ["n", "p", "rho", "mu_delta", "interaction_n", "interaction_p"]
INT_GRID_KEYS = {"n", "p", "interaction_n", "interaction_p"}
COMPLEXITY_KEYS = ["enabled", "mode", "n", "p", "rho", "mu_delta"]


def merge_configs(default_config: Dict[str, Any], custom_config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge custom configuration with default configuration.

    Custom config values override defaults; nested dicts (grid, complexity,
    learner_grids) are merged one level deep. None values are ignored.

    Args:
        default_config: Default configuration dict
        custom_config: Custom configuration dict (overrides defaults)

    Returns:
        Merged configuration dict
    """
    merged = dict(default_config)
    for key, value in custom_config.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def load_config_file(config_path: Path) -> Dict[str, Any]:
    """
    Read a YAML config file.

    Raises:
        ResultsIOError: File missing or unreadable
        ConfigValidationError: Not a YAML mapping
    """
    config_path = Path(config_path)
    if not config_path.is_file():
        raise ResultsIOError(f"config file not found: {config_path}")
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ResultsIOError(f"cannot read config file {config_path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigValidationError([f"config: invalid YAML: {e}"]) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigValidationError(["config: top level must be a mapping"])
    return data


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _validate_grid(grid: Any, errors: List[str]) -> Optional[GridSpec]:
    if not isinstance(grid, dict):
        errors.append("grid: must be a mapping")
        return None
    values: Dict[str, Any] = {}
    for key, raw in grid.items():
        if key not in GRID_KEYS:
            errors.append(f"grid.{key}: unknown field (expected one of {', '.join(GRID_KEYS)})")
            continue
        items = raw if isinstance(raw, list) else [raw]
        if not items:
            errors.append(f"grid.{key}: must not be empty")
            continue
        check = _is_int if key in INT_GRID_KEYS else _is_number
        bad = [v for v in items if not check(v)]
        if bad:
            kind = "integers" if key in INT_GRID_KEYS else "finite numbers"
            errors.append(f"grid.{key}: values must be {kind}, got {bad}")
            continue
        if key in ("n", "interaction_n") and any(v < 2 or v % 2 for v in items):
            errors.append(f"grid.{key}: subject counts must be even and >= 2, got {items}")
        if key in ("p", "interaction_p") and any(v < 1 for v in items):
            errors.append(f"grid.{key}: dimensions must be positive, got {items}")
        if key == "interaction_p" and any(v > 63 for v in items):
            errors.append(f"grid.interaction_p: at most 63 interaction columns, got {items}")
        if key == "rho" and any(not (0 <= v < 1) for v in items):
            errors.append(f"grid.rho: correlations must lie in [0, 1), got {items}")
        values[key] = [int(v) if key in INT_GRID_KEYS else float(v) for v in items]
    return GridSpec(**values)


def _validate_complexity(raw: Any, errors: List[str]) -> ComplexityConfig:
    if not isinstance(raw, dict):
        errors.append("complexity: must be a mapping")
        return ComplexityConfig()
    unknown = [k for k in raw if k not in COMPLEXITY_KEYS]
    if unknown:
        errors.append(f"complexity: unknown fields {unknown}")
    default = ComplexityConfig()
    try:
        cfg = ComplexityConfig(
            enabled=bool(raw.get("enabled", default.enabled)),
            mode=Mode(raw.get("mode", default.mode.value)),
            n=int(raw.get("n", default.n)),
            p=int(raw.get("p", default.p)),
            rho=float(raw.get("rho", default.rho)),
            mu_delta=float(raw.get("mu_delta", default.mu_delta)),
        )
        # ScenarioConfig enforces the scenario constraints (even n, rho range, ...)
        cfg.scenario(RunConfig(modes=[cfg.mode], learners=[]))
    except (TypeError, ValueError) as e:
        errors.append(f"complexity: {e}")
        return default
    return cfg


def validate_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a merged config dict and build a RunConfig.

    Raises:
        ConfigValidationError: With one message per invalid field
    """
    errors: List[str] = []

    unknown = sorted(set(data) - set(DEFAULT_RUN_CONFIG))
    for key in unknown:
        errors.append(f"{key}: unknown field")

    modes_raw = data.get("modes")
    modes: List[Mode] = []
    if isinstance(modes_raw, str):
        modes_raw = [modes_raw]
    if not isinstance(modes_raw, list) or not modes_raw:
        errors.append("modes: must be a non-empty list")
    else:
        for m in modes_raw:
            try:
                mode = Mode(m)
            except ValueError:
                errors.append(f"modes: unknown mode '{m}' (expected one of {', '.join(x.value for x in Mode)})")
                continue
            if mode not in modes:
                modes.append(mode)

    preset = data.get("preset")
    if preset not in ("published", "custom"):
        errors.append(f"preset: must be 'published' or 'custom', got {preset!r}")

    learners = data.get("learners")
    if not isinstance(learners, list) or not learners:
        errors.append("learners: must be a non-empty list of learner ids")
        learners = []
    else:
        for lid in learners:
            if lid not in LEARNER_IDS:
                errors.append(f"learners: unknown learner '{lid}'")
        if len(set(learners)) != len(learners):
            errors.append("learners: duplicate learner ids")

    learner_grids = data.get("learner_grids") or {}
    if not isinstance(learner_grids, dict):
        errors.append("learner_grids: must be a mapping of learner id to grid overrides")
        learner_grids = {}
    for lid, overrides in learner_grids.items():
        if lid not in LEARNER_IDS:
            errors.append(f"learner_grids: unknown learner '{lid}'")
            continue
        if not isinstance(overrides, dict):
            errors.append(f"learner_grids.{lid}: must be a mapping")
            continue
        allowed = set(get_learner(lid).default_grid) | {"lambdas", "components"}
        for key in overrides:
            if key not in allowed:
                errors.append(f"learner_grids.{lid}.{key}: unknown hyperparameter")

    for key, minimum in (("replications", 1), ("cv_folds", 2)):
        value = data.get(key)
        if not _is_int(value) or value < minimum:
            errors.append(f"{key}: must be an integer >= {minimum}, got {value!r}")

    seed = data.get("master_seed")
    if not _is_int(seed) or not (0 <= seed < 2**64):
        errors.append(f"master_seed: must be an integer in [0, 2^64), got {seed!r}")

    workers = data.get("workers")
    if workers is None:
        workers = os.cpu_count() or 1
    elif not _is_int(workers) or workers < 1:
        errors.append(f"workers: must be a positive integer, got {workers!r}")

    output_dir = data.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        errors.append("output_dir: must be a non-empty path")

    if not isinstance(data.get("dump_populations"), bool):
        errors.append("dump_populations: must be true or false")

    grid = _validate_grid(data.get("grid") or {}, errors)
    complexity = _validate_complexity(data.get("complexity") or {}, errors)

    if errors:
        raise ConfigValidationError(errors)

    return RunConfig(
        modes=modes,
        learners=list(learners),
        preset=preset,
        grid=grid or GridSpec(),
        learner_grids={k: dict(v) for k, v in learner_grids.items()},
        replications=data["replications"],
        master_seed=seed,
        workers=workers,
        cv_folds=data["cv_folds"],
        output_dir=output_dir,
        dump_populations=data["dump_populations"],
        complexity=complexity,
    )


def load_run_config(config_path: Path) -> RunConfig:
    """Load, merge over defaults and validate a run config file."""
    return validate_run_config(merge_configs(DEFAULT_RUN_CONFIG, load_config_file(config_path)))


def resolve_output_dir(config: RunConfig, override: Optional[str] = None) -> Path:
    """Output directory: CLI override, then PITELENS_OUTPUT_DIR, then the config value."""
    if override:
        return Path(override)
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        return Path(env_dir)
    return Path(config.output_dir)
