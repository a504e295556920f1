"""JSON experiment configs (``"schema": 1``). Unknown fields are errors."""

from __future__ import annotations

import itertools
import json
from pathlib import Path
from typing import Any, Iterator

from .core import Instance, WeightVector
from .hard import HardInstance, HardParams, derive_params
from .harness import (
    Centralized,
    ColLearn,
    ConfigError,
    ExperimentConfig,
    ExplicitSource,
    HardSource,
    TwoArmWeighted,
)
from .streams import derive_seed

SCHEMA_VERSION = 1
GRID_KEYS = ("T", "R", "K", "delta", "weights_preset")
WEIGHT_PRESETS = {"uniform": WeightVector.uniform, "skewed": WeightVector.skewed}


def load_json(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    return data


def check_keys(d: dict[str, Any], allowed: set[str], where: str, required: set[str] = frozenset()) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"missing field(s) in {where}: {', '.join(sorted(missing))}")


def check_schema(d: dict[str, Any]) -> None:
    if d.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f'config must declare "schema": {SCHEMA_VERSION}')


def parse_hard_params(d: dict[str, Any], where: str = "hard params") -> HardParams:
    check_keys(d, {"n", "R", "eta", "L"}, where, {"n"})
    n = int(d["n"])
    R = d.get("R")
    try:
        if R is None:
            if "eta" not in d or "L" not in d:
                raise ConfigError(f"{where}: give R, or both eta and L")
            return HardParams(n=n, L=int(d["L"]), eta=float(d["eta"]))
        return derive_params(n, int(R), eta=d.get("eta"), L=d.get("L"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


INSTANCE_KEYS = {
    "explicit": {"type", "n", "K", "local_means", "weights", "reward_family"},
    "hard": {"type", "n", "R", "eta", "L", "conditioned", "K", "fixed_instance_seed", "max_attempts"},
    "hard_instance": {"type", "params", "K", "bits"},
}


def parse_source(d: dict[str, Any]) -> ExplicitSource | HardSource:
    kind = d.get("type") if isinstance(d, dict) else None
    if kind not in INSTANCE_KEYS:
        raise ConfigError(f"instance.type must be one of {sorted(INSTANCE_KEYS)}")
    check_keys(d, INSTANCE_KEYS[kind], f"{kind} instance")
    body = {k: v for k, v in d.items() if k != "type"}
    try:
        if kind == "explicit":
            return ExplicitSource(Instance.from_dict(body))
        if kind == "hard_instance":
            return ExplicitSource(HardInstance.from_dict(body).instance)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{kind} instance: {exc}") from None
    params = parse_hard_params({k: body[k] for k in ("n", "R", "eta", "L") if k in body}, "hard instance")
    return HardSource(
        params,
        conditioned=bool(body.get("conditioned", True)),
        K=int(body.get("K", 2)),
        fixed_instance_seed=body.get("fixed_instance_seed"),
        max_attempts=int(body.get("max_attempts", 1000)),
    )


def _weights(d: dict[str, Any], where: str) -> WeightVector:
    if "weights" in d and "weights_preset" in d:
        raise ConfigError(f"{where}: give weights or weights_preset, not both")
    try:
        if "weights" in d:
            return WeightVector(tuple(d["weights"]))
        preset = d.get("weights_preset", "uniform")
        if preset not in WEIGHT_PRESETS:
            raise ConfigError(f"{where}: weights_preset must be one of {sorted(WEIGHT_PRESETS)}")
        return WEIGHT_PRESETS[preset](int(d.get("K", 1)))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_algorithm(d: dict[str, Any]):
    name = d.get("name") if isinstance(d, dict) else None
    if name == "col_learn":
        check_keys(d, {"name", "R"}, "algorithm", {"R"})
        return ColLearn(int(d["R"]))
    if name == "centralized":
        check_keys(d, {"name"}, "algorithm")
        return Centralized()
    if name == "two_arm_weighted":
        check_keys(d, {"name", "delta", "weights", "weights_preset", "K", "point_mass"}, "algorithm", {"delta"})
        delta = float(d["delta"])
        if not 0 < abs(delta) < 0.25:
            raise ConfigError("algorithm: |delta| must lie in (0, 0.25)")
        return TwoArmWeighted(delta, _weights(d, "algorithm"), bool(d.get("point_mass", False)))
    raise ConfigError("algorithm.name must be col_learn, centralized or two_arm_weighted")


EXPERIMENT_KEYS = {"schema", "experiment_id", "seed", "trials", "workers", "target", "T", "instance", "algorithm"}


def parse_experiment(
    d: dict[str, Any], seed: int | None = None, workers: int | None = None, allow_grid: bool = False
) -> ExperimentConfig:
    check_schema(d)
    allowed = EXPERIMENT_KEYS | ({"grid"} if allow_grid else set())
    required = {"seed", "trials", "algorithm"} | (set() if allow_grid and "T" in d.get("grid", {}) else {"T"})
    check_keys(d, allowed, "config", required)
    algorithm = parse_algorithm(d["algorithm"])
    source = parse_source(d["instance"]) if "instance" in d else None
    T = d.get("T", 0)
    try:
        return ExperimentConfig(
            algorithm=algorithm,
            T=tuple(T) if isinstance(T, list) else int(T),
            trials=int(d["trials"]),
            seed=int(d["seed"] if seed is None else seed),
            source=source,
            workers=int(d.get("workers", 1) if workers is None else workers),
            experiment_id=str(d.get("experiment_id", "experiment")),
            target=float(d.get("target", 0.9)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_grid(d: dict[str, Any]) -> dict[str, list]:
    grid = d.get("grid")
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("sweep config needs a non-empty grid object")
    check_keys(grid, set(GRID_KEYS), "grid")
    for k, v in grid.items():
        if not isinstance(v, list) or not v:
            raise ConfigError(f"grid dimension {k!r} must be a non-empty list")
    return {k: grid[k] for k in GRID_KEYS if k in grid}


def apply_grid_point(base: ExperimentConfig, point: dict[str, Any], seed: int) -> ExperimentConfig:
    alg, src = base.algorithm, base.source
    changes: dict[str, Any] = {"seed": seed}
    if "T" in point:
        changes["T"] = (int(point["T"]),)
    if "R" in point:
        if not isinstance(alg, ColLearn):
            raise ConfigError("grid over R needs the col_learn algorithm")
        alg = ColLearn(int(point["R"]))
    if "delta" in point:
        if not isinstance(alg, TwoArmWeighted):
            raise ConfigError("grid over delta needs the two_arm_weighted algorithm")
        alg = TwoArmWeighted(float(point["delta"]), alg.weights, alg.point_mass)
    if "K" in point or "weights_preset" in point:
        preset = point.get("weights_preset")
        if isinstance(alg, TwoArmWeighted):
            K = int(point.get("K", alg.weights.K))
            weights = WEIGHT_PRESETS[preset or "uniform"](K) if preset or "K" in point else alg.weights
            alg = TwoArmWeighted(alg.delta, weights, alg.point_mass)
        elif isinstance(src, HardSource):
            if preset not in (None, "uniform"):
                raise ConfigError("hard instances always use uniform weights")
            if "K" in point:
                src = HardSource(src.params, src.conditioned, int(point["K"]), src.fixed_instance_seed, src.max_attempts)
        elif isinstance(src, ExplicitSource):
            if "K" in point and int(point["K"]) != src.instance.K:
                raise ConfigError("K of an explicit instance is fixed by its local_means")
            if preset is not None:
                if preset not in WEIGHT_PRESETS:
                    raise ConfigError(f"unknown weights_preset {preset!r}")
                src = ExplicitSource(src.instance.with_weights(WEIGHT_PRESETS[preset](src.instance.K)))
    label = "/".join(f"{k}={v}" for k, v in point.items())
    changes.update(algorithm=alg, source=src, experiment_id=f"{base.experiment_id}/{label}")
    try:
        return base.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def expand_sweep(d: dict[str, Any], seed: int | None = None, workers: int | None = None) -> Iterator[ExperimentConfig]:
    """Grid points in row-major order over GRID_KEYS (later keys vary fastest).

Point g gets seed derive_seed(master, g) and an experiment_id suffixed
with its coordinates.
"""
    base = parse_experiment(d, seed=seed, workers=workers, allow_grid=True)
    grid = parse_grid(d)
    keys = list(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    configs = [apply_grid_point(base, p, derive_seed(base.seed, g)) for g, p in enumerate(points)]
    return iter(configs)
