"""Seeded Monte Carlo runner for collaborative BAI experiments.

Trial ``i`` of an experiment with master seed ``s`` draws its instance from
stream ``(s; i, 0)`` and its rewards from stream ``(s; i, 1)`` (see
:mod:`colbai.streams`). Outcomes are therefore independent of how trials are
scheduled across worker threads, and every horizon of a T-grid reuses the
same per-trial streams (common random numbers).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import streams
from .algorithms import centralized_rounds, run_centralized_baseline, run_col_learn, run_two_arm_weighted
from .core import Instance, TiedBestArm, WeightVector, gap_profile
from .hard import HardInstance, HardParams, RejectionBudgetExhausted, sample_conditioned, sample_hard_instance

DEFAULT_TARGET = 0.9

TRIAL_COLUMNS = (
    "experiment_id", "trial_index", "seed", "n", "K", "R", "T", "algorithm", "instance_source",
    "success", "pulls_per_agent", "rounds_used", "reals_communicated", "instance_H",
)
SUMMARY_COLUMNS = (
    "experiment_id", "T", "trials", "successes", "success_rate",
    "wilson_lo", "wilson_hi", "mean_pulls", "speedup",
)


class ConfigError(ValueError):
    pass


class TargetUnreachable(RuntimeError):
    pass


# -- configuration --------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitSource:
    instance: Instance


@dataclass(frozen=True)
class HardSource:
    params: HardParams
    conditioned: bool = True
    K: int = 2
    fixed_instance_seed: int | None = None
    max_attempts: int = 1000


@dataclass(frozen=True)
class ColLearn:
    R: int


@dataclass(frozen=True)
class Centralized:
    pass


@dataclass(frozen=True)
class TwoArmWeighted:
    delta: float
    weights: WeightVector
    point_mass: bool = False


Source = Union[ExplicitSource, HardSource]
Algorithm = Union[ColLearn, Centralized, TwoArmWeighted]


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: Algorithm
    T: tuple[int, ...]
    trials: int
    seed: int
    source: Source | None = None
    workers: int = 1
    experiment_id: str = "experiment"
    target: float = DEFAULT_TARGET

    def __post_init__(self) -> None:
        T = (self.T,) if isinstance(self.T, int) else tuple(int(t) for t in self.T)
        object.__setattr__(self, "T", T)
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not T:
            raise ConfigError("T grid must not be empty")
        if any(t < 0 for t in T) or any(b <= a for a, b in zip(T, T[1:])):
            raise ConfigError(f"T grid must be non-negative and strictly increasing: {T}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 < self.target <= 1:
            raise ConfigError("target must lie in (0, 1]")
        streams.check_seed(self.seed)
        if isinstance(self.algorithm, TwoArmWeighted):
            if self.source is not None:
                raise ConfigError("the two-arm experiment defines its own instance; drop the source")
        elif self.source is None:
            raise ConfigError(f"{type(self.algorithm).__name__} needs an instance source")
        if isinstance(self.source, HardSource) and (self.source.K < 2 or self.source.K % 2):
            raise ConfigError("hard instances need an even K >= 2")
        if isinstance(self.algorithm, ColLearn) and self.algorithm.R < 1:
            raise ConfigError("R must be at least 1")

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    # shape columns shared by every trial row
    @property
    def n(self) -> int:
        if isinstance(self.algorithm, TwoArmWeighted):
            return 2
        if isinstance(self.source, ExplicitSource):
            return self.source.instance.n
        return self.source.params.n

    @property
    def K(self) -> int:
        if isinstance(self.algorithm, TwoArmWeighted):
            return self.algorithm.weights.K
        if isinstance(self.algorithm, Centralized):
            return 1
        if isinstance(self.source, ExplicitSource):
            return self.source.instance.K
        return self.source.K

    @property
    def R(self) -> int:
        if isinstance(self.algorithm, ColLearn):
            return self.algorithm.R
        if isinstance(self.algorithm, Centralized):
            return centralized_rounds(self.n)
        return 1

    @property
    def algorithm_name(self) -> str:
        return {ColLearn: "col_learn", Centralized: "centralized", TwoArmWeighted: "two_arm_weighted"}[
            type(self.algorithm)
        ]

    @property
    def source_name(self) -> str:
        if isinstance(self.algorithm, TwoArmWeighted):
            return "two_arm"
        if isinstance(self.source, ExplicitSource):
            return "explicit"
        return "hard_conditioned" if self.source.conditioned else "hard"


# -- results --------------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    T: int
    success: bool
    pulls_per_agent: int
    rounds_used: int
    reals_communicated: int
    instance_H: float | None
    chosen_arm: int | None = None
    error: str | None = None


@dataclass(frozen=True)
class SummaryStats:
    T: int
    trials: int
    successes: int
    success_rate: float
    wilson_lo: float
    wilson_hi: float
    mean_pulls: float
    mean_H: float | None
    speedup: float | None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    outcomes: list[TrialOutcome]
    summaries: list[SummaryStats]

    @property
    def time_to_target(self) -> int | None:
        """Smallest grid horizon whose Wilson lower bound reaches the target."""
        for s in self.summaries:
            if s.wilson_lo >= self.config.target:
                return s.T
        return None

    @property
    def speedup(self) -> float | None:
        for s in self.summaries:
            if s.wilson_lo >= self.config.target:
                return s.speedup
        return None


# -- statistics ------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials, trials >= 1 (got {successes}/{trials})")
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def pooled_se(s1: int, n1: int, s2: int, n2: int) -> float:
    """Standard error of a difference of two proportions under the pooled null."""
    p = (s1 + s2) / (n1 + n2)
    return math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))


def at_least(s_a: int, n_a: int, s_b: int, n_b: int, z: float = 2.0) -> bool:
    """rate_a >= rate_b - z * pooled SE."""
    return s_a / n_a >= s_b / n_b - z * pooled_se(s_a, n_a, s_b, n_b)


def compute_speedup(H: float, T_at_target: float) -> float:
    if not T_at_target > 0:
        raise ValueError("horizon must be positive")
    if not H > 0:
        raise ValueError("instance complexity must be positive")
    return H / T_at_target


# -- trial execution -----------------------------------------------------------


@dataclass(frozen=True)
class _Drawn:
    instance: Instance
    truth: frozenset[int] | None
    H: float | None


def _instance_H(instance: Instance) -> float | None:
    try:
        return gap_profile(instance).H
    except TiedBestArm:
        return None


def _from_hard(hi: HardInstance) -> _Drawn:
    truth = hi.best_arms if len(hi.best_arms) == 1 else hi.top_arms()
    H = _instance_H(hi.instance) if len(hi.best_arms) == 1 else None
    return _Drawn(hi.instance, truth, H)


def _draw_hard(src: HardSource, rng: np.random.Generator) -> _Drawn:
    if src.conditioned:
        hi = sample_conditioned(src.params, rng, src.max_attempts, K=src.K)
    else:
        hi = sample_hard_instance(src.params, rng, K=src.K)
    return _from_hard(hi)


class _Runner:
    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.fixed: _Drawn | None = None
        self.H: float | None = None
        src = config.source
        if isinstance(src, ExplicitSource):
            self.fixed = _Drawn(src.instance, None, _instance_H(src.instance))
        elif isinstance(src, HardSource) and src.fixed_instance_seed is not None:
            self.fixed = _draw_hard(src, streams.make_stream(src.fixed_instance_seed))
        if isinstance(config.algorithm, TwoArmWeighted):
            self.H = 1.0 / config.algorithm.delta**2

    def run_T(self, T: int) -> list[TrialOutcome]:
        factory = streams.StreamFactory(self.config.seed)

        def one(i: int) -> TrialOutcome:
            return self._trial(i, T, factory)

        idx = range(self.config.trials)
        if self.config.workers == 1:
            out = [one(i) for i in idx]
        else:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                out = list(pool.map(one, idx))
        return sorted(out, key=lambda o: o.trial_index)

    def _trial(self, i: int, T: int, factory: streams.StreamFactory) -> TrialOutcome:
        cfg = self.config
        alg = cfg.algorithm
        if isinstance(alg, TwoArmWeighted):
            rng = factory.stream(i, streams.ALGORITHM)
            ok = run_two_arm_weighted(alg.delta, alg.weights, T, rng, point_mass=alg.point_mass)
            return TrialOutcome(i, T, ok, T, 1, alg.weights.K, self.H)
        try:
            if self.fixed is not None:
                drawn = self.fixed
            else:
                drawn = _draw_hard(cfg.source, factory.stream(i, streams.INSTANCE))
        except RejectionBudgetExhausted as exc:
            return TrialOutcome(i, T, False, 0, 0, 0, None, error=f"RejectionBudgetExhausted: {exc}")
        rng = factory.stream(i, streams.ALGORITHM)
        if isinstance(alg, ColLearn):
            res = run_col_learn(drawn.instance, alg.R, T, rng, best_arms=drawn.truth)
        else:
            res = run_centralized_baseline(drawn.instance.global_means(), T, rng, drawn.instance.reward_family)
            if drawn.truth is not None:
                res = dataclasses.replace(res, success=res.chosen_arm in drawn.truth)
        return TrialOutcome(
            i, T, res.success, res.pulls_per_agent, res.rounds_used, res.reals_communicated, drawn.H, res.chosen_arm
        )


def summarize(outcomes: Sequence[TrialOutcome], T: int, target: float = DEFAULT_TARGET) -> SummaryStats:
    outcomes = sorted(outcomes, key=lambda o: o.trial_index)
    n = len(outcomes)
    k = sum(o.success for o in outcomes)
    lo, hi = wilson_interval(k, n)
    hs = [o.instance_H for o in outcomes if o.instance_H is not None]
    mean_H = math.fsum(hs) / len(hs) if hs else None
    speedup = None
    if lo >= target and mean_H and T > 0:
        speedup = compute_speedup(mean_H, T)
    return SummaryStats(
        T=T,
        trials=n,
        successes=k,
        success_rate=k / n,
        wilson_lo=lo,
        wilson_hi=hi,
        mean_pulls=math.fsum(o.pulls_per_agent for o in outcomes) / n,
        mean_H=mean_H,
        speedup=speedup,
    )


def run_trials(config: ExperimentConfig) -> ExperimentResult:
    """Run ``config.trials`` seeded trials at every horizon of the T grid."""
    runner = _Runner(config)
    outcomes: list[TrialOutcome] = []
    summaries: list[SummaryStats] = []
    for T in config.T:
        batch = runner.run_T(T)
        outcomes.extend(batch)
        summaries.append(summarize(batch, T, config.target))
    return ExperimentResult(config, outcomes, summaries)


def time_to_target(
    config: ExperimentConfig,
    target: float = DEFAULT_TARGET,
    T_lo: int = 1,
    T_hi: int = 1_000_000,
    grid: Sequence[int] | None = None,
) -> int:
    """Smallest horizon whose Wilson lower bound on success reaches ``target``.

    Assumes success is non-decreasing in T. Every probe runs ``config.trials``
    trials with ``config.seed``. With a ``grid`` the grid is scanned in order;
    otherwise integer bisection on [T_lo, T_hi].
    """
    cache: dict[int, bool] = {}

    def meets(T: int) -> bool:
        if T not in cache:
            res = run_trials(config.replace(T=(T,), target=target))
            cache[T] = res.summaries[0].wilson_lo >= target
        return cache[T]

    if grid is not None:
        for T in sorted(grid):
            if meets(T):
                return T
        raise TargetUnreachable(f"no horizon in the grid reaches success {target}")
    if T_lo > T_hi:
        raise ValueError("T_lo must not exceed T_hi")
    if not meets(T_hi):
        raise TargetUnreachable(f"success {target} not reached at T_hi={T_hi}")
    if meets(T_lo):
        return T_lo
    lo, hi = T_lo, T_hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ProbePoint:
    budget: int
    successes: int
    trials: int
    success_rate: float
    wilson_lo: float
    wilson_hi: float


def hardness_probe(
    params: HardParams,
    K: int,
    R: int,
    budgets: Sequence[int],
    trials: int,
    seed: int,
    workers: int = 1,
    max_attempts: int = 1000,
) -> list[ProbePoint]:
    """Success of the R-round algorithm on conditioned hard instances per budget."""
    cfg = ExperimentConfig(
        algorithm=ColLearn(R),
        T=tuple(budgets),
        trials=trials,
        seed=seed,
        source=HardSource(params, conditioned=True, K=K, max_attempts=max_attempts),
        workers=workers,
        experiment_id="hardness_probe",
    )
    res = run_trials(cfg)
    failed = next((o.error for o in res.outcomes if o.error), None)
    if failed:
        raise RejectionBudgetExhausted(failed)
    return [
        ProbePoint(s.T, s.successes, s.trials, s.success_rate, s.wilson_lo, s.wilson_hi) for s in res.summaries
    ]


def curve_nondecreasing(points: Sequence[ProbePoint], z: float = 2.0) -> bool:
    """Each point's rate is at least the previous one's minus z pooled SEs."""
    return all(at_least(b.successes, b.trials, a.successes, a.trials, z) for a, b in zip(points, points[1:]))


# -- CSV ------------------------------------------------------------------------


def _fmt(v: object) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trial_rows(result: ExperimentResult) -> list[list[str]]:
    cfg = result.config
    rows = []
    for o in result.outcomes:
        rows.append([_fmt(v) for v in (
            cfg.experiment_id, o.trial_index, cfg.seed, cfg.n, cfg.K, cfg.R, o.T, cfg.algorithm_name,
            cfg.source_name, o.success, o.pulls_per_agent, o.rounds_used, o.reals_communicated, o.instance_H,
        )])
    return rows


def summary_rows(result: ExperimentResult) -> list[list[str]]:
    cfg = result.config
    return [
        [_fmt(v) for v in (
            cfg.experiment_id, s.T, s.trials, s.successes, s.success_rate,
            s.wilson_lo, s.wilson_hi, s.mean_pulls, s.speedup,
        )]
        for s in result.summaries
    ]


def write_csv(columns: Sequence[str], rows: Sequence[Sequence[str]], header_line: str | None = None) -> str:
    buf = io.StringIO()
    if header_line:
        buf.write(f"# {header_line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()
