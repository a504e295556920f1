"""Collaborative bandit instances, weighted global means and instance complexity."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-9


class TiedBestArm(ValueError):
    """The maximum global mean is attained by more than one arm."""


class RewardFamily(str, enum.Enum):
    BERNOULLI = "bernoulli"
    POINT_MASS = "point_mass"


@dataclass(frozen=True)
class WeightVector:
    """Importance weights of the K agents; non-negative and summing to one."""

    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        alphas = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if not alphas:
            raise ValueError("weight vector needs at least one agent")
        if any(not math.isfinite(a) or a < 0 for a in alphas):
            raise ValueError(f"weights must be finite and non-negative: {alphas}")
        total = math.fsum(alphas)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")

    @classmethod
    def uniform(cls, K: int) -> WeightVector:
        if K < 1:
            raise ValueError("K must be positive")
        return cls((1.0 / K,) * K)

    @classmethod
    def skewed(cls, K: int) -> WeightVector:
        """All weight on the first agent: (1, 0, ..., 0)."""
        if K < 1:
            raise ValueError("K must be positive")
        return cls((1.0,) + (0.0,) * (K - 1))

    @property
    def K(self) -> int:
        return len(self.alphas)

    @property
    def sum_sq(self) -> float:
        return math.fsum(a * a for a in self.alphas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alphas, dtype=float)


@dataclass(frozen=True, eq=False)
class Instance:
    """n arms by K agents of local means, plus the agents' weights.

    ``local_means[i, k]`` is the mean of arm ``i`` as seen by agent ``k``.
    The array is stored read-only so instances can be shared across workers.
    """

    local_means: np.ndarray
    weights: WeightVector
    reward_family: RewardFamily = RewardFamily.BERNOULLI

    def __post_init__(self) -> None:
        means = np.array(self.local_means, dtype=float)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValueError(f"local_means must be a non-empty n x K matrix, got shape {means.shape}")
        if not np.all(np.isfinite(means)) or means.min() < 0.0 or means.max() > 1.0:
            raise ValueError("every local mean must lie in [0, 1]")
        if not isinstance(self.weights, WeightVector):
            object.__setattr__(self, "weights", WeightVector(tuple(self.weights)))
        if self.weights.K != means.shape[1]:
            raise ValueError(f"{means.shape[1]} agent columns but {self.weights.K} weights")
        means.setflags(write=False)
        object.__setattr__(self, "local_means", means)
        object.__setattr__(self, "reward_family", RewardFamily(self.reward_family))

    @property
    def n(self) -> int:
        return self.local_means.shape[0]

    @property
    def K(self) -> int:
        return self.local_means.shape[1]

    def global_means(self) -> np.ndarray:
        # agent-by-agent accumulation, same order as global_mean()
        out = np.zeros(self.n)
        for k, a in enumerate(self.weights.alphas):
            out = out + a * self.local_means[:, k]
        return out

    def with_weights(self, weights: WeightVector) -> Instance:
        return Instance(self.local_means, weights, self.reward_family)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.weights == other.weights
            and self.reward_family == other.reward_family
            and np.array_equal(self.local_means, other.local_means)
        )

    __hash__ = None  # type: ignore[assignment]

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        # json writes floats with repr, which round-trips doubles exactly
        return {
            "n": self.n,
            "K": self.K,
            "weights": list(self.weights.alphas),
            "local_means": self.local_means.tolist(),
            "reward_family": self.reward_family.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Instance:
        extra = set(d) - {"n", "K", "weights", "local_means", "reward_family"}
        if extra:
            raise ValueError(f"unknown instance fields: {sorted(extra)}")
        inst = cls(
            np.asarray(d["local_means"], dtype=float),
            WeightVector(tuple(d["weights"])),
            RewardFamily(d.get("reward_family", RewardFamily.BERNOULLI.value)),
        )
        if "n" in d and d["n"] != inst.n or "K" in d and d["K"] != inst.K:
            raise ValueError("declared n/K do not match local_means")
        return inst

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Instance:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GapProfile:
    global_means: tuple[float, ...]
    best_index: int
    gaps: tuple[float, ...]
    H: float


def global_mean(instance: Instance, arm: int) -> float:
    """Weighted average of one arm's local means, sum_k alpha_k * mu[arm, k]."""
    if not 0 <= arm < instance.n:
        raise IndexError(f"arm {arm} out of range for n={instance.n}")
    total = 0.0
    for a, m in zip(instance.weights.alphas, instance.local_means[arm]):
        total = total + a * float(m)
    return total


def gap_profile(instance: Instance) -> GapProfile:
    """Gaps to the best arm and the instance complexity H = sum 1/gap^2.

    The best arm's own gap is its margin over the runner-up. Raises
    :class:`TiedBestArm` when the largest global mean is not unique.
    """
    return gap_profile_from_means(instance.global_means())


def gap_profile_from_means(mus: Sequence[float] | np.ndarray) -> GapProfile:
    mus = np.asarray(mus, dtype=float)
    best = int(np.argmax(mus))
    top = mus[best]
    if np.count_nonzero(mus == top) > 1:
        raise TiedBestArm(f"maximum global mean {top!r} is attained by several arms")
    if mus.size == 1:
        return GapProfile((float(top),), 0, (0.0,), 0.0)
    gaps = top - mus
    others = np.delete(gaps, best)
    gaps[best] = others.min()
    H = math.fsum((1.0 / (others * others)).tolist())
    return GapProfile(tuple(mus.tolist()), best, tuple(gaps.tolist()), H)


def sample_pull(instance: Instance, arm: int, agent: int, rng: np.random.Generator) -> float:
    """One reward for ``arm`` pulled by ``agent``."""
    if not 0 <= arm < instance.n or not 0 <= agent < instance.K:
        raise IndexError(f"(arm={arm}, agent={agent}) out of range")
    mu = float(instance.local_means[arm, agent])
    if instance.reward_family is RewardFamily.POINT_MASS:
        return mu
    return 1.0 if rng.random() < mu else 0.0


def reward_sums(
    instance: Instance, arms: np.ndarray, pulls: int, rng: np.random.Generator
) -> np.ndarray:
    """Summed rewards of ``pulls`` pulls of every listed arm at every agent.

    Returns a ``(len(arms), K)`` float array. For Bernoulli rewards the sum
    of ``pulls`` independent draws is drawn directly as a binomial, which has
    the same law as adding the individual outcomes.
    """
    means = instance.local_means[np.asarray(arms, dtype=np.intp)]
    if pulls <= 0:
        return np.zeros_like(means)
    if instance.reward_family is RewardFamily.POINT_MASS:
        return means * pulls
    return rng.binomial(pulls, means).astype(float)


def chernoff_tail(ranges: Iterable[tuple[float, float]], t: float) -> float:
    """Hoeffding bound exp(-2 t^2 / sum (b_i - a_i)^2) on a one-sided deviation of t."""
    ranges = list(ranges)
    if t < 0:
        raise ValueError("t must be non-negative")
    width_sq = 0.0
    for a, b in ranges:
        if b < a:
            raise ValueError(f"invalid range ({a}, {b})")
        width_sq += (b - a) ** 2
    if t == 0:
        return 1.0
    if width_sq == 0.0:
        # a sum of constants never deviates
        return 0.0
    return min(1.0, math.exp(-2.0 * t * t / width_sq))
