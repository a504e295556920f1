"""Round-based successive elimination for weighted non-IID collaborative BAI.

``run_col_learn`` keeps a surviving arm set. In round r every agent pulls
every survivor until it has T_{r+1} pulls of it; the agents' cumulative
empirical means are combined with the importance weights, and the top
n_{r+1} arms survive. After R rounds one arm is left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from .core import Instance, RewardFamily, TiedBestArm, WeightVector, gap_profile, reward_sums


@dataclass(frozen=True)
class RoundSchedule:
    R: int
    T: int
    T_r: tuple[int, ...]
    n_r: tuple[int, ...]

    @property
    def budget(self) -> int:
        """Pulls per agent: sum_r n_r (T_{r+1} - T_r)."""
        return sum(self.n_r[r] * (self.T_r[r + 1] - self.T_r[r]) for r in range(self.R))


@dataclass(frozen=True)
class AlgoResult:
    chosen_arm: int
    pulls_per_agent: int
    rounds_used: int
    reals_communicated: int
    success: bool
    degenerate: bool = False


def _floor_root(num: int, den: int, base: int, exp: int, R: int) -> int:
    """Exact floor(num * base^(exp/R) / den) for non-negative integers.

    Starts from a float estimate, then corrects it with the integer test
    c <= x  <=>  (c * den)^R <= num^R * base^exp.
    """
    if num == 0:
        return 0
    rhs = num**R * base**exp

    def fits(c: int) -> bool:
        return (c * den) ** R <= rhs

    est = num * math.exp(exp / R * math.log(base)) / den if base > 0 else 0.0
    c = max(0, int(math.floor(est)))
    while c > 0 and not fits(c):
        c -= 1
    while fits(c + 1):
        c += 1
    return c


def compute_schedule(n: int, R: int, T: int) -> RoundSchedule:
    """T_r = floor(n^(r/R) T / (n^(1+1/R) R)) and n_r = floor(n / n^(r/R)), n_R = 1."""
    if n < 1 or R < 1 or T < 0:
        raise ValueError(f"need n >= 1, R >= 1, T >= 0 (got n={n}, R={R}, T={T})")
    # n^(r/R) / n^(1+1/R) = n^((r-1)/R) / n, so T_r = floor(T n^((r-1)/R) / (n R))
    T_r = [0] + [_floor_root(T, n * R, n, r - 1, R) for r in range(1, R + 1)]
    n_r = [_floor_root(1, 1, n, R - r, R) for r in range(R)] + [1]
    return RoundSchedule(R=R, T=T, T_r=tuple(T_r), n_r=tuple(n_r))


def _truth(instance: Instance, best_arms: Collection[int] | None) -> frozenset[int]:
    if best_arms is not None:
        return frozenset(int(i) for i in best_arms)
    try:
        return frozenset({gap_profile(instance).best_index})
    except TiedBestArm:
        mus = instance.global_means()
        return frozenset(int(i) for i in np.flatnonzero(mus == mus.max()))


def run_col_learn(
    instance: Instance,
    R: int,
    T: int,
    rng: np.random.Generator,
    best_arms: Collection[int] | None = None,
) -> AlgoResult:
    """Run the R-round weighted elimination algorithm with per-agent horizon T.

    ``best_arms`` is the ground truth used for ``success``; by default it is
    the arm with the largest global mean.
    """
    sched = compute_schedule(instance.n, R, T)
    alphas = instance.weights.as_array()
    sums = np.zeros((instance.n, instance.K))
    alive = np.arange(instance.n)
    pulls = 0
    reals = 0
    degenerate = False
    for r in range(R):
        step = sched.T_r[r + 1] - sched.T_r[r]
        if step > 0:
            sums[alive] += reward_sums(instance, alive, step, rng)
            pulls += alive.size * step
        if sched.T_r[r + 1] == 0:
            degenerate = True
        # Every survivor has the same pull count, so ranking by the weighted
        # reward totals equals ranking by the weighted empirical means, and
        # skips a division that could split exact ties.
        score = sums[alive] @ alphas
        reals += instance.K * alive.size
        # stable order by (-estimate, arm index)
        order = np.lexsort((alive, -score))
        alive = np.sort(alive[order[: sched.n_r[r + 1]]])
    chosen = int(alive[0])
    return AlgoResult(
        chosen_arm=chosen,
        pulls_per_agent=pulls,
        rounds_used=R,
        reals_communicated=reals,
        success=chosen in _truth(instance, best_arms),
        degenerate=degenerate,
    )


def centralized_rounds(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def run_centralized_baseline(
    global_means: Sequence[float],
    T: int,
    rng: np.random.Generator,
    reward_family: RewardFamily = RewardFamily.BERNOULLI,
) -> AlgoResult:
    """Single agent running the same elimination with ceil(log2 n) rounds."""
    means = np.asarray(global_means, dtype=float).reshape(-1, 1)
    inst = Instance(means, WeightVector((1.0,)), reward_family)
    return run_col_learn(inst, centralized_rounds(inst.n), T, rng)


def run_two_arm_weighted(
    delta: float,
    weights: WeightVector,
    T: int,
    rng: np.random.Generator,
    point_mass: bool = False,
) -> bool:
    """Decide the sign of delta from T pulls per agent of a Bernoulli(1/2 + delta) arm.

    The reference arm's mean 1/2 is known. Success iff the weighted empirical
    mean lies strictly on the same side of 1/2 as delta; ties fail.
    """
    if not 0 < abs(delta) < 0.25:
        raise ValueError("|delta| must lie in (0, 0.25)")
    if T < 1:
        return False
    mu = 0.5 + delta
    if point_mass:
        counts = np.full(weights.K, mu * T)
    else:
        counts = rng.binomial(T, mu, size=weights.K).astype(float)
    y = float(counts @ weights.as_array())
    half = 0.5 * T
    if y == half:
        return False
    return (y > half) == (delta > 0)
