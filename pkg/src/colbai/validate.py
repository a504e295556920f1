"""Numerical checks of the hard distribution's stated properties."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import streams
from .hard import (
    HardParams,
    conditioned_acceptance_rate,
    estimate_conditional_H,
    estimate_pr_E0,
    exact_pr_E0,
    log_likelihood,
    mean_gap_violations,
)

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def conditional_H_bound(params: HardParams) -> float:
    """Upper bound on E[H | unique best arm].

    eta^(2+2L) L when eta^(2L) = n; otherwise the same level-partition
    argument gives (n-1)(eta^2-1) L / (1 - eta^(-2L)).
    """
    if params.canonical:
        return params.eta ** (2 + 2 * params.L) * params.L
    q = params.eta ** (-2 * params.L)
    return (params.n - 1) * (params.eta**2 - 1) * params.L / (1 - q)


def acceptance_floor(params: HardParams) -> float:
    """Lower bound on the conditioned sampler's acceptance probability (Markov)."""
    if params.canonical:
        return 1 / (2 * math.e)
    return exact_pr_E0(params) * max(0.0, 1 - conditional_H_bound(params) / params.complexity_cap)


def likelihood_mass(q: int, x: float) -> float:
    """Total probability of all 2^q outcome sequences, summed one sequence at a time."""
    return math.fsum(math.exp(log_likelihood(theta, x)) for theta in itertools.product((0, 1), repeat=q))


def check_pr_E0(params: HardParams, samples: int, rng: np.random.Generator, z: float = 4.0) -> CheckResult:
    exact = exact_pr_E0(params)
    est, _ = estimate_pr_E0(params, samples, rng)
    se = math.sqrt(exact * (1 - exact) / samples)
    ok = abs(est - exact) <= z * se
    return CheckResult("pr_E0", ok, f"estimate={est:.6f} exact={exact:.6f} tol={z * se:.6f}")


def check_conditional_H(params: HardParams, samples: int, rng: np.random.Generator) -> CheckResult:
    mean, se = estimate_conditional_H(params, samples, rng)
    bound = conditional_H_bound(params)
    ok = mean - 2 * se <= bound
    return CheckResult("conditional_H", ok, f"mean={mean:.2f} se={se:.2f} bound={bound:.2f}")


def check_acceptance(params: HardParams, attempts: int, rng: np.random.Generator) -> CheckResult:
    rate, se = conditioned_acceptance_rate(params, attempts, rng)
    floor = acceptance_floor(params)
    ok = rate + 2 * se >= floor
    return CheckResult("conditioned_acceptance", ok, f"rate={rate:.4f} se={se:.4f} floor={floor:.4f}")


PAIR_WALK_MAX_L = 12


def check_mean_gaps(eta: float, L: int) -> CheckResult:
    # walk every pair while that is cheap, else the equivalent difference vectors
    bad = mean_gap_violations(eta, L, exhaustive_pairs=L <= PAIR_WALK_MAX_L)
    return CheckResult(f"mean_gap[eta={eta:g},L={L}]", bad == 0, f"violations={bad} of {4**L - 2**L} ordered pairs")


def check_normalization(params: HardParams, qs: Sequence[int]) -> CheckResult:
    worst = 0.0
    for q in qs:
        for x in (0.5, params.mu_star_A, params.mu_star_B):
            worst = max(worst, abs(likelihood_mass(q, x) - 1.0))
    return CheckResult("likelihood_normalization", worst <= NORMALIZATION_TOL, f"max_error={worst:.3e} q={list(qs)}")


def run_suite(
    params: HardParams,
    seed: int,
    samples: int = 100_000,
    conditional_samples: int = 20_000,
    acceptance_attempts: int = 10_000,
    gap_checks: Sequence[tuple[float, int]] = (),
    normalization_q: Sequence[int] = (1, 6, 12),
) -> list[CheckResult]:
    results = [
        check_pr_E0(params, samples, streams.make_stream(seed, 0)),
        check_conditional_H(params, conditional_samples, streams.make_stream(seed, 1)),
        check_acceptance(params, acceptance_attempts, streams.make_stream(seed, 2)),
    ]
    pairs = [(params.eta, params.L)] + [p for p in gap_checks if p != (params.eta, params.L)]
    results += [check_mean_gaps(eta, L) for eta, L in pairs]
    results.append(check_normalization(params, normalization_q))
    return results
