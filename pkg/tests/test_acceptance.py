"""Acceptance criteria AC1-AC12, one test each, at the stated tolerances.

Every test prints a one-line verdict with its measured numbers (visible
with ``-s``); the terminal summary lists PASS/FAIL per criterion.
"""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import oracles
from colbai import cli
from colbai.algorithms import compute_schedule, run_col_learn
from colbai.core import Instance, RewardFamily, WeightVector, gap_profile
from colbai.hard import (
    HardParams,
    conditioned_acceptance_rate,
    estimate_conditional_H,
    estimate_pr_E0,
    exact_pr_E0,
    log_likelihood,
    lower_bound_time_budget,
    mean_gap_violations,
)
from colbai.harness import (
    ColLearn,
    ExperimentConfig,
    ExplicitSource,
    TwoArmWeighted,
    at_least,
    curve_nondecreasing,
    hardness_probe,
    run_trials,
    time_to_target,
)
from colbai.streams import make_stream

pytestmark = pytest.mark.slow

DATA = Path(__file__).parent / "data"
DESK = HardParams(n=625, L=2, eta=5.0)
SEED = 20240917


def verdict(cid: str, ok: bool, detail: str) -> None:
    print(f"\n{'PASS' if ok else 'FAIL'} {cid}: {detail}")


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


@pytest.mark.criterion("AC1", "Monte Carlo Pr[E0] at eta=5, L=2, n=625 within 0.002 of 0.36855, 1e6 samples")
def test_ac1_pr_E0_monte_carlo():
    with Timer() as t:
        est, se = estimate_pr_E0(DESK, 1_000_000, make_stream(SEED, 1))
    exact = exact_pr_E0(DESK)
    ok = abs(est - 0.36855) <= 0.002 and abs(est - exact) <= 4 * se and t.seconds < 30
    verdict("AC1", ok, f"estimate={est:.5f} se={se:.5f} closed_form={exact:.6f} time={t.seconds:.1f}s")
    assert abs(est - 0.36855) <= 0.002
    assert abs(est - exact) <= 4 * se
    assert t.seconds < 30


@pytest.mark.criterion("AC2", "E[H | E0] at the desk parameters stays below 31250 (2 SE slack)")
def test_ac2_conditional_complexity():
    bound = DESK.eta ** (2 + 2 * DESK.L) * DESK.L
    with Timer() as t:
        mean, se = estimate_conditional_H(DESK, 200_000, make_stream(SEED, 2))
    ok = bound == 31250 and mean - 2 * se <= bound and t.seconds < 60
    verdict("AC2", ok, f"mean_H={mean:.1f} se={se:.1f} bound={bound:.0f} time={t.seconds:.1f}s")
    assert bound == 31250
    assert mean - 2 * se <= bound
    assert t.seconds < 60


@pytest.mark.criterion("AC3", "conditioned sampler acceptance over 1e4 attempts is at least 0.18")
def test_ac3_conditioned_acceptance():
    with Timer() as t:
        rate, se = conditioned_acceptance_rate(DESK, 10_000, make_stream(SEED, 3))
    floor = 1 / (2 * math.e)
    ok = rate >= 0.18 and t.seconds < 30
    verdict("AC3", ok, f"rate={rate:.4f} se={se:.4f} floor_1/(2e)={floor:.4f} time={t.seconds:.1f}s")
    assert rate >= 0.18
    assert t.seconds < 30


@pytest.mark.criterion("AC4", "mean gap interval holds for every ordered pair, eta in {5, 8}, L in {6, 8}")
def test_ac4_mean_gap_exhaustive():
    counts = {}
    with Timer() as t:
        for eta, L in itertools.product((5.0, 8.0), (6, 8)):
            pairs = mean_gap_violations(eta, L, exhaustive_pairs=True)
            diffs = mean_gap_violations(eta, L)
            counts[(eta, L)] = (pairs, diffs)
    ok = all(v == (0, 0) for v in counts.values()) and t.seconds < 60
    verdict("AC4", ok, f"violations={ {f'eta={e:g},L={L}': v[0] for (e, L), v in counts.items()} } time={t.seconds:.2f}s")
    assert all(v == (0, 0) for v in counts.values())
    assert t.seconds < 60


@pytest.mark.criterion("AC5", "likelihoods sum to 1 within 1e-10 over all 2^q sequences, q in {1, 6, 12}")
def test_ac5_likelihood_normalization():
    worst = 0.0
    with Timer() as t:
        for q in (1, 6, 12):
            for x in (0.5, DESK.mu_star_A, DESK.mu_star_B):
                total = math.fsum(math.exp(log_likelihood(th, x)) for th in itertools.product((0, 1), repeat=q))
                worst = max(worst, abs(total - 1.0))
    ok = worst <= 1e-10 and t.seconds < 5
    verdict("AC5", ok, f"max_error={worst:.2e} time={t.seconds:.2f}s")
    assert worst <= 1e-10
    assert t.seconds < 5


@pytest.mark.criterion("AC6", "schedule budget never exceeds T on 1000 random triples; worked schedules exact")
def test_ac6_schedule_budget():
    rng = np.random.default_rng(SEED)
    over, mismatched = 0, 0
    with Timer() as t:
        for _ in range(1000):
            n, R, T = int(rng.integers(1, 513)), int(rng.integers(1, 7)), int(rng.integers(0, 10**6 + 1))
            s = compute_schedule(n, R, T)
            over += s.budget > T
            mismatched += (s.T_r, s.n_r) != oracles.schedule(n, R, T)
        worked = [
            (s.T_r, s.n_r) == want
            for s, want in (
                (compute_schedule(16, 1, 160), ((0, 10), (16, 1))),
                (compute_schedule(4, 2, 64), ((0, 8, 16), (4, 2, 1))),
                (compute_schedule(8, 3, 240), ((0, 10, 20, 40), (8, 4, 2, 1))),
            )
        ]
    ok = over == 0 and mismatched == 0 and all(worked) and t.seconds < 1
    verdict("AC6", ok, f"over_budget={over} oracle_mismatch={mismatched} worked={worked} time={t.seconds:.2f}s")
    assert over == 0 and mismatched == 0 and all(worked)
    assert t.seconds < 1


def _ac7_instance() -> Instance:
    means = np.array([0.8, 0.7, 0.7, 0.65, 0.6, 0.55, 0.5, 0.45])
    # non-IID: every agent sees a shifted copy, the shifts average to zero
    shifts = np.array([0.15, -0.05, -0.15, 0.05])
    return Instance(means[:, None] + shifts[None, :], WeightVector.uniform(4))


@pytest.mark.criterion("AC7", "n=8, K=4, R=2 at the theoretical horizon: success >= 0.9, Wilson lower bound >= 0.85")
def test_ac7_upper_bound_regime():
    inst = _ac7_instance()
    gp = gap_profile(inst)
    gaps = [g for i, g in enumerate(gp.gaps) if i != gp.best_index]
    n, R = inst.n, 2
    T = math.ceil(20 * n ** (1 / R) * R * gp.H * math.log(n * R) * inst.weights.sum_sq)
    with Timer() as t:
        res = run_trials(ExperimentConfig(ColLearn(R), T, 500, SEED, ExplicitSource(inst)))
    s = res.summaries[0]
    ok = min(gaps) >= 0.1 - 1e-12 and s.success_rate >= 0.9 and s.wilson_lo >= 0.85 and t.seconds < 120
    verdict("AC7", ok, f"H={gp.H:.1f} T={T} success={s.success_rate:.3f} wilson_lo={s.wilson_lo:.3f} "
            f"time={t.seconds:.1f}s")
    assert min(gaps) >= 0.1 - 1e-12
    assert s.success_rate >= 0.9 and s.wilson_lo >= 0.85
    assert t.seconds < 120


@pytest.mark.criterion("AC8", "two-arm delta=0.05, K=4: time to target with weights (1,0,0,0) is at least 2x uniform")
def test_ac8_weighted_slowdown():
    probes = dict(T_lo=1, T_hi=200_000)
    with Timer() as t:
        times = {}
        for name, w in (("skewed", WeightVector.skewed(4)), ("uniform", WeightVector.uniform(4))):
            cfg = ExperimentConfig(TwoArmWeighted(0.05, w), 1, 2000, SEED)
            times[name] = time_to_target(cfg, **probes)
    ratio = times["skewed"] / times["uniform"]
    ok = ratio >= 2 and t.seconds < 300
    verdict("AC8", ok, f"time_to_target={times} ratio={ratio:.2f} time={t.seconds:.1f}s")
    assert ratio >= 2
    assert t.seconds < 300


@pytest.mark.criterion("AC9", "weights (1,0,0,0), delta=-0.05: failure >= 0.15 at T=40 and <= 0.01 at T=40000")
def test_ac9_anti_concentration():
    w = WeightVector.skewed(4)
    with Timer() as t:
        short = run_trials(ExperimentConfig(TwoArmWeighted(-0.05, w), 40, 10_000, SEED)).summaries[0]
        long = run_trials(ExperimentConfig(TwoArmWeighted(-0.05, w), 40_000, 10_000, SEED)).summaries[0]
    f_short, f_long = 1 - short.success_rate, 1 - long.success_rate
    ok = f_short >= 0.15 and f_long <= 0.01 and t.seconds < 60
    verdict("AC9", ok, f"failure@40={f_short:.4f} failure@40000={f_long:.4f} time={t.seconds:.1f}s")
    assert f_short >= 0.15 and f_long <= 0.01
    assert t.seconds < 60


@pytest.mark.criterion("AC10", "hard instances: R=3 no worse than R=1 (2 pooled SE); probe curves non-decreasing")
def test_ac10_rounds_on_hard_instances():
    budget = lower_bound_time_budget(DESK)
    budgets = [0, budget, 10 * budget, 100 * budget, 1000 * budget]
    trials = 400
    with Timer() as t:
        one = hardness_probe(DESK, 2, 1, budgets, trials, SEED)
        three = hardness_probe(DESK, 2, 3, budgets, trials, SEED)
    pairwise = [at_least(b.successes, b.trials, a.successes, a.trials) for a, b in zip(one, three)]
    curves = curve_nondecreasing(one) and curve_nondecreasing(three)
    ok = all(pairwise) and curves and t.seconds < 300
    verdict("AC10", ok, "R=1 " + str([round(p.success_rate, 3) for p in one]) + " R=3 "
            + str([round(p.success_rate, 3) for p in three]) + f" budgets={budgets} time={t.seconds:.1f}s")
    assert all(pairwise)
    assert curves
    assert t.seconds < 300


@pytest.mark.criterion("AC11", "same seed twice and workers in {1, 8} give byte-identical CSV")
def test_ac11_determinism(capsys, tmp_path):
    configs = ["run_tiny.json", "run_bernoulli.json", "sweep_T.json", "sweep_two_arm.json"]
    same = []
    for name in configs:
        cmd = "sweep" if name.startswith("sweep") else "run"
        outputs = []
        for workers in (1, 1, 8):
            out = tmp_path / f"{name}.{workers}.{len(outputs)}.csv"
            code = cli.main([cmd, "--config", str(DATA / name), "--workers", str(workers), "--out", str(out)])
            assert code == 0
            summary = out.with_name(f"{out.stem}.summary.csv")
            outputs.append(out.read_bytes() + b"\x00" + summary.read_bytes())
        same.append(outputs[0] == outputs[1] == outputs[2])
    capsys.readouterr()
    ok = all(same)
    verdict("AC11", ok, f"identical={dict(zip(configs, same))}")
    assert all(same)


# (means as exact fractions, weights, R, T, reward family)
ORACLE_CASES = [
    ([[Fraction(1, 2), Fraction(3, 4)], [Fraction(3, 5), Fraction(1, 2)], [Fraction(1, 4), Fraction(9, 10)]],
     [Fraction(1, 2), Fraction(1, 2)], 1, 6),
    ([[Fraction(1, 2)], [Fraction(3, 5)], [Fraction(2, 5)], [Fraction(7, 10)]], [Fraction(1)], 2, 12),
    ([[Fraction(1, 2), Fraction(1, 3)], [Fraction(2, 3), Fraction(1, 4)], [Fraction(1, 5), Fraction(4, 5)],
      [Fraction(3, 5), Fraction(3, 5)]], [Fraction(1, 2), Fraction(1, 2)], 1, 4),
    ([[Fraction(2, 5), Fraction(4, 5)], [Fraction(7, 10), Fraction(1, 5)]], [Fraction(3, 4), Fraction(1, 4)], 1, 6),
]

POINT_MASS_CASES = [
    ([[Fraction(1, 5), Fraction(3, 5)], [Fraction(9, 10), Fraction(1, 10)], [Fraction(1, 2), Fraction(1, 2)],
      [Fraction(3, 10), Fraction(4, 5)]], [Fraction(1, 4), Fraction(3, 4)], R, T)
    for R in (1, 2) for T in (0, 3, 7, 8, 16, 40)
]


def _instance(means, alphas, family):
    return Instance(
        np.array([[float(m) for m in row] for row in means]), WeightVector(tuple(float(a) for a in alphas)), family
    )


@pytest.mark.criterion("AC12", "arm-selection law on tiny instances matches exhaustive enumeration within 3 SE")
def test_ac12_small_instance_oracle():
    sims = 20_000
    worst = 0.0
    pm_ok = True
    with Timer() as t:
        for c, (means, alphas, R, T) in enumerate(ORACLE_CASES):
            law = oracles.selection_distribution(means, alphas, R, T)
            assert sum(law.values()) == 1
            inst = _instance(means, alphas, RewardFamily.BERNOULLI)
            picks = np.bincount(
                [run_col_learn(inst, R, T, make_stream(SEED, 12, c, j)).chosen_arm for j in range(sims)],
                minlength=len(means),
            )
            for arm in range(len(means)):
                p = float(law.get(arm, 0))
                se = math.sqrt(p * (1 - p) / sims)
                dev = abs(picks[arm] / sims - p)
                if se == 0:
                    worst = max(worst, math.inf if dev else 0.0)
                else:
                    worst = max(worst, dev / se)
        for means, alphas, R, T in POINT_MASS_CASES:
            want = oracles.point_mass_choice(means, alphas, R, T)
            inst = _instance(means, alphas, RewardFamily.POINT_MASS)
            pm_ok &= run_col_learn(inst, R, T, make_stream(SEED)).chosen_arm == want
    ok = worst <= 3 and pm_ok and t.seconds < 60
    verdict("AC12", ok, f"max_deviation={worst:.2f}SE point_mass_exact={pm_ok} time={t.seconds:.1f}s")
    assert worst <= 3
    assert pm_ok
    assert t.seconds < 60
