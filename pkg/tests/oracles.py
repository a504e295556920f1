"""Independent reference implementations used by the tests.

Nothing here imports the package; the oracles work in exact integer or
rational arithmetic so a disagreement points at the library.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def _max_fitting(fits) -> int:
    """Largest c >= 0 with fits(c), for a predicate monotone decreasing in c."""
    hi = 1
    while fits(hi):
        hi *= 2
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def schedule(n: int, R: int, T: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(T_r, n_r) by binary search on exact integer inequalities.

    T_r = floor(T n^(r/R) / (n^(1+1/R) R)) is the largest c with
    (c n R)^R <= T^R n^(r-1); n_r = floor(n^((R-r)/R)) the largest c with
    c^R <= n^(R-r).
    """
    T_r = [0]
    for r in range(1, R + 1):
        if T == 0:
            T_r.append(0)
            continue
        T_r.append(_max_fitting(lambda c, r=r: (c * n * R) ** R * n <= T**R * n**r))
    n_r = [_max_fitting(lambda c, r=r: c**R <= n ** (R - r)) for r in range(R)] + [1]
    return tuple(T_r), tuple(n_r)


def selection_distribution(
    means: list[list[Fraction]], alphas: list[Fraction], R: int, T: int
) -> dict[int, Fraction]:
    """Exact law of the arm returned by weighted successive elimination.

    Enumerates every Bernoulli outcome sequence of length T_R for every
    (arm, agent) cell; an eliminated arm's unused outcomes just marginalise
    out. Survivors are ranked by the weighted cumulative empirical mean,
    ties to the lower index.
    """
    T_r, n_r = schedule(len(means), R, T)
    n, K, q = len(means), len(alphas), T_r[-1]
    cells = [(i, k) for i in range(n) for k in range(K)]
    law: dict[int, Fraction] = {}
    for table in itertools.product(itertools.product((0, 1), repeat=q), repeat=len(cells)):
        prob = Fraction(1)
        for (i, k), seq in zip(cells, table):
            ones = sum(seq)
            prob *= means[i][k] ** ones * (1 - means[i][k]) ** (q - ones)
        if prob == 0:
            continue
        outcome = dict(zip(cells, table))
        alive = list(range(n))
        for r in range(R):
            t = T_r[r + 1]

            def score(i: int) -> Fraction:
                if t == 0:
                    return Fraction(0)
                return sum(alphas[k] * Fraction(sum(outcome[i, k][:t]), t) for k in range(K))

            alive = sorted(sorted(alive, key=lambda i: (-score(i), i))[: n_r[r + 1]])
        law[alive[0]] = law.get(alive[0], Fraction(0)) + prob
    return law


def point_mass_choice(means: list[list[Fraction]], alphas: list[Fraction], R: int, T: int) -> int:
    """Arm chosen when every pull returns its mean exactly."""
    T_r, n_r = schedule(len(means), R, T)
    alive = list(range(len(means)))
    for r in range(R):
        if T_r[r + 1] == 0:
            score = {i: Fraction(0) for i in alive}
        else:
            score = {i: sum(a * m for a, m in zip(alphas, means[i])) for i in alive}
        alive = sorted(sorted(alive, key=lambda i: (-score[i], i))[: n_r[r + 1]])
    return alive[0]
