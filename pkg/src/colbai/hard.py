"""Interleaved hard instances for non-IID collaborative best arm identification.

Every arm carries L bits X_1..X_L, each Bernoulli(eta^-2). Its global mean is
``1/2 + sum_l X_l eta^-l``. With two agents, agent A holds the odd levels and
agent B the even ones, each doubled so that the global mean is the plain
average of the two local means. The bit matrix is the ground truth: the best
arms are the all-ones rows, found by integer comparison.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from .core import Instance, WeightVector, gap_profile

ETA_MIN = 2.0 + math.sqrt(5.0)
CANONICAL_RTOL = 1e-9
SIDES = ("A", "B")


class EtaTooSmall(ValueError):
    """eta <= 2 + sqrt(5): some local mean would exceed 1."""


class RejectionBudgetExhausted(RuntimeError):
    pass


class IdenticalBitVectors(ValueError):
    pass


class MeanAtBoundary(ValueError):
    pass


class NoAcceptedSamples(RuntimeError):
    pass


class OddK(ValueError):
    pass


@dataclass(frozen=True)
class HardParams:
    n: int
    L: int
    eta: float
    R: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.L < 1:
            raise ValueError("L must be positive")
        object.__setattr__(self, "eta", float(self.eta))
        if not self.eta > ETA_MIN:
            raise EtaTooSmall(
                f"eta={self.eta:g} must exceed 2+sqrt(5)~{ETA_MIN:.4f} so local means stay <= 1; "
                f"canonical eta=n^(1/(2L)) needs n > {ETA_MIN:.4f}^(2L), otherwise pass eta/L overrides"
            )

    @property
    def p(self) -> float:
        return self.eta ** -2

    @property
    def zeta(self) -> float:
        return math.sqrt(self.eta) / 2**7

    @property
    def gamma(self) -> float:
        return self.eta / 2**7

    @property
    def canonical(self) -> bool:
        return abs(self.eta ** (2 * self.L) - self.n) <= CANONICAL_RTOL * self.n

    @property
    def level_weights(self) -> np.ndarray:
        """eta^-l for l = 1..L."""
        return self.eta ** -np.arange(1, self.L + 1, dtype=float)

    @property
    def mu_star(self) -> float:
        return 0.5 + math.fsum(self.level_weights.tolist())

    @property
    def mu_star_A(self) -> float:
        return 0.5 + 2 * math.fsum(self.level_weights[0::2].tolist())

    @property
    def mu_star_B(self) -> float:
        return 0.5 + 2 * math.fsum(self.level_weights[1::2].tolist())

    @property
    def complexity_cap(self) -> float:
        """2 eta^(2+2L) L, the instance-complexity cap of the conditioned distribution."""
        return 2.0 * self.eta ** (2 + 2 * self.L) * self.L

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "L": self.L, "eta": self.eta, "R": self.R, "canonical": self.canonical}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> HardParams:
        return cls(n=int(d["n"]), L=int(d["L"]), eta=float(d["eta"]), R=d.get("R"))


def derive_params(n: int, R: int, eta: float | None = None, L: int | None = None) -> HardParams:
    """Parameters for ``n`` arms and ``R`` rounds.

    Without overrides L = 6R and eta = n^(1/(2L)), which is only valid for
    astronomically many arms; ``eta``/``L`` overrides decouple the
    construction from n for desk-scale runs.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if R < 1:
        raise ValueError("R must be at least 1")
    if L is None:
        L = 6 * R
    if eta is None:
        eta = float(n) ** (1.0 / (2 * L))
    return HardParams(n=n, L=L, eta=eta, R=R)


def local_means_from_bits(params: HardParams, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(global, A, B) means for a bit array whose last axis is the level."""
    w = params.level_weights
    b = np.asarray(bits, dtype=float)
    mu_a = 0.5 + 2.0 * (b[..., 0::2] @ w[0::2])
    mu_b = 0.5 + 2.0 * (b[..., 1::2] @ w[1::2]) if params.L > 1 else np.full(b.shape[:-1], 0.5)
    mu = 0.5 + b @ w
    return mu, mu_a, mu_b


@dataclass(frozen=True, eq=False)
class HardInstance:
    params: HardParams
    bits: np.ndarray
    instance: Instance
    best_arms: frozenset[int] = field(default_factory=frozenset)

    @classmethod
    def from_bits(cls, params: HardParams, bits: np.ndarray, K: int = 2) -> HardInstance:
        bits = np.array(bits, dtype=np.uint8)
        if bits.shape != (params.n, params.L):
            raise ValueError(f"bit matrix shape {bits.shape} != ({params.n}, {params.L})")
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0/1")
        bits.setflags(write=False)
        _, mu_a, mu_b = local_means_from_bits(params, bits)
        inst = Instance(np.column_stack([mu_a, mu_b]), WeightVector((0.5, 0.5)))
        best = frozenset(int(i) for i in np.flatnonzero(bits.all(axis=1)))
        hi = cls(params, bits, inst, best)
        return hi if K == 2 else expand_to_K_agents(hi, K)

    @property
    def K(self) -> int:
        return self.instance.K

    def top_arms(self) -> frozenset[int]:
        """Arms with the largest global mean, by lexicographic order of bit rows.

        For eta > 3 the mean order equals the lexicographic order of the rows,
        so this needs no float comparison even when no row is all ones.
        """
        rows = [tuple(r) for r in self.bits.tolist()]
        top = max(rows)
        return frozenset(i for i, r in enumerate(rows) if r == top)

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "K": self.K,
            "bits": ["".join(str(int(b)) for b in row) for row in self.bits],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> HardInstance:
        extra = set(d) - {"params", "K", "bits"}
        if extra:
            raise ValueError(f"unknown hard instance fields: {sorted(extra)}")
        params = HardParams.from_dict(d["params"])
        rows = d["bits"]
        if any(set(r) - {"0", "1"} for r in rows):
            raise ValueError("bit strings may only contain 0 and 1")
        bits = np.array([[int(c) for c in r] for r in rows], dtype=np.uint8).reshape(len(rows), -1)
        return cls.from_bits(params, bits, K=int(d.get("K", 2)))


# -- sampling -----------------------------------------------------------------


def _bit_mask(params: HardParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = (params.n, params.L) if size is None else (size, params.n, params.L)
    return rng.random(shape) < params.p


def sample_bits(params: HardParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """An (n, L) bit matrix, or ``size`` of them stacked, with i.i.d. Ber(eta^-2) entries."""
    return _bit_mask(params, rng, size).astype(np.uint8)


def _all_ones(bits: np.ndarray) -> np.ndarray:
    """Rows whose bits are all set, reduced level by level (faster than .all on a short axis)."""
    acc = bits[..., 0].astype(bool)
    for level in range(1, bits.shape[-1]):
        acc &= bits[..., level].astype(bool, copy=False)
    return acc


def _bit_batches(params: HardParams, total: int, rng: np.random.Generator, chunk: int) -> Iterator[np.ndarray]:
    done = 0
    while done < total:
        m = min(chunk, total - done)
        yield _bit_mask(params, rng, size=m)
        done += m


def _batch_chunk(params: HardParams) -> int:
    return max(1, 4_000_000 // (params.n * params.L))


def sample_hard_instance(params: HardParams, rng: np.random.Generator, K: int = 2) -> HardInstance:
    return HardInstance.from_bits(params, sample_bits(params, rng), K=K)


def check_E0(hi: HardInstance) -> bool:
    """Exactly one arm has an all-ones bit row."""
    return len(hi.best_arms) == 1


def exact_pr_E0(params: HardParams) -> float:
    """n q (1-q)^(n-1) with q = eta^(-2L); equals (1-1/n)^(n-1) when eta^(2L) = n."""
    q = params.eta ** (-2 * params.L)
    return params.n * q * math.exp((params.n - 1) * math.log1p(-q))


def estimate_pr_E0(params: HardParams, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo frequency of a unique all-ones row, with its binomial standard error."""
    hits = 0
    for bits in _bit_batches(params, samples, rng, _batch_chunk(params)):
        hits += int(np.count_nonzero(np.count_nonzero(_all_ones(bits), axis=1) == 1))
    rate = hits / samples
    return rate, math.sqrt(rate * (1 - rate) / samples)


def _batch_H(params: HardParams, bits: np.ndarray) -> np.ndarray:
    """Instance complexity of each E0 instance in a (batch, n, L) array."""
    mu, _, _ = local_means_from_bits(params, bits)
    best = _all_ones(bits)
    top = (mu * best).sum(axis=1, keepdims=True)
    gaps = np.where(best, np.inf, top - mu)
    return (1.0 / gaps**2).sum(axis=1)


def estimate_conditional_H(params: HardParams, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo E[H | E0] and its standard error over ``samples`` draws."""
    if samples < 1:
        raise ValueError("samples must be positive")
    hs = []
    for bits in _bit_batches(params, samples, rng, _batch_chunk(params)):
        ok = np.count_nonzero(_all_ones(bits), axis=1) == 1
        if ok.any():
            hs.append(_batch_H(params, bits[ok]))
    if not hs:
        raise NoAcceptedSamples(f"none of {samples} samples had a unique best arm")
    h = np.concatenate(hs)
    se = float(h.std(ddof=1) / math.sqrt(h.size)) if h.size > 1 else math.inf
    return float(h.mean()), se


def _in_E1(params: HardParams, bits: np.ndarray) -> HardInstance | None:
    if int(bits.all(axis=1).sum()) != 1:
        return None
    hi = HardInstance.from_bits(params, bits)
    if gap_profile(hi.instance).H < params.complexity_cap:
        return hi
    return None


def sample_conditioned(
    params: HardParams, rng: np.random.Generator, max_attempts: int = 1000, K: int = 2
) -> HardInstance:
    """Rejection-sample an instance with a unique best arm and H < 2 eta^(2+2L) L."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    for _ in range(max_attempts):
        hi = _in_E1(params, sample_bits(params, rng))
        if hi is not None:
            return hi if K == 2 else expand_to_K_agents(hi, K)
    raise RejectionBudgetExhausted(f"no acceptable instance in {max_attempts} attempts")


def conditioned_acceptance_rate(params: HardParams, attempts: int, rng: np.random.Generator) -> tuple[float, float]:
    """Fraction of independent draws the conditioned sampler would accept, with SE."""
    accepted = sum(_in_E1(params, sample_bits(params, rng)) is not None for _ in range(attempts))
    rate = accepted / attempts
    return rate, math.sqrt(rate * (1 - rate) / attempts)


# -- mean gaps ------------------------------------------------------------------


def mean_gap(x_bits: Sequence[int], y_bits: Sequence[int], eta: float) -> tuple[float, int]:
    """|sum_l (X_l - Y_l) eta^-l| and the first (1-based) level where X and Y differ."""
    x = [int(b) for b in x_bits]
    y = [int(b) for b in y_bits]
    if len(x) != len(y):
        raise ValueError("bit vectors must have equal length")
    diff = [a - b for a, b in zip(x, y)]
    if not any(diff):
        raise IdenticalBitVectors("bit vectors are identical")
    t = next(i for i, d in enumerate(diff) if d) + 1
    gap = abs(math.fsum(d * eta ** -(i + 1) for i, d in enumerate(diff)))
    return gap, t


def gap_interval(eta: float, t: int) -> tuple[float, float]:
    base = eta**-t
    return base * (1 - 2 / eta), base * (1 + 2 / eta)


def mean_gap_violations(eta: float, L: int, *, exhaustive_pairs: bool = False, slack: float = 1e-12) -> int:
    """Count bit-vector pairs whose mean gap leaves eta^-t (1 +- 2/eta).

    The gap and t depend on a pair only through its difference vector in
    {-1, 0, 1}^L, and every nonzero difference vector is realised by some
    pair, so checking the 3^L - 1 differences covers all 4^L ordered pairs.
    ``exhaustive_pairs=True`` walks the pairs themselves instead.
    """
    w = eta ** -np.arange(1, L + 1, dtype=float)
    lo_f, hi_f = 1 - 2 / eta - slack, 1 + 2 / eta + slack
    if not exhaustive_pairs:
        d = np.array(list(itertools.product((-1, 0, 1), repeat=L)), dtype=float)
        d = d[np.any(d != 0, axis=1)]
        t = np.argmax(d != 0, axis=1) + 1
        ratio = np.abs(d @ w) * eta**t
        return int(np.count_nonzero((ratio < lo_f) | (ratio > hi_f)))

    codes = np.arange(2**L, dtype=np.int64)
    # bit for level l (1-based) sits at position L - l, so level 1 is the MSB
    bits = (codes[:, None] >> (L - 1 - np.arange(L))) & 1
    offsets = bits.astype(float) @ w
    violations = 0
    step = max(1, 2**22 // 2**L)
    for start in range(0, 2**L, step):
        xs = codes[start : start + step, None]
        xor = xs ^ codes[None, :]
        gap = np.abs(offsets[start : start + step, None] - offsets[None, :])
        diff = xor != 0
        # first differing level = L - floor(log2(xor))
        msb = np.floor(np.log2(np.where(diff, xor, 1))).astype(np.int64)
        t = L - msb
        ratio = gap * eta ** t.astype(float)
        violations += int(np.count_nonzero(diff & ((ratio < lo_f) | (ratio > hi_f))))
    return violations


# -- supports, likelihoods, good sequences ---------------------------------------


def _relevant_levels(L: int, side: str) -> list[int]:
    if side not in SIDES:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    first = 1 if side == "A" else 2
    return list(range(first, L + 1, 2))


def enumerate_support(params: HardParams, level: int, side: str) -> list[float]:
    """Possible local means of one side once its relevant bits up to ``level`` are all 1."""
    if not 0 <= level <= params.L:
        raise ValueError(f"level must be in 0..{params.L}")
    levels = _relevant_levels(params.L, side)
    forced = [l for l in levels if l <= level]
    free = [l for l in levels if l > level]
    base = [2 * params.eta**-l for l in forced]
    values = set()
    for xs in itertools.product((0, 1), repeat=len(free)):
        values.add(0.5 + math.fsum(base + [2 * x * params.eta**-l for x, l in zip(xs, free)]))
    return sorted(values)


def log_likelihood(theta: Sequence[int], x: float) -> float:
    """ln of the probability that Bernoulli(x) pulls produce ``theta`` in order."""
    ones = int(sum(theta))
    zeros = len(theta) - ones
    return _count_log_likelihood(ones, zeros, x)


def _count_log_likelihood(ones: int, zeros: int, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError("mean must lie in [0, 1]")
    if (x == 0.0 and ones) or (x == 1.0 and zeros):
        raise MeanAtBoundary(f"outcome sequence impossible under mean {x}")
    total = 0.0
    if ones:
        total += ones * math.log(x)
    if zeros:
        total += zeros * math.log1p(-x)
    return total


def is_good_sequence(theta: Sequence[int], params: HardParams, level: int, side: str) -> bool:
    """Every likelihood ratio between support values stays within e^(+-4/eta)."""
    ones = int(sum(theta))
    zeros = len(theta) - ones
    lls = [_count_log_likelihood(ones, zeros, x) for x in enumerate_support(params, level, side)]
    return max(lls) - min(lls) <= 4.0 / params.eta


def estimate_bad_sequence_rate(
    params: HardParams, level: int, side: str, q: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo rate of non-good length-q sequences; true mean uniform on the support."""
    if trials < 1:
        raise ValueError("trials must be positive")
    support = enumerate_support(params, level, side)
    if q == 0 or len(support) == 1:
        return 0.0, 0.0
    bad = 0
    for _ in range(trials):
        x = support[int(rng.integers(len(support)))]
        theta = (rng.random(q) < x).astype(np.uint8)
        bad += not is_good_sequence(theta.tolist(), params, level, side)
    rate = bad / trials
    return rate, math.sqrt(rate * (1 - rate) / trials)


# -- K agents and budgets ---------------------------------------------------------


def expand_to_K_agents(hi: HardInstance, K: int) -> HardInstance:
    """First K/2 agents get side A's local means, the rest side B's; uniform weights."""
    if K < 2 or K % 2:
        raise OddK(f"K must be a positive even number, got {K}")
    if hi.K != 2:
        raise ValueError("expansion starts from a two-agent instance")
    if K == 2:
        return hi
    a, b = hi.instance.local_means[:, 0], hi.instance.local_means[:, 1]
    locals_ = np.column_stack([a] * (K // 2) + [b] * (K // 2))
    inst = Instance(locals_, WeightVector.uniform(K), hi.instance.reward_family)
    return HardInstance(hi.params, hi.bits, inst, hi.best_arms)


def lower_bound_time_budget(params: HardParams) -> int:
    """ceil(2 zeta eta^(2+2L) L)."""
    return math.ceil(2 * params.zeta * params.eta ** (2 + 2 * params.L) * params.L)
