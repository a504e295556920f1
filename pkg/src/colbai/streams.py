"""Deterministic random streams for parallel trials.

Every random draw in the package flows from a single 64-bit master seed.
Streams are addressed by a tuple of non-negative integer keys, e.g.
``(trial_index, purpose)``. The key tuple becomes the ``spawn_key`` of a
:class:`numpy.random.SeedSequence` rooted at the master seed, and the
resulting state keys a Philox counter-based generator. Two distinct key
tuples therefore give statistically independent streams, and a given
``(seed, keys)`` pair gives the same stream on every platform.
"""

from __future__ import annotations

import threading

import numpy as np

SEED_MASK = (1 << 64) - 1

# Key purposes used inside one trial.
INSTANCE = 0
ALGORITHM = 1


class StreamReuseError(RuntimeError):
    """Raised when the same stream key is requested twice from one factory."""


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Child 64-bit seed for ``(seed, *keys)``, used for sweep grid points."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = (int(v) for v in ss.generate_state(2, dtype=np.uint32))
    return (hi << 32) | lo


class StreamFactory:
    """Hands out streams under one master seed and refuses to reissue a key."""

    def __init__(self, seed: int) -> None:
        self.seed = check_seed(seed)
        self._issued: set[tuple[int, ...]] = set()
        self._lock = threading.Lock()

    def stream(self, *keys: int) -> np.random.Generator:
        key = tuple(int(k) for k in keys)
        with self._lock:
            if key in self._issued:
                raise StreamReuseError(f"stream {key} already issued under seed {self.seed}")
            self._issued.add(key)
        return make_stream(self.seed, *key)

    @property
    def issued(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self._issued)
