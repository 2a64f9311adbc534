"""Deterministic keyed random streams built on the counter-based Philox generator.

Every Gaussian draw in the package is addressed by an :class:`RngKey`
(master seed, replica id, branch generation, step counter).  The vector of
standard normals attached to a key is a pure function of the key, so results
are independent of scheduling, worker count and evaluation order.

Draws are organised in fixed-size blocks of ``STEPS_PER_BLOCK`` consecutive
steps: block ``b`` of a stream is generated in one shot from a Philox
generator whose 256-bit counter encodes ``b``.  Sequential simulation pays
one generator construction per block instead of one per step, while
``normals_for_key`` can still reproduce the draw of any individual step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

#: number of time steps whose noise is generated per Philox counter block
STEPS_PER_BLOCK = 256

# counter word 3 separates independent usage domains of the same seed
DOMAIN_NOISE = 0
DOMAIN_SELECTION = 1
DOMAIN_GENERIC = 2


def splitmix64(value: int) -> int:
    """One SplitMix64 mixing round; used to derive child seeds."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def child_seed(master_seed: int, index: int) -> int:
    """Derive a decorrelated 64-bit child seed for sub-experiment ``index``."""
    return splitmix64((master_seed ^ splitmix64(index & MASK64)) & MASK64)


@dataclass(frozen=True)
class RngKey:
    """Hierarchical address of a Gaussian draw.

    ``master_seed`` is 64-bit, ``replica_id`` and ``branch_generation`` are
    32-bit, ``step_counter`` is 64-bit.  Distinct keys yield independent
    streams.
    """

    master_seed: int
    replica_id: int = 0
    branch_generation: int = 0
    step_counter: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= self.replica_id <= MASK32:
            raise ValueError("replica_id must fit in 32 bits")
        if not 0 <= self.branch_generation <= MASK32:
            raise ValueError("branch_generation must fit in 32 bits")
        if not 0 <= self.step_counter <= MASK64:
            raise ValueError("step_counter must fit in 64 bits")

    def at_step(self, step: int) -> "RngKey":
        return replace(self, step_counter=step)


def _philox(key: RngKey, block: int, domain: int) -> np.random.Generator:
    k = np.array(
        [key.master_seed, ((key.replica_id & MASK32) << 32) | (key.branch_generation & MASK32)],
        dtype=np.uint64,
    )
    counter = np.array([0, 0, block & MASK64, domain], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=k)
    return np.random.Generator(bitgen)


def block_normals(key: RngKey, block: int, draws_per_step: int) -> np.ndarray:
    """Standard-normal block of shape ``(STEPS_PER_BLOCK, draws_per_step)``."""
    gen = _philox(key, block, DOMAIN_NOISE)
    return gen.standard_normal((STEPS_PER_BLOCK, draws_per_step))


def normals_for_key(key: RngKey, draws_per_step: int) -> np.ndarray:
    """Standard normals attached to one full key (pure function of the key)."""
    block, offset = divmod(key.step_counter, STEPS_PER_BLOCK)
    return block_normals(key, block, draws_per_step)[offset]


class GaussianStream:
    """Sequential view of the keyed stream for one (seed, replica, branch).

    ``normals(step)`` returns exactly ``normals_for_key(key.at_step(step))``
    but caches the surrounding block, so sequential access costs one Philox
    construction per ``STEPS_PER_BLOCK`` steps.
    """

    def __init__(self, key: RngKey, draws_per_step: int):
        self.key = key
        self.draws_per_step = draws_per_step
        self._block_index = -1
        self._block = None

    def block(self, block_index: int) -> np.ndarray:
        if block_index != self._block_index:
            self._block = block_normals(self.key, block_index, self.draws_per_step)
            self._block_index = block_index
        return self._block

    def normals(self, step: int) -> np.ndarray:
        block, offset = divmod(step, STEPS_PER_BLOCK)
        return self.block(block)[offset]


def selection_rng(master_seed: int, iteration: int) -> np.random.Generator:
    """Generator driving the donor selection of one splitting iteration."""
    key = RngKey(master_seed, replica_id=MASK32, branch_generation=MASK32)
    return _philox(key, iteration, DOMAIN_SELECTION)


def generic_rng(master_seed: int, tag: int = 0) -> np.random.Generator:
    """Keyed generator for auxiliary sampling (tests, initial conditions)."""
    key = RngKey(master_seed)
    return _philox(key, tag, DOMAIN_GENERIC)
