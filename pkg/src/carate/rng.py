"""Deterministic seed derivation.

Every stochastic routine in this package takes an explicit integer seed and
derives independent substreams from it with :class:`numpy.random.SeedSequence`.
Substream keys are pure functions of their arguments, so results never depend
on call order, scheduling, or worker count.
"""
from __future__ import annotations

import numpy as np

__all__ = ["substream", "derive_seed"]


def _seedseq(seed: int, key: tuple[int, ...]) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream of ``seed`` identified by ``key``.

    Distinct keys yield statistically independent streams; the same
    ``(seed, key)`` always yields the same stream.
    """
    return np.random.default_rng(_seedseq(seed, key))


def derive_seed(seed: int, *key: int) -> int:
    """Hash ``(seed, key)`` into a plain integer seed.

    The result can be passed around (e.g. on a command line) and fed back to
    any seeded routine; it is stable across platforms and processes.
    """
    return int(_seedseq(seed, key).generate_state(1, np.uint64)[0])
