"""Stratification maps, target proportions and stratum counting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "StrataSpec",
    "TargetProportions",
    "StratumCounts",
    "builtin_strata",
    "interval_strata",
    "builtin_proportions",
    "constant_proportions",
    "stratum_counts",
]

BUILTIN_STRATA_SIZES = (5, 20)


@dataclass(frozen=True)
class StrataSpec:
    """A finite partition of covariate space.

    ``classify`` maps an ``(n, k)`` covariate matrix to 1-based stratum labels
    in ``{1, ..., num_strata}`` and must be total on the supported covariate
    range.
    """

    num_strata: int
    classify: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __post_init__(self):
        if self.num_strata < 1:
            raise ValueError("num_strata must be >= 1")


@dataclass(frozen=True)
class TargetProportions:
    """Per-stratum target treatment shares, each strictly inside (0, 1)."""

    pi: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.pi, dtype=float))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("pi must be a nonempty vector")
        if not ((arr > 0.0) & (arr < 1.0)).all():
            raise ValueError("every target proportion must lie strictly in (0, 1)")
        object.__setattr__(self, "pi", arr)

    @property
    def num_strata(self) -> int:
        return self.pi.size

    def by_unit(self, labels: np.ndarray) -> np.ndarray:
        """Per-unit target proportion looked up by stratum label."""
        labels = np.asarray(labels)
        if labels.size and (labels.min() < 1 or labels.max() > self.num_strata):
            raise ValueError("stratum label out of range for these proportions")
        return self.pi[labels - 1]


def interval_strata(breakpoints, lo: float = -np.inf, hi: float = np.inf,
                    description: str = "") -> StrataSpec:
    """Strata defined by interior cut points on the first covariate coordinate.

    Intervals are half-open ``[a, b)``; when ``hi`` is finite the last interval
    is closed at ``hi``.  Values outside ``[lo, hi]`` raise ``ValueError``.
    """
    cuts = np.asarray(breakpoints, dtype=float)
    if cuts.ndim != 1 or cuts.size < 1:
        raise ValueError("breakpoints must be a nonempty 1-d sequence")
    if not (np.diff(cuts) > 0).all():
        raise ValueError("breakpoints must be strictly increasing")
    if cuts[0] <= lo or cuts[-1] >= hi:
        raise ValueError("breakpoints must lie strictly inside the support")
    num = cuts.size + 1

    def classify(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        first = z[:, 0]
        if (first < lo).any() or (first > hi).any():
            bad = first[(first < lo) | (first > hi)][0]
            raise ValueError(f"covariate value {bad!r} outside the stratified support [{lo}, {hi}]")
        return np.searchsorted(cuts, first, side="right") + 1

    return StrataSpec(num_strata=num, classify=classify, description=description)


def builtin_strata(num_strata: int) -> StrataSpec:
    """Equal-length interval strata on the first coordinate of [-1, 1]^k.

    Only the two builtin sizes (5 and 20) are accepted here; use
    :func:`interval_strata` for arbitrary cut points.
    """
    if num_strata not in BUILTIN_STRATA_SIZES:
        raise ValueError(f"builtin strata support sizes {BUILTIN_STRATA_SIZES}, got {num_strata}")
    # (2j - S)/S for j = 1..S-1: each cut is the double nearest the exact rational.
    cuts = (2.0 * np.arange(1, num_strata) - num_strata) / num_strata
    return interval_strata(
        cuts, lo=-1.0, hi=1.0,
        description=f"{num_strata} equal segments of [-1, 1] on the first coordinate",
    )


def builtin_proportions(num_strata: int, mode: str) -> TargetProportions:
    """The builtin proportion vectors: all 1/2, or stratum-increasing."""
    if num_strata not in BUILTIN_STRATA_SIZES:
        raise ValueError(f"builtin proportions support sizes {BUILTIN_STRATA_SIZES}, got {num_strata}")
    if mode == "constant":
        return TargetProportions(np.full(num_strata, 0.5))
    if mode == "varying":
        if num_strata == 5:
            return TargetProportions(np.array([0.3, 0.4, 0.5, 0.6, 0.7]))
        return TargetProportions(np.arange(13, 33) / 40.0)  # 0.325, 0.350, ..., 0.800
    raise ValueError(f"mode must be 'constant' or 'varying', got {mode!r}")


def constant_proportions(num_strata: int, p: float) -> TargetProportions:
    """Constant proportion ``p`` across ``num_strata`` strata."""
    return TargetProportions(np.full(num_strata, float(p)))


@dataclass(frozen=True)
class StratumCounts:
    """Stratum sizes ``total[s-1]`` and, when known, arm sizes ``by_arm[a, s-1]``."""

    total: np.ndarray
    by_arm: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.total.sum())


def stratum_counts(labels, assignments=None, num_strata: int | None = None) -> StratumCounts:
    """Count units per stratum and, if assignments are given, per (arm, stratum).

    Counts always partition: ``total.sum() == n`` and, with assignments,
    ``by_arm.sum(axis=0) == total``.
    """
    labels = np.asarray(labels, dtype=int)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-d vector")
    upper = int(labels.max()) if labels.size else 0
    if num_strata is None:
        num_strata = max(upper, 1)
    if labels.size and (labels.min() < 1 or upper > num_strata):
        raise ValueError(f"stratum labels must lie in 1..{num_strata}")
    total = np.bincount(labels, minlength=num_strata + 1)[1:]
    by_arm = None
    if assignments is not None:
        assignments = np.asarray(assignments, dtype=int)
        if assignments.shape != labels.shape:
            raise ValueError("labels and assignments must have equal length")
        if assignments.size and not np.isin(assignments, (0, 1)).all():
            raise ValueError("assignments must be binary")
        by_arm = np.stack([
            np.bincount(labels[assignments == a], minlength=num_strata + 1)[1:]
            for a in (0, 1)
        ])
    return StratumCounts(total=total, by_arm=by_arm)
