"""Cross-fitting folds and the cross-fitted Nadaraya-Watson first stage.

Folds are built separately within every (arm, stratum) group: the first
``J - 1`` folds have ``floor(N/J)`` members and the last takes the remainder.
The regression value for unit ``i`` and arm ``a`` is fitted on that unit's
estimation set -- all arm-``a`` units of ``i``'s stratum outside ``i``'s own
fold.

The kernel is uniform on the ball of diameter one: a prediction averages the
training outcomes within Euclidean distance ``h/2`` of the evaluation point,
with the 0/0 = 0 convention when that window is empty.  The bandwidth rule is
``h = c_k * n**(-1/(4+k))`` with ``n`` the full sample size, so the window
shrinks with the experiment, not with the estimation set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import ExperimentFrame
from .rng import substream

__all__ = [
    "FoldPlan",
    "KernelSpec",
    "FitMatrix",
    "default_bandwidth_const",
    "make_folds",
    "estimation_set",
    "nw_predict",
    "crossfit_mhat",
]


def default_bandwidth_const(k: int) -> float:
    """Default bandwidth constant by covariate dimension."""
    if k == 1:
        return 1.0 / np.sqrt(3.0)
    if k == 5:
        return 3.0
    return 1.0


@dataclass(frozen=True)
class KernelSpec:
    """Uniform-kernel spec with bandwidth rule ``c * n**(-1/(4+k))``.

    The kernel support has diameter one, so the window radius at bandwidth
    ``h`` is ``h/2``.
    """

    bandwidth_const: float
    kernel: str = "uniform"

    def __post_init__(self):
        if self.bandwidth_const <= 0:
            raise ValueError("bandwidth_const must be positive")
        if self.kernel != "uniform":
            raise ValueError(f"unsupported kernel {self.kernel!r}; only 'uniform' is implemented")

    def bandwidth(self, n: int, k: int) -> float:
        if n < 1:
            raise ValueError("bandwidth is defined for sample sizes n >= 1")
        return float(self.bandwidth_const * n ** (-1.0 / (4.0 + k)))


@dataclass(frozen=True)
class FoldPlan:
    """Fold labels per unit plus member indices per (arm, stratum, fold) cell."""

    J: int
    fold_of_unit: np.ndarray
    labels: np.ndarray
    assignments: np.ndarray
    groups: dict

    @property
    def num_strata(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    def group(self, arm: int, stratum: int, fold: int) -> np.ndarray:
        return self.groups.get((arm, stratum, fold), _EMPTY_IDX)


_EMPTY_IDX = np.empty(0, dtype=int)


def make_folds(labels, assignments, J: int, seed: int) -> FoldPlan:
    """Randomly partition every (arm, stratum) group into ``J`` folds.

    Randomization depends only on group membership and the seed, never on
    outcomes.  Fold sizes are exact: ``floor(N/J)`` for folds ``1..J-1`` and
    the remainder in fold ``J`` (small groups leave leading folds empty).
    """
    if J < 2:
        raise ValueError("J must be at least 2")
    labels = np.asarray(labels, dtype=int)
    assignments = np.asarray(assignments, dtype=int)
    if labels.shape != assignments.shape or labels.ndim != 1:
        raise ValueError("labels and assignments must be equal-length vectors")
    fold_of_unit = np.zeros(labels.size, dtype=int)
    groups: dict[tuple[int, int, int], np.ndarray] = {}
    num_strata = int(labels.max()) if labels.size else 0
    for s in range(1, num_strata + 1):
        for arm in (0, 1):
            members = np.flatnonzero((labels == s) & (assignments == arm))
            n_as = members.size
            if n_as == 0:
                continue
            base = n_as // J
            shuffled = members[substream(seed, arm, s).permutation(n_as)]
            start = 0
            for j in range(1, J + 1):
                size = base if j < J else n_as - (J - 1) * base
                chunk = np.sort(shuffled[start:start + size])
                start += size
                if size:
                    groups[(arm, s, j)] = chunk
                    fold_of_unit[chunk] = j
    return FoldPlan(J=J, fold_of_unit=fold_of_unit, labels=labels,
                    assignments=assignments, groups=groups)


def estimation_set(plan: FoldPlan, i: int, arm: int) -> np.ndarray:
    """Arm-``arm`` units in unit ``i``'s stratum outside ``i``'s fold, sorted."""
    if not 0 <= i < plan.labels.size:
        raise ValueError(f"unit index {i} out of range")
    s = int(plan.labels[i])
    own = int(plan.fold_of_unit[i])
    parts = [plan.group(arm, s, j) for j in range(1, plan.J + 1) if j != own]
    parts = [p for p in parts if p.size]
    if not parts:
        return _EMPTY_IDX
    return np.sort(np.concatenate(parts))


def _window_means(train_z: np.ndarray, train_y: np.ndarray,
                  eval_z: np.ndarray, radius: float) -> np.ndarray:
    """Means of ``train_y`` over the training points within ``radius`` of each row.

    Empty windows yield 0.  The univariate path uses sorted prefix sums; the
    multivariate path thresholds squared Euclidean distances.
    """
    q = eval_z.shape[0]
    if train_z.shape[0] == 0:
        return np.zeros(q)
    if train_z.shape[1] == 1:
        tz = train_z[:, 0]
        order = np.argsort(tz, kind="stable")
        tz_sorted = tz[order]
        prefix = np.concatenate(([0.0], np.cumsum(train_y[order])))
        ez = eval_z[:, 0]
        lo = np.searchsorted(tz_sorted, ez - radius, side="left")
        hi = np.searchsorted(tz_sorted, ez + radius, side="right")
        counts = hi - lo
        sums = prefix[hi] - prefix[lo]
    else:
        sq = (
            np.sum(eval_z**2, axis=1)[:, None]
            + np.sum(train_z**2, axis=1)[None, :]
            - 2.0 * eval_z @ train_z.T
        )
        inside = sq <= radius * radius
        counts = inside.sum(axis=1)
        sums = inside @ train_y
    return np.divide(sums, counts, out=np.zeros(q), where=counts > 0)


def _as_points(z, k_hint: int | None = None) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if (k_hint is None or k_hint == 1) else arr.reshape(1, -1)
    return arr


def nw_predict(train_y, train_z, z, h: float) -> float:
    """Nadaraya-Watson value at ``z`` with the uniform kernel and bandwidth ``h``.

    Returns the mean of training outcomes whose covariates fall within
    Euclidean distance ``h/2`` of ``z`` (boundary included; the kernel support
    has diameter one), or 0 if none do.
    """
    if h <= 0:
        raise ValueError("bandwidth h must be positive")
    train_y = np.asarray(train_y, dtype=float)
    tz = _as_points(train_z)
    if tz.shape[0] != train_y.size:
        raise ValueError("train_y and train_z must have equal length")
    ez = _as_points(z, k_hint=tz.shape[1])
    if ez.shape != (1, tz.shape[1]):
        raise ValueError(f"z must be a single point with {tz.shape[1]} coordinates")
    return float(_window_means(tz, train_y, ez, 0.5 * float(h))[0])


def crossfit_mhat(frame: ExperimentFrame, plan: FoldPlan, kernel: KernelSpec) -> "FitMatrix":
    """Cross-fitted regression values ``mhat[i, a]`` for every unit and arm.

    Each entry is the Nadaraya-Watson prediction at ``z_i`` trained on unit
    ``i``'s estimation set for arm ``a``; entries with an empty estimation set
    are 0.  The bandwidth is shared by every cell (it depends on the overall
    sample size), and fitting is done one (stratum, fold, arm) cell at a time
    since the estimation set is shared within a cell.
    """
    if not (np.array_equal(plan.labels, frame.labels)
            and np.array_equal(plan.assignments, frame.assignments)):
        raise ValueError("fold plan was not built from this frame's labels/assignments")
    n, k = frame.z.shape
    radius = 0.5 * kernel.bandwidth(n, k)
    mhat = np.zeros((n, 2))
    for s in range(1, plan.num_strata + 1):
        in_stratum = frame.labels == s
        for j in range(1, plan.J + 1):
            eval_idx = np.flatnonzero(in_stratum & (plan.fold_of_unit == j))
            if eval_idx.size == 0:
                continue
            for arm in (0, 1):
                parts = [plan.group(arm, s, jj) for jj in range(1, plan.J + 1) if jj != j]
                parts = [p for p in parts if p.size]
                if not parts:
                    continue  # empty estimation set: mhat stays 0
                train_idx = np.concatenate(parts)
                mhat[eval_idx, arm] = _window_means(
                    frame.z[train_idx], frame.observed_y[train_idx], frame.z[eval_idx], radius,
                )
    return FitMatrix(mhat=mhat)


@dataclass(frozen=True)
class FitMatrix:
    """Per-unit, per-arm regression-adjustment values (column ``a`` is arm ``a``)."""

    mhat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mhat, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("mhat must have shape (n, 2)")
        if not np.isfinite(arr).all():
            raise ValueError("mhat must be finite")
        object.__setattr__(self, "mhat", arr)

    @property
    def n(self) -> int:
        return self.mhat.shape[0]

    def col(self, arm: int) -> np.ndarray:
        return self.mhat[:, arm]
