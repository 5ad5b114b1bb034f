"""Treatment assignment mechanisms and observed-outcome realization.

Two stratified mechanisms are provided:

* ``ssra`` -- simple stratified random assignment: independent
  Bernoulli(pi(s)) coins within each stratum.
* ``spbr`` -- stratified permuted block randomization: within each stratum,
  exactly ``floor(pi(s) * N(s))`` units are treated and the treated subset is
  uniform over all subsets of that size.

Both depend only on the stratum labels and the seed, never on outcomes, and
use per-stratum substreams so strata are independent by construction.
:func:`mechanism_mass` gives the exact conditional probability of an
assignment vector given labels, for small-n oracle checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .population import PotentialSample
from .rng import derive_seed, substream
from .strata import TargetProportions

__all__ = [
    "SSRA",
    "SPBR",
    "MECHANISMS",
    "ExperimentFrame",
    "assign_ssra",
    "assign_spbr",
    "assign",
    "mechanism_mass",
    "realize_outcomes",
    "balance_diagnostic",
]

SSRA = "ssra"
SPBR = "spbr"
MECHANISMS = (SSRA, SPBR)


@dataclass(frozen=True)
class ExperimentFrame:
    """One realized experiment: covariates, strata, assignments, observed outcomes.

    ``sample`` carries the underlying potential outcomes when the frame was
    simulated; frames built from observed data leave it as ``None``.
    """

    z: np.ndarray
    labels: np.ndarray
    assignments: np.ndarray
    observed_y: np.ndarray
    sample: PotentialSample | None = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        labels = np.asarray(self.labels, dtype=int)
        a = np.asarray(self.assignments, dtype=int)
        y = np.asarray(self.observed_y, dtype=float)
        n = z.shape[0]
        if not (labels.shape == a.shape == y.shape == (n,)):
            raise ValueError("z, labels, assignments and observed_y must share length n")
        if n and not np.isin(a, (0, 1)).all():
            raise ValueError("assignments must be binary")
        if self.sample is not None:
            if self.sample.n != n:
                raise ValueError("sample length does not match frame length")
            switched = np.where(a == 1, self.sample.y1, self.sample.y0)
            if not np.array_equal(y, switched):
                raise ValueError("observed_y must equal y1*a + y0*(1-a) exactly")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "assignments", a)
        object.__setattr__(self, "observed_y", y)

    @property
    def n(self) -> int:
        return self.labels.size


def _check_labels(labels, pi: TargetProportions) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-d vector")
    if labels.size and (labels.min() < 1 or labels.max() > pi.num_strata):
        raise ValueError(f"stratum labels must lie in 1..{pi.num_strata}")
    return labels


def _block_size(p: float, n_s: int) -> int:
    # Exact floor of p * n_s with p read as the stored double.
    return math.floor(Fraction(float(p)) * n_s)


def assign_ssra(labels, pi: TargetProportions, seed: int) -> np.ndarray:
    """Independent Bernoulli(pi(s)) assignments within each stratum."""
    labels = _check_labels(labels, pi)
    a = np.zeros(labels.size, dtype=int)
    for s in range(1, pi.num_strata + 1):
        members = np.flatnonzero(labels == s)
        if members.size == 0:
            continue
        rng = substream(seed, s)
        a[members] = rng.random(members.size) < pi.pi[s - 1]
    return a


def assign_spbr(labels, pi: TargetProportions, seed: int) -> np.ndarray:
    """Exactly ``floor(pi(s) * N(s))`` treated per stratum, block uniform at random."""
    labels = _check_labels(labels, pi)
    a = np.zeros(labels.size, dtype=int)
    for s in range(1, pi.num_strata + 1):
        members = np.flatnonzero(labels == s)
        n_s = members.size
        if n_s == 0:
            continue
        n_treat = _block_size(pi.pi[s - 1], n_s)
        if n_treat == 0:
            continue
        rng = substream(seed, s)
        perm = rng.permutation(n_s)
        a[members[perm[:n_treat]]] = 1
    return a


_ASSIGNERS = {SSRA: assign_ssra, SPBR: assign_spbr}


def assign(kind: str, labels, pi: TargetProportions, seed: int) -> np.ndarray:
    """Dispatch to :func:`assign_ssra` or :func:`assign_spbr` by name."""
    try:
        fn = _ASSIGNERS[kind]
    except KeyError:
        raise ValueError(f"unknown mechanism {kind!r}; expected one of {MECHANISMS}") from None
    return fn(labels, pi, seed)


def mechanism_mass(kind: str, a, labels, pi: TargetProportions) -> float:
    """Exact conditional probability of assignment vector ``a`` given ``labels``.

    Intended for small ``n`` (the SSRA product and the per-stratum binomial
    coefficients are evaluated exactly).
    """
    labels = _check_labels(labels, pi)
    a = np.asarray(a, dtype=int)
    if a.shape != labels.shape:
        raise ValueError("assignment vector and labels must have equal length")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError("assignments must be binary")
    if kind == SSRA:
        p = pi.by_unit(labels)
        return float(np.prod(np.where(a == 1, p, 1.0 - p)))
    if kind == SPBR:
        mass = 1.0
        for s in range(1, pi.num_strata + 1):
            in_s = labels == s
            n_s = int(in_s.sum())
            k_s = int(a[in_s].sum())
            if k_s != _block_size(pi.pi[s - 1], n_s):
                return 0.0
            mass /= math.comb(n_s, k_s)
        return mass
    raise ValueError(f"unknown mechanism {kind!r}; expected one of {MECHANISMS}")


def realize_outcomes(sample: PotentialSample, labels, assignments) -> ExperimentFrame:
    """Apply the observed-outcome switching rule Y = Y(1)A + Y(0)(1-A)."""
    labels = np.asarray(labels, dtype=int)
    assignments = np.asarray(assignments, dtype=int)
    if labels.shape != (sample.n,) or assignments.shape != (sample.n,):
        raise ValueError("labels and assignments must have the sample's length")
    observed = np.where(assignments == 1, sample.y1, sample.y0)
    return ExperimentFrame(
        z=sample.z, labels=labels, assignments=assignments,
        observed_y=observed, sample=sample,
    )


def balance_diagnostic(kind: str, pi: TargetProportions, n_grid, reps: int, seed: int,
                       stratum_probs=None, quantiles=(0.5, 0.9)) -> dict[int, dict[str, float]]:
    """Empirical quantiles of ``sqrt(n) * max_s |N(1,s)/N(s) - pi(s)|`` per n.

    Stratum labels are drawn i.i.d. (uniform over strata unless
    ``stratum_probs`` is given) and assignments from ``kind``; empty strata are
    skipped in the max.  Returns ``{n: {"q50": ..., "q90": ..., "max": ...}}``.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    num = pi.num_strata
    if stratum_probs is None:
        probs = np.full(num, 1.0 / num)
    else:
        probs = np.asarray(stratum_probs, dtype=float)
        if probs.shape != (num,) or (probs < 0).any() or not np.isclose(probs.sum(), 1.0):
            raise ValueError("stratum_probs must be a probability vector over the strata")
    out: dict[int, dict[str, float]] = {}
    for i, n in enumerate(n_grid):
        devs = np.empty(reps)
        for r in range(reps):
            rng = substream(seed, i, r, 0)
            labels = rng.choice(np.arange(1, num + 1), size=n, p=probs)
            a = assign(kind, labels, pi, derive_seed(seed, i, r, 1))
            n_s = np.bincount(labels, minlength=num + 1)[1:]
            n_1s = np.bincount(labels[a == 1], minlength=num + 1)[1:]
            nonempty = n_s > 0
            share = n_1s[nonempty] / n_s[nonempty]
            devs[r] = np.sqrt(n) * np.abs(share - pi.pi[nonempty]).max()
        row = {f"q{int(100 * q)}": float(np.quantile(devs, q)) for q in quantiles}
        row["max"] = float(devs.max())
        out[n] = row
    return out
