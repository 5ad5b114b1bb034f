"""Monte Carlo oracles for the two asymptotic variance bounds.

``speb_oracle`` evaluates the covariate-level efficiency bound: the expectation
over covariates of the inverse-propensity-weighted conditional outcome
variances plus the squared centered conditional effect.  Conditional variances
come from the spec's scale function analytically (the additive-noise model
makes Var[Y(a) | Z] = scale(a, Z)**2), so only the covariate draw is simulated.

``vsat_oracle`` evaluates the stratum-level analogue by stratified simulation:
outcomes are simulated including noise, grouped by stratum, and the bound is
assembled from within-stratum means and variances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .population import PopulationSpec
from .rng import derive_seed, substream
from .strata import StrataSpec, TargetProportions

__all__ = [
    "BoundReport",
    "InsufficientSupportError",
    "speb_oracle",
    "vsat_oracle",
    "bound_report",
]

_CHUNK = 1 << 17


class InsufficientSupportError(ValueError):
    """A stratum received too few Monte Carlo draws to estimate its moments."""


@dataclass(frozen=True)
class BoundReport:
    """Both bound oracles with their Monte Carlo standard errors."""

    v_star: float
    v_sat: float
    mc_draws: int
    mc_se_vstar: float
    mc_se_vsat: float


def _check_draws(draws: int) -> None:
    if draws < 10_000:
        raise ValueError("bound oracles need at least 10_000 draws")


def speb_oracle(spec: PopulationSpec, strata: StrataSpec, pi: TargetProportions,
                draws: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Covariate-level bound and its MC standard error.

    Draws are processed in fixed-size chunks with per-chunk substreams, so the
    value is reproducible bit for bit for a given ``(draws, seed)``.
    """
    _check_draws(draws)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_index = 0
    while done < draws:
        m = min(_CHUNK, draws - done)
        rng = substream(seed, chunk_index)
        z = np.asarray(spec.covariate_sampler(rng, m), dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        p = pi.by_unit(strata.classify(z))
        effect = spec.mean_fn(1, z) - spec.mean_fn(0, z) - spec.true_ate
        g = spec.scale_fn(1, z) ** 2 / p + spec.scale_fn(0, z) ** 2 / (1.0 - p) + effect**2
        total += float(g.sum())
        total_sq += float((g**2).sum())
        done += m
        chunk_index += 1
    mean = total / draws
    var = max(total_sq - draws * mean**2, 0.0) / (draws - 1)
    return mean, float(np.sqrt(var / draws))


def vsat_oracle(spec: PopulationSpec, strata: StrataSpec, pi: TargetProportions,
                draws: int = 1_000_000, seed: int = 0,
                min_per_stratum: int = 10_000, max_rounds: int = 20) -> tuple[float, float]:
    """Stratum-level bound and its MC standard error.

    Additional full rounds of ``draws`` are simulated until every stratum has
    at least ``min_per_stratum`` draws; a stratum that stays empty (or too
    small after ``max_rounds``) raises :class:`InsufficientSupportError`.
    """
    _check_draws(draws)
    z_parts, y0_parts, y1_parts = [], [], []
    counts = np.zeros(strata.num_strata + 1, dtype=int)
    labels_parts = []
    for round_index in range(max_rounds):
        rng = substream(seed, round_index)
        z = np.asarray(spec.covariate_sampler(rng, draws), dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        eps = np.asarray(spec.noise_sampler(rng, draws), dtype=float)
        y0 = spec.mean_fn(0, z) + spec.scale_fn(0, z) * eps
        y1 = spec.mean_fn(1, z) + spec.scale_fn(1, z) * eps
        labels = strata.classify(z)
        counts += np.bincount(labels, minlength=strata.num_strata + 1)
        z_parts.append(z)
        y0_parts.append(y0)
        y1_parts.append(y1)
        labels_parts.append(labels)
        if counts[1:].min() >= min_per_stratum:
            break
    else:
        short = int(np.argmin(counts[1:])) + 1
        raise InsufficientSupportError(
            f"stratum {short} received {counts[short]} draws "
            f"(< {min_per_stratum}) after {max_rounds} rounds"
        )
    if counts[1:].min() == 0:
        empty = int(np.flatnonzero(counts[1:] == 0)[0]) + 1
        raise InsufficientSupportError(f"stratum {empty} received no draws")

    labels = np.concatenate(labels_parts)
    y0 = np.concatenate(y0_parts)
    y1 = np.concatenate(y1_parts)
    total = labels.size
    num = strata.num_strata
    mean0 = np.bincount(labels, weights=y0, minlength=num + 1)[1:] / counts[1:]
    mean1 = np.bincount(labels, weights=y1, minlength=num + 1)[1:] / counts[1:]
    effect = mean1 - mean0 - spec.true_ate
    p = pi.pi
    t = (
        (y1 - mean1[labels - 1]) ** 2 / p[labels - 1]
        + (y0 - mean0[labels - 1]) ** 2 / (1.0 - p[labels - 1])
        + effect[labels - 1] ** 2
    )
    return float(t.mean()), float(t.std(ddof=1) / np.sqrt(total))


def bound_report(spec: PopulationSpec, strata: StrataSpec, pi: TargetProportions,
                 draws: int = 1_000_000, seed: int = 0) -> BoundReport:
    """Run both oracles on independent substreams and bundle the results."""
    v_star, se_star = speb_oracle(spec, strata, pi, draws, derive_seed(seed, 1))
    v_sat, se_sat = vsat_oracle(spec, strata, pi, draws, derive_seed(seed, 2))
    return BoundReport(v_star=v_star, v_sat=v_sat, mc_draws=draws,
                       mc_se_vstar=se_star, mc_se_vsat=se_sat)
