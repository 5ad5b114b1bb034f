"""Monte Carlo experiment driver.

A :class:`SimConfig` pins down a family of simulation cells -- data-generating
process(es), stratification, target proportions, assignment mechanism, sample
sizes -- plus estimator settings, replication count and a master seed.  Every
replication derives its own seeds by hashing the master seed with the cell
coordinates and replication index, so results are reproducible bit for bit
regardless of worker count or scheduling.

Cell results are summarized as the mean squared error and bias of
``sqrt(n) * (estimate - true_ate)`` across replications, with Monte Carlo
standard errors taken from the replication-level distributions.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from . import assignment as asg
from . import estimators as est
from .bounds import bound_report
from .crossfit import KernelSpec, crossfit_mhat, default_bandwidth_const, make_folds
from .population import PopulationSpec, make_dgp, sample_population
from .rng import derive_seed
from .strata import (StrataSpec, TargetProportions, builtin_proportions,
                     builtin_strata, interval_strata)

__all__ = [
    "SimConfig",
    "CellSummary",
    "Design",
    "DEFAULT_N_GRID",
    "materialize_design",
    "replication_seeds",
    "run_replication",
    "replication_values",
    "run_cell",
    "run_table",
    "render_tables",
]

DEFAULT_N_GRID = (500, 1000, 2000, 4000, 8000)

_BLOCK = 50  # replications per work unit; fixed so blocking never affects results

_PROP_CODES = {"constant": 0, "varying": 1, "custom": 2}
_MECH_CODES = {asg.SSRA: 0, asg.SPBR: 1}


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; see module docstring.

    ``proportions`` is ``"constant"``, ``"varying"`` or an explicit vector;
    ``breakpoints`` switches stratification from the builtin equal segments to
    explicit interior cut points on the first covariate.  ``bandwidth_const``
    of ``None`` selects the per-dimension default.
    """

    dgps: tuple[str, ...] = ("dgp1",)
    num_strata: int = 5
    breakpoints: tuple[float, ...] | None = None
    proportions: str | tuple[float, ...] = "constant"
    mechanism: str = asg.SPBR
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    reps: int = 5000
    folds: int = 2
    bandwidth_const: float | None = None
    kernel: str = "uniform"
    propensity_mode: str = est.TRUE_PI
    seed: int = 1729
    jobs: int = 1
    bound_draws: int = 1_000_000

    def __post_init__(self):
        if not self.dgps:
            raise ValueError("at least one DGP is required")
        if self.mechanism not in asg.MECHANISMS:
            raise ValueError(f"mechanism must be one of {asg.MECHANISMS}")
        if self.propensity_mode not in est.PROPENSITY_MODES:
            raise ValueError(f"propensity_mode must be one of {est.PROPENSITY_MODES}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if any(n < 1 for n in self.n_grid):
            raise ValueError("n_grid entries must be positive")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    @property
    def proportions_label(self) -> str:
        return self.proportions if isinstance(self.proportions, str) else "custom"


@dataclass(frozen=True)
class Design:
    """Materialized design objects for one DGP under a config."""

    spec: PopulationSpec
    strata: StrataSpec
    pi: TargetProportions
    kernel: KernelSpec


def materialize_design(config: SimConfig, dgp: str) -> Design:
    spec = make_dgp(dgp)
    if config.breakpoints is not None:
        strata = interval_strata(config.breakpoints)
    else:
        strata = builtin_strata(config.num_strata)
    if isinstance(config.proportions, str):
        pi = builtin_proportions(strata.num_strata, config.proportions)
    else:
        pi = TargetProportions(np.asarray(config.proportions, dtype=float))
        if pi.num_strata != strata.num_strata:
            raise ValueError("explicit proportions length must match the number of strata")
    c = config.bandwidth_const
    kernel = KernelSpec(default_bandwidth_const(spec.dim_k) if c is None else c, config.kernel)
    return Design(spec=spec, strata=strata, pi=pi, kernel=kernel)


def _cell_key(config: SimConfig, dgp: str, n: int) -> tuple[int, ...]:
    return (
        zlib.crc32(dgp.lower().encode()),
        int(config.num_strata if config.breakpoints is None else len(config.breakpoints) + 1),
        _PROP_CODES[config.proportions_label],
        _MECH_CODES[config.mechanism],
        int(n),
    )


def replication_seeds(config: SimConfig, dgp: str, n: int, rep_index: int) -> tuple[int, int, int]:
    """(sample, assignment, fold) seeds for one replication, as plain integers."""
    key = _cell_key(config, dgp, n)
    return tuple(derive_seed(config.seed, *key, rep_index, stage) for stage in (0, 1, 2))


def run_replication(config: SimConfig, n: int, rep_index: int,
                    dgp: str | None = None, design: Design | None = None,
                    ) -> dict[str, est.EstimateRecord]:
    """Simulate one replication and compute all four estimators.

    A degenerate sample propensity (possible only with
    ``propensity_mode="sample_proportions"``) is returned as a flagged
    NaN record for the feasible estimator rather than raised.
    """
    dgp = dgp or config.dgps[0]
    design = design or materialize_design(config, dgp)
    sample_seed, assign_seed, fold_seed = replication_seeds(config, dgp, n, rep_index)

    sample = sample_population(design.spec, n, sample_seed)
    labels = design.strata.classify(sample.z)
    a = asg.assign(config.mechanism, labels, design.pi, assign_seed)
    frame = asg.realize_outcomes(sample, labels, a)
    plan = make_folds(labels, a, config.folds, fold_seed)
    fits = crossfit_mhat(frame, plan, design.kernel)

    records = {
        est.SAT: est.est_sat(frame),
        est.IMP: est.est_imp(frame, fits),
        est.AIPW_INFEASIBLE: est.est_aipw_infeasible(frame, design.spec, design.pi),
    }
    try:
        records[est.AIPW_FEASIBLE] = est.est_aipw_feasible(
            frame, fits, design.pi, config.propensity_mode)
    except est.DegeneratePropensityError as exc:
        records[est.AIPW_FEASIBLE] = est.EstimateRecord(
            estimator=est.AIPW_FEASIBLE, value=float("nan"), n=n,
            flags=(f"degenerate_propensity:{exc}",),
        )
    return records


def _run_block(config: SimConfig, dgp: str, n: int, lo: int, hi: int):
    design = materialize_design(config, dgp)
    values = np.empty((hi - lo, len(est.ESTIMATOR_IDS)))
    flagged = np.zeros((hi - lo, len(est.ESTIMATOR_IDS)), dtype=bool)
    for r in range(lo, hi):
        records = run_replication(config, n, r, dgp=dgp, design=design)
        for e, name in enumerate(est.ESTIMATOR_IDS):
            rec = records[name]
            values[r - lo, e] = rec.value
            flagged[r - lo, e] = rec.degenerate
    return values, flagged


@dataclass(frozen=True)
class CellSummary:
    """Monte Carlo summary for one estimator in one cell."""

    estimator: str
    dgp: str
    n: int
    num_strata: int
    proportions: str
    mechanism: str
    folds: int
    reps_used: int
    degenerate_count: int
    mse_root_n: float
    bias_root_n: float
    mc_se_mse: float
    mc_se_bias: float
    unreliable: bool = False
    v_star: float | None = None
    v_sat: float | None = None


def _summarize(config: SimConfig, dgp: str, n: int, beta0: float,
               values: np.ndarray, flagged: np.ndarray) -> list[CellSummary]:
    rows = []
    reps = values.shape[0]
    for e, name in enumerate(est.ESTIMATOR_IDS):
        keep = ~flagged[:, e]
        r = np.sqrt(n) * (values[keep, e] - beta0)
        used = int(keep.sum())
        dropped = reps - used
        sq = r**2
        rows.append(CellSummary(
            estimator=name, dgp=dgp, n=n,
            num_strata=config.num_strata, proportions=config.proportions_label,
            mechanism=config.mechanism, folds=config.folds,
            reps_used=used, degenerate_count=dropped,
            mse_root_n=float(sq.mean()) if used else float("nan"),
            bias_root_n=float(r.mean()) if used else float("nan"),
            mc_se_mse=float(sq.std(ddof=1) / np.sqrt(used)) if used > 1 else float("nan"),
            mc_se_bias=float(r.std(ddof=1) / np.sqrt(used)) if used > 1 else float("nan"),
            unreliable=dropped > 0.01 * reps,
        ))
    return rows


def replication_values(config: SimConfig, dgp: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw per-replication estimates for one (dgp, n) cell.

    Returns ``(values, flagged)`` with one row per replication and one column
    per estimator in :data:`carate.estimators.ESTIMATOR_IDS` order; flagged
    entries are degenerate (NaN value).  Replications are split into
    fixed-size blocks distributed over ``config.jobs`` workers; block
    structure and aggregation order do not depend on the worker count.
    """
    bounds_list = [(lo, min(lo + _BLOCK, config.reps)) for lo in range(0, config.reps, _BLOCK)]
    if config.jobs == 1 or len(bounds_list) == 1:
        parts = [_run_block(config, dgp, n, lo, hi) for lo, hi in bounds_list]
    else:
        parts = Parallel(n_jobs=config.jobs)(
            delayed(_run_block)(config, dgp, n, lo, hi) for lo, hi in bounds_list)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def run_cell(config: SimConfig, dgp: str, n: int) -> list[CellSummary]:
    """Run all replications of one (dgp, n) cell; one summary per estimator."""
    design = materialize_design(config, dgp)
    values, flagged = replication_values(config, dgp, n)
    return _summarize(config, dgp, n, design.spec.true_ate, values, flagged)


def run_table(config: SimConfig) -> list[CellSummary]:
    """Run the full (dgp x n) grid of the config, with bound-oracle columns.

    Rows are ordered by DGP (config order), then sample size, then estimator.
    """
    rows: list[CellSummary] = []
    for dgp in config.dgps:
        design = materialize_design(config, dgp)
        report = bound_report(
            design.spec, design.strata, design.pi, config.bound_draws,
            seed=derive_seed(config.seed, *_cell_key(config, dgp, 0), 3),
        )
        for n in config.n_grid:
            for row in run_cell(config, dgp, n):
                rows.append(replace(row, v_star=report.v_star, v_sat=report.v_sat))
    return rows


def render_tables(rows: Sequence[CellSummary]) -> str:
    """Plain-text tables, one per design, mirroring the results CSV."""
    designs: dict[tuple, list[CellSummary]] = {}
    for row in rows:
        designs.setdefault((row.num_strata, row.proportions, row.mechanism, row.folds), []).append(row)
    sections = []
    for (num_strata, proportions, mechanism, folds), group in designs.items():
        cells: dict[tuple[str, int], dict[str, CellSummary]] = {}
        for row in group:
            cells.setdefault((row.dgp, row.n), {})[row.estimator] = row
        head = (f"strata={num_strata}  proportions={proportions}  "
                f"mechanism={mechanism}  folds={folds}")
        lines = [head, "=" * len(head)]
        est_cols = [name for name in est.ESTIMATOR_IDS]
        header = f"{'dgp':<6}{'n':>6}"
        for name in est_cols:
            header += f"{name + ' mse':>18}{'bias':>9}"
        header += f"{'v_star':>10}{'v_sat':>9}"
        lines.append(header)
        for (dgp, n), per_est in cells.items():
            line = f"{dgp:<6}{n:>6}"
            for name in est_cols:
                row = per_est.get(name)
                if row is None or row.reps_used == 0:
                    line += f"{'--':>18}{'--':>9}"
                else:
                    line += f"{row.mse_root_n:>18.3f}{row.bias_root_n:>9.3f}"
            any_row = next(iter(per_est.values()))
            if any_row.v_star is None:
                line += f"{'--':>10}{'--':>9}"
            else:
                line += f"{any_row.v_star:>10.3f}{any_row.v_sat:>9.3f}"
            lines.append(line)
        sections.append("\n".join(lines))
    return "\n\n".join(sections) + "\n"
