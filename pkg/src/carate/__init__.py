"""carate: ATE estimation and simulation under covariate-adaptive randomization.

The package simulates stratified randomized experiments (simple stratified
random assignment and stratified permuted block randomization), computes four
average-treatment-effect estimators including the cross-fitted AIPW estimator,
evaluates the matching asymptotic variance bounds by Monte Carlo, and drives
seeded, reproducible simulation studies over grids of designs.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .assignment import (MECHANISMS, SPBR, SSRA, ExperimentFrame, assign,
                         assign_spbr, assign_ssra, balance_diagnostic,
                         mechanism_mass, realize_outcomes)
from .bounds import (BoundReport, InsufficientSupportError, bound_report,
                     speb_oracle, vsat_oracle)
from .config import ConfigError, load_config
from .crossfit import (FitMatrix, FoldPlan, KernelSpec, crossfit_mhat,
                       default_bandwidth_const, estimation_set, make_folds,
                       nw_predict)
from .estimators import (AIPW_FEASIBLE, AIPW_INFEASIBLE, ESTIMATOR_IDS, IMP,
                         PROPENSITY_MODES, SAMPLE_PROPORTIONS, SAT, TRUE_PI,
                         DegeneratePropensityError, EstimateRecord,
                         RemainderDecomposition, eif, est_aipw_feasible,
                         est_aipw_infeasible, est_imp, est_sat,
                         remainder_decomposition)
from .harness import (DEFAULT_N_GRID, CellSummary, Design, SimConfig,
                      materialize_design, render_tables, replication_seeds,
                      run_cell, run_replication, run_table)
from .population import (BUILTIN_DGPS, PopulationSpec, PotentialSample,
                         make_builtin_dgp, make_dgp, register_dgp,
                         sample_population, true_ate)
from .rng import derive_seed, substream
from .strata import (StrataSpec, StratumCounts, TargetProportions,
                     builtin_proportions, builtin_strata, constant_proportions,
                     interval_strata, stratum_counts)

__all__ = [
    "__version__",
    # population
    "PopulationSpec", "PotentialSample", "BUILTIN_DGPS", "make_builtin_dgp",
    "make_dgp", "register_dgp", "sample_population", "true_ate",
    # strata
    "StrataSpec", "TargetProportions", "StratumCounts", "builtin_strata",
    "interval_strata", "builtin_proportions", "constant_proportions", "stratum_counts",
    # assignment
    "SSRA", "SPBR", "MECHANISMS", "ExperimentFrame", "assign", "assign_ssra",
    "assign_spbr", "mechanism_mass", "realize_outcomes", "balance_diagnostic",
    # crossfit
    "FoldPlan", "KernelSpec", "FitMatrix", "default_bandwidth_const",
    "make_folds", "estimation_set", "nw_predict", "crossfit_mhat",
    # estimators
    "SAT", "IMP", "AIPW_INFEASIBLE", "AIPW_FEASIBLE", "ESTIMATOR_IDS",
    "TRUE_PI", "SAMPLE_PROPORTIONS", "PROPENSITY_MODES", "EstimateRecord",
    "RemainderDecomposition", "DegeneratePropensityError", "eif", "est_sat",
    "est_imp", "est_aipw_infeasible", "est_aipw_feasible", "remainder_decomposition",
    # bounds
    "BoundReport", "InsufficientSupportError", "speb_oracle", "vsat_oracle", "bound_report",
    # harness
    "SimConfig", "CellSummary", "Design", "DEFAULT_N_GRID", "materialize_design",
    "replication_seeds", "run_replication", "run_cell", "run_table", "render_tables",
    # config / seeds
    "ConfigError", "load_config", "derive_seed", "substream",
]
