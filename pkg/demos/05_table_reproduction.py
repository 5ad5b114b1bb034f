#!/usr/bin/env python3
"""Reduced-scale reproduction of the benchmark simulation table.

Runs the full pipeline -- sample, stratify, assign, cross-fit, estimate --
for two univariate designs over a short grid of sample sizes and prints the
rendered table: MSE and bias of sqrt(n) * (estimate - ATE) per estimator,
with the two variance-bound oracles alongside.  Scale up ``reps`` and
``n_grid`` (or use the ``carate simulate`` command) for publication-grade
precision.
"""
import time

import carate as c

config = c.SimConfig(
    dgps=("dgp1", "dgp2"),
    num_strata=5,
    proportions="constant",
    mechanism="spbr",
    n_grid=(500, 2000, 8000),
    reps=300,
    folds=2,
    seed=314159,
    jobs=2,
    bound_draws=200_000,
)

start = time.time()
rows = c.run_table(config)
print(c.render_tables(rows))
print(f"{config.reps} replications per cell in {time.time() - start:.0f}s; "
      "the asymptotically efficient estimator should approach v_star at large n "
      "while the stratum-only estimator is pinned at v_sat.")
