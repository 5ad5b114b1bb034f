#!/usr/bin/env python3
"""Assignment mechanisms and their balance rates.

Permuted-block assignment nails the stratum treatment counts up to the floor
rounding (deviation at most 1/N per stratum), while Bernoulli assignment
fluctuates at the root-n scale.  The table shows empirical quantiles of
sqrt(n) * max_s |N(1,s)/N(s) - pi(s)| across replications.
"""
import numpy as np

import carate as c

pi = c.builtin_proportions(5, "varying")
n_grid = [250, 1000, 4000, 16000]

for kind in c.MECHANISMS:
    table = c.balance_diagnostic(kind, pi, n_grid, reps=400, seed=7)
    print(f"{kind}: scaled imbalance quantiles")
    print(f"  {'n':>6} {'median':>8} {'q90':>8} {'max':>8}")
    for n in n_grid:
        row = table[n]
        print(f"  {n:>6} {row['q50']:>8.3f} {row['q90']:>8.3f} {row['max']:>8.3f}")
    print()

# The exact conditional law of an assignment vector is available for small n;
# with one stratum of five units and pi = 1/2, exactly two units are treated
# and each of the C(5,2) = 10 blocks has mass 1/10.
labels = np.ones(5, dtype=int)
half = c.constant_proportions(1, 0.5)
for a in ([1, 1, 0, 0, 0], [1, 0, 1, 0, 0], [1, 1, 1, 0, 0]):
    print(f"P(A = {a} | one stratum, pi=1/2) = "
          f"{c.mechanism_mass('spbr', a, labels, half):.3f}")
