"""
Simulating token prices
=======================

The log price reverts toward a drifting, seasonal long-term mean and jumps
a few times a year. This walk-through simulates the calibrated baseline,
prints a coarse fan chart and the tail statistics.
"""

import math

import numpy as np

from sitmark import ProcessParams, simulate_ensemble, summarize

params = ProcessParams()
print(params)
print(f"half-life of a shock: {params.half_life * 12:.2f} months")

# 10,000 daily paths over three years, starting at $2.00 per million tokens
ens = simulate_ensemble(params, math.log(2.0), 3.0, n_paths=10_000, base_seed=20260102)
stats = summarize(ens)

print("\nmonth   mean     p5    p25    p75    p95")
for k in range(0, ens.times.size, 63):
    row = [stats.mean[k]] + [stats.bands[p][k] for p in (5, 25, 75, 95)]
    print(f"{ens.times[k] * 12:5.0f} " + " ".join(f"{v:6.2f}" for v in row))

print(f"\npaths that double at some point: {stats.frac_doubling:.1%}")
print(f"paths with a peak-to-trough fall beyond 5x: {stats.frac_swing5:.1%}")
print(f"terminal skewness {stats.terminal_skewness:.2f} (bootstrap SE {stats.terminal_skewness_se:.2f})")

# jumps per path over three years should average lam * 3
print(f"mean jump count per path: {ens.jump_marks.sum(axis=1).mean():.2f} (expected {params.lam * 3:.0f})")
