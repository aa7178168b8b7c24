"""
Scenarios and sensitivities
===========================

Three demand scenarios are mixed to form a volatility term structure, and a
few one-parameter sweeps show how the price distribution responds. Every
sweep point reuses the same random numbers.
"""

from sitmark import DEFAULT_SCENARIOS, ProcessParams, sensitivity_sweep, vol_term_structure

for s in DEFAULT_SCENARIOS:
    print(f"{s.name:12s} weight {s.mixture_weight:.1f} overrides {dict(s.overrides)}")

vols = vol_term_structure(n_paths=4_000, seed=1)
for (lo, hi), v in zip([(0, 3), (3, 12), (12, 36)], vols):
    print(f"months {lo:2d}-{hi:2d}: realized vol {v:.3f}")

print("\ntrend vs 36-month 90th percentile")
for beta, p90 in sensitivity_sweep("beta", [-0.55, -0.35, 0.0, 0.35], n_paths=2_000):
    print(f"  beta {beta:+.2f}: {p90:.2f}")

print("\njump intensity vs skewness")
for lam, sk in sensitivity_sweep("lam", [0.0, 3.0, 6.0], metric="terminal_skewness", n_paths=2_000):
    print(f"  lam {lam:.0f}: {sk:.2f}")

print("\nbasis correlation vs hedged cost std")
for rho, sd in sensitivity_sweep("target_rho", [0.7, 0.85, 0.95], metric="hedged_cost_std", n_paths=2_000):
    print(f"  rho {rho:.2f}: {sd:.4f}")
