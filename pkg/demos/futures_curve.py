"""
The futures curve
=================

A futures price is the expected terminal spot. With the trend negative the
curve slopes down (backwardation) after the seasonal bump. The closed form
is checked against brute-force sampling.
"""

from datetime import date
import math

from sitmark import ProcessParams, futures_curve, futures_price, mc_futures_oracle

params = ProcessParams()
x0 = math.log(2.0)

print("listed contracts on 2026-01-02")
for q in futures_curve(x0, 0.0, params, as_of=date(2026, 1, 2)):
    print(f"  T = {q.T:5.3f}y  F = {q.price:.4f}")

print("\nclosed form vs 200k-path Monte Carlo")
for tau in (1 / 12, 0.5, 1.0, 3.0):
    f = futures_price(x0, 0.0, tau, params)
    mean, se = mc_futures_oracle(x0, 0.0, tau, params, n_paths=200_000, seed=1)
    print(f"  tau {tau:5.3f}: {f:.4f} vs {mean:.4f} +- {se:.4f}  (z = {(f - mean) / se:+.2f})")

# jumps with positive mean lift the curve
no_jumps = params.with_overrides(lam=0.0)
print(f"\none-year price with jumps {futures_price(x0, 0, 1, params):.4f}, without {futures_price(x0, 0, 1, no_jumps):.4f}")
