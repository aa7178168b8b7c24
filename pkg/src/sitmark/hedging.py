"""Minimum-variance hedging and rolled-futures hedge backtests.

The backtest buyer purchases a constant token quantity every trading day at
spot, so the unhedged cost per million SIT is the average spot price over the
horizon. The hedge is a long position in the front-month contract, sized each
day so that its sensitivity to the log spot matches that of the remaining
purchases, scaled by a hedge ratio ``h``. Futures trade at the model price
times ``exp(b_t)``, where ``b_t`` is a zero-mean Ornstein-Uhlenbeck basis.
"""

from dataclasses import dataclass, field
from datetime import date
import math
from typing import Optional, Union

import numpy as np

from .clearing import third_wednesday
from .errors import DomainError, ValidationError
from .pricing import adjustment, jump_adjustment_grid
from .process import Ensemble

DEFAULT_START = date(2026, 1, 2)


@dataclass(frozen=True)
class HedgeInputs:
    rho: float
    sigma_s: float
    sigma_f: float
    spot_quantity: float = 1.0

    def __post_init__(self):
        if not -1.0 - 1e-12 <= self.rho <= 1.0 + 1e-12:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho!r}")
        if self.sigma_s < 0 or self.sigma_f < 0:
            raise DomainError("standard deviations must be >= 0")


@dataclass
class HedgeReport:
    """Outcome of a hedge.

    ``variance_reduction`` is ``1 - var_hedged / var_unhedged`` and
    ``std_reduction`` is ``1 - std_hedged / std_unhedged``;
    ``efficiency_theoretical`` is the squared correlation.
    """

    h_star: float
    unhedged_std: float
    hedged_std: float
    variance_reduction: float
    efficiency_theoretical: float
    rho: float = float("nan")
    h_used: float = float("nan")
    std_reduction: float = float("nan")
    n_paths: int = 0
    basis_sigma: float = float("nan")
    unhedged_costs: Optional[np.ndarray] = field(default=None, repr=False)
    hedged_costs: Optional[np.ndarray] = field(default=None, repr=False)

    def summary(self) -> str:
        return (
            f"h* = {self.h_star:.4f} (used {self.h_used:.4f}), rho = {self.rho:.4f}\n"
            f"cost std: unhedged {self.unhedged_std:.4f}, hedged {self.hedged_std:.4f}\n"
            f"variance reduction {self.variance_reduction:.2%} (rho^2 = {self.efficiency_theoretical:.2%}), "
            f"std reduction {self.std_reduction:.2%}"
        )

    def as_row(self) -> dict:
        return {
            "h_star": self.h_star,
            "h_used": self.h_used,
            "rho": self.rho,
            "unhedged_std": self.unhedged_std,
            "hedged_std": self.hedged_std,
            "variance_reduction": self.variance_reduction,
            "std_reduction": self.std_reduction,
            "efficiency_theoretical": self.efficiency_theoretical,
            "basis_sigma": self.basis_sigma,
            "n_paths": self.n_paths,
        }


def optimal_hedge_ratio(inputs: HedgeInputs) -> float:
    """``h* = rho * sigma_s / sigma_f``."""
    if not inputs.sigma_f > 0:
        raise DomainError("sigma_f must be > 0: a constant futures price cannot hedge")
    return inputs.rho * inputs.sigma_s / inputs.sigma_f


def hedged_variance(h: float, inputs: HedgeInputs) -> float:
    """Variance of ``dS - h dF`` per unit of squared spot quantity."""
    s, f, r = inputs.sigma_s, inputs.sigma_f, inputs.rho
    return s * s - 2.0 * h * r * s * f + h * h * f * f


def hedge_efficiency(rho: float) -> float:
    """Proportional variance reduction at the optimal ratio, ``rho**2``."""
    if abs(rho) > 1.0 + 1e-12:
        raise DomainError(f"|rho| must be <= 1, got {rho!r}")
    return rho * rho


def estimate_from_series(spot_changes, futures_changes) -> HedgeInputs:
    """Sample correlation and (n - 1)-normalized standard deviations of paired changes."""
    s = np.asarray(spot_changes, dtype=float).ravel()
    f = np.asarray(futures_changes, dtype=float).ravel()
    if s.size != f.size:
        raise ValidationError(f"length mismatch: {s.size} spot vs {f.size} futures changes")
    if s.size < 2:
        raise ValidationError("need at least two observations")
    sd_s = float(np.std(s, ddof=1))
    sd_f = float(np.std(f, ddof=1))
    if not sd_f > 0:
        raise ValidationError("futures changes have zero variance")
    if sd_s == 0:
        return HedgeInputs(0.0, 0.0, sd_f)
    cov = float(np.sum((s - s.mean()) * (f - f.mean())) / (s.size - 1))
    rho = float(np.clip(cov / (sd_s * sd_f), -1.0, 1.0))
    return HedgeInputs(rho, sd_s, sd_f)


def hedge_report(spot_changes, futures_changes, h: Union[float, str] = "optimal") -> HedgeReport:
    """Hedge ``spot_changes`` with ``futures_changes`` at ratio ``h`` (``"optimal"`` estimates h* in-sample)."""
    s = np.asarray(spot_changes, dtype=float).ravel()
    f = np.asarray(futures_changes, dtype=float).ravel()
    est = estimate_from_series(s, f)
    h_star = optimal_hedge_ratio(est)
    h_used = h_star if h == "optimal" else float(h)
    hedged = s - h_used * f
    var_u = float(np.var(s, ddof=1))
    var_h = float(np.var(hedged, ddof=1))
    vr = 1.0 - var_h / var_u if var_u > 0 else 0.0
    return HedgeReport(
        h_star=h_star,
        unhedged_std=math.sqrt(var_u),
        hedged_std=math.sqrt(var_h),
        variance_reduction=vr,
        efficiency_theoretical=hedge_efficiency(est.rho),
        rho=est.rho,
        h_used=h_used,
        std_reduction=1.0 - math.sqrt(var_h / var_u) if var_u > 0 else 0.0,
        n_paths=s.size,
        unhedged_costs=s,
        hedged_costs=hedged,
    )


@dataclass(frozen=True)
class BasisSpec:
    """Log basis between futures transaction prices and model futures prices.

    ``b`` is an Ornstein-Uhlenbeck process with reversion speed ``kappa`` (per
    year; ``None`` reuses the spot's reversion speed) started from its
    stationary law. When ``sigma`` is ``None`` it is
    calibrated so the daily log-change correlation between spot and the held
    futures contract equals ``target_rho``.
    """

    target_rho: Optional[float] = 0.85
    kappa: Optional[float] = None
    sigma: Optional[float] = None
    seed_key: int = 1

    def __post_init__(self):
        if self.kappa is not None and not self.kappa > 0:
            raise DomainError("basis kappa must be > 0")
        if self.sigma is None and self.target_rho is None:
            raise DomainError("give either a basis sigma or a target_rho")
        if self.sigma is not None and self.sigma < 0:
            raise DomainError("basis sigma must be >= 0")
        if self.target_rho is not None and not 0 < self.target_rho <= 1:
            raise DomainError("target_rho must lie in (0, 1]")


NO_BASIS = BasisSpec(target_rho=None, sigma=0.0)


@dataclass(frozen=True)
class RollRule:
    """Hold the front month until ``days_before_expiry`` trading days before its
    last trading day, then switch to the next month at that day's price.
    Positions are resized every ``rebalance_every`` steps.
    """

    days_before_expiry: int = 5
    rebalance_every: int = 1

    def __post_init__(self):
        if self.days_before_expiry < 0 or self.rebalance_every < 1:
            raise DomainError("invalid roll rule")


def contract_expiry_steps(start: date, n_steps: int, dt: float, roll: RollRule) -> np.ndarray:
    """Expiry step indices of consecutive monthly contracts covering ``n_steps``.

    Steps count trading days from ``start`` (one step = ``dt`` years, one
    trading day = 1/252 year).
    """
    expiries = []
    y, m = start.year, start.month
    while not expiries or expiries[-1] - roll.days_before_expiry <= n_steps + 1:
        ltd = third_wednesday(y, m)
        if ltd > start:
            expiries.append(int(round(np.busday_count(start, ltd) / 252.0 / dt)))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return np.array(expiries)


def _held_contract(n_steps: int, expiries: np.ndarray, roll: RollRule) -> np.ndarray:
    roll_steps = expiries - roll.days_before_expiry
    steps = np.arange(n_steps)
    # contract held over [d, d + 1]: first whose roll step lies after d
    idx = np.searchsorted(roll_steps, steps, side="right")
    return expiries[idx]


def _basis_paths(n_paths: int, n_steps: int, dt: float, kappa: float, base_seed: int, seed_key: int) -> np.ndarray:
    """Unit-volatility OU basis paths (multiply by sigma for the actual basis)."""
    a = math.exp(-kappa * dt)
    step_sd = math.sqrt(-math.expm1(-2.0 * kappa * dt) / (2.0 * kappa))
    stat_sd = math.sqrt(1.0 / (2.0 * kappa))
    z = np.empty((n_paths, n_steps + 1))
    for i in range(n_paths):
        ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(i, int(seed_key)))
        z[i] = np.random.Generator(np.random.PCG64(ss)).standard_normal(n_steps + 1)
    b = np.empty_like(z)
    b[:, 0] = stat_sd * z[:, 0]
    for k in range(n_steps):
        b[:, k + 1] = a * b[:, k] + step_sd * z[:, k + 1]
    return b


def _check_ensemble(ensemble: Ensemble, horizon: float):
    if ensemble.n_paths < 2:
        raise ValidationError("need at least two paths")
    dts = np.diff(ensemble.times)
    dt = float(dts[0])
    if not np.allclose(dts, dt, rtol=1e-9, atol=0):
        raise ValidationError("backtests need a uniform time grid")
    n = int(round(horizon / dt))
    if n < 1 or n >= ensemble.times.size:
        raise ValidationError(f"ensemble horizon {ensemble.horizon} does not cover backtest horizon {horizon}")
    if not np.all(np.isfinite(ensemble.log_prices[:, : n + 1])):
        raise ValidationError("ensemble contains non-finite log prices")
    return dt, n


class _Market:
    """Model futures prices of the contracts held along each path."""

    def __init__(self, ensemble: Ensemble, horizon: float, roll: RollRule, start: date, beta_shift: float = 0.0):
        self.dt, self.n = _check_ensemble(ensemble, horizon)
        self.params = ensemble.params
        self.x = ensemble.log_prices[:, : self.n + 1]
        self.t = ensemble.times[: self.n + 1]
        self.beta_shift = beta_shift
        expiries = contract_expiry_steps(start, self.n, self.dt, roll)
        self.held = _held_contract(self.n, expiries, roll)
        self.T_held = self.held * self.dt
        k = self.params.kappa
        # log model futures of the held contract at both ends of each step
        t0, t1 = self.t[:-1], self.t[1:]
        self.logf0 = np.exp(-k * (self.T_held - t0)) * self.x[:, :-1] + adjustment(t0, self.T_held, self.params, beta_shift)
        self.logf1 = np.exp(-k * (self.T_held - t1)) * self.x[:, 1:] + adjustment(t1, self.T_held, self.params, beta_shift)

    def log_changes(self):
        return self.x[:, 1:] - self.x[:, :-1], self.logf1 - self.logf0


def calibrate_basis_sigma(spot_dlog: np.ndarray, fut_dlog: np.ndarray, basis_unit: np.ndarray, target_rho: float, tol: float = 1e-6) -> float:
    """Bisect the basis volatility so pooled daily log changes correlate at ``target_rho``.

    ``basis_unit`` holds the unit-volatility basis; with shocks held fixed the
    correlation falls monotonically as the volatility grows.
    """
    db = np.diff(basis_unit, axis=1)
    s = spot_dlog.ravel() - spot_dlog.mean()
    f = fut_dlog.ravel() - fut_dlog.mean()
    g = db.ravel() - db.mean()
    ss, ff, gg = s @ s, f @ f, g @ g
    sf, sg, fg = s @ f, s @ g, f @ g

    def corr(sig):
        return (sf + sig * sg) / math.sqrt(ss * (ff + 2 * sig * fg + sig * sig * gg))

    if corr(0.0) < target_rho:
        raise ValidationError(f"model correlation without basis ({corr(0.0):.4f}) is below target {target_rho}")
    lo, hi = 0.0, 1.0
    while corr(hi) > target_rho:
        hi *= 2.0
        if hi > 1e6:
            raise ValidationError("could not bracket basis volatility")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if corr(mid) > target_rho:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _resolve_basis(market: _Market, basis: BasisSpec, base_seed: int):
    kappa = market.params.kappa if basis.kappa is None else basis.kappa
    unit = _basis_paths(market.x.shape[0], market.n, market.dt, kappa, base_seed, basis.seed_key)
    if basis.sigma is not None:
        return basis.sigma, unit
    ds, df = market.log_changes()
    return calibrate_basis_sigma(ds, df, unit, basis.target_rho), unit


def single_period_hedge(ensemble: Ensemble, basis: BasisSpec = BasisSpec(), horizon: Optional[float] = None, roll: RollRule = RollRule(), start: date = DEFAULT_START, h: Union[float, str] = "optimal", basis_sigma: Optional[float] = None) -> HedgeReport:
    """Hedge one-step spot log changes with one-step futures log changes, pooled over steps and paths.

    ``basis_sigma`` forces the basis volatility (for out-of-sample checks).
    """
    horizon = ensemble.horizon if horizon is None else horizon
    market = _Market(ensemble, horizon, roll, start)
    if basis_sigma is not None:
        basis = BasisSpec(target_rho=None, kappa=basis.kappa, sigma=basis_sigma, seed_key=basis.seed_key)
    sig, unit = _resolve_basis(market, basis, ensemble.base_seed)
    ds, df = market.log_changes()
    df = df + sig * np.diff(unit, axis=1)
    rep = hedge_report(ds, df, h)
    rep.basis_sigma = sig
    return rep


def backtest_hedge(ensemble: Ensemble, basis: BasisSpec = BasisSpec(), horizon: float = 1.0, roll: RollRule = RollRule(), h: Union[float, str] = "optimal", start: date = DEFAULT_START, beta_shift: float = 0.0, basis_sigma: Optional[float] = None) -> HedgeReport:
    """Procurement-cost hedge backtest over ``horizon`` years.

    Parameters
    ----------
    ensemble : Ensemble
        Spot paths on a uniform grid covering ``horizon``.
    basis : BasisSpec
        Basis model; its volatility is calibrated on the ensemble unless fixed.
    horizon : float
        Procurement horizon in years.
    roll : RollRule
    h : float or "optimal"
        Scale on the sensitivity-matched position; ``"optimal"`` estimates
        ``rho * sigma_cost / sigma_gain`` across paths.
    start : date
        Calendar date of step 0, used to place contract expiries.
    beta_shift : float
        Trend adjustment of the pricing measure used for futures prices.
    basis_sigma : float, optional
        Overrides the basis volatility.

    Returns
    -------
    HedgeReport
        Costs are average purchase prices per million SIT.
    """
    market = _Market(ensemble, horizon, roll, start, beta_shift)
    if basis_sigma is not None:
        basis = BasisSpec(target_rho=None, kappa=basis.kappa, sigma=basis_sigma, seed_key=basis.seed_key)
    sig, unit = _resolve_basis(market, basis, ensemble.base_seed)
    p = ensemble.params
    n, dt, k = market.n, market.dt, p.kappa
    x, t = market.x, market.t
    q = 1.0 / n

    # cost: one purchase per step at steps 1..n
    cost = q * np.exp(x[:, 1:]).sum(axis=1)

    # A(t_d, t_s) for every pair d < s; the jump and variance parts depend only on s - d
    lags = np.arange(n + 1) * dt
    jump_lag = jump_adjustment_grid(lags, p if beta_shift == 0 else p.with_overrides(beta=p.beta + beta_shift))
    b = sig * unit
    f0 = np.exp(market.logf0 + b[:, :-1])
    f1 = np.exp(market.logf1 + b[:, 1:])

    gain = np.zeros(x.shape[0])
    pos = None
    for d in range(n):
        if d % roll.rebalance_every == 0 or pos is None:
            s_idx = np.arange(d + 1, n + 1)
            tau = lags[s_idx - d]
            c = np.exp(-k * tau)
            a_ds = adjustment(t[d], t[s_idx], p, beta_shift, jump_term=jump_lag[s_idx - d])
            exposure_delta = q * (np.exp(np.outer(x[:, d], c) + a_ds) * c).sum(axis=1)
            c_f = math.exp(-k * (market.T_held[d] - t[d]))
            fut_delta = np.exp(market.logf0[:, d]) * c_f
            pos = exposure_delta / fut_delta
        gain += pos * (f1[:, d] - f0[:, d])

    est = estimate_from_series(cost, gain)
    h_star = optimal_hedge_ratio(est)
    h_used = h_star if h == "optimal" else float(h)
    hedged = cost - h_used * gain
    var_u = float(np.var(cost, ddof=1))
    var_h = float(np.var(hedged, ddof=1))
    if not var_u > 0:
        raise ValidationError("degenerate ensemble: unhedged cost has zero variance")
    return HedgeReport(
        h_star=h_star,
        unhedged_std=math.sqrt(var_u),
        hedged_std=math.sqrt(var_h),
        variance_reduction=1.0 - var_h / var_u,
        efficiency_theoretical=hedge_efficiency(est.rho),
        rho=est.rho,
        h_used=h_used,
        std_reduction=1.0 - math.sqrt(var_h / var_u),
        n_paths=int(cost.size),
        basis_sigma=sig,
        unhedged_costs=cost,
        hedged_costs=hedged,
    )
