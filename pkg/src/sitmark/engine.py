"""Scenario ensembles, summary statistics and parameter sweeps."""

from dataclasses import dataclass, field
import math
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, ValidationError
from .hedging import BasisSpec, RollRule, backtest_hedge
from .process import DEFAULT_DT, PARAM_NAMES, Ensemble, ProcessParams, simulate_ensemble

PERCENTILES = (5, 25, 75, 95)
DEFAULT_BUCKET_EDGES = (0.0, 0.25, 1.0, 3.0)


@dataclass(frozen=True)
class ScenarioSpec:
    """A named set of overrides on the baseline parameters."""

    name: str
    overrides: Mapping[str, float] = field(default_factory=dict)
    mixture_weight: float = 1.0

    def __post_init__(self):
        unknown = set(self.overrides) - set(PARAM_NAMES)
        if unknown:
            raise ValidationError(f"scenario {self.name!r}: unknown parameter(s) {sorted(unknown)}")
        if self.mixture_weight < 0:
            raise ValidationError(f"scenario {self.name!r}: mixture_weight must be >= 0")

    def params(self, base: ProcessParams) -> ProcessParams:
        return base.with_overrides(**dict(self.overrides))


# Illustrative values, not calibrated: they only make the three mean paths
# bracket the baseline (optimistic = demand boom, pessimistic = faster decline).
DEFAULT_SCENARIOS = (
    ScenarioSpec("baseline", {}, 0.5),
    ScenarioSpec("optimistic", {"beta": 0.10, "lam": 4.5, "mu_j": 0.15}, 0.3),
    ScenarioSpec("pessimistic", {"beta": -0.55}, 0.2),
)


def check_mixture(scenarios: Sequence[ScenarioSpec]):
    total = math.fsum(s.mixture_weight for s in scenarios)
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"scenario mixture weights sum to {total}, not 1")


def run_scenario(spec: ScenarioSpec, base: ProcessParams = ProcessParams(), n_paths: int = 10_000, horizon: float = 3.0, dt: float = DEFAULT_DT, seed: int = 0, x0: Optional[float] = None) -> Ensemble:
    """Simulate an ensemble under ``base`` overlaid with the scenario's overrides.

    ``x0`` defaults to the scenario's ``theta0``.
    """
    params = spec.params(base)
    return simulate_ensemble(params, params.theta0 if x0 is None else x0, horizon, dt, n_paths, seed)


@dataclass
class EnsembleStats:
    """Cross-path summary of an ensemble (prices, not log prices)."""

    times: np.ndarray
    mean: np.ndarray
    bands: dict  # percentile -> array over time
    terminal_skewness: float
    terminal_skewness_se: float
    degenerate: bool
    frac_doubling: float
    frac_swing5: float
    bucket_edges: tuple
    bucket_vol: np.ndarray

    def fan_chart_rows(self):
        for i, t in enumerate(self.times):
            yield (float(t), float(self.mean[i])) + tuple(float(self.bands[p][i]) for p in PERCENTILES)


def skewness(x) -> float:
    """Adjusted Fisher-Pearson sample skewness (0 for a constant sample)."""
    x = np.asarray(x, dtype=float)
    if np.ptp(x) == 0:
        return 0.0
    return float(stats.skew(x, bias=False))


def bootstrap_se(x, statistic, n_boot: int = 200, seed: int = 0) -> float:
    x = np.asarray(x, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    vals = [statistic(x[rng.integers(0, x.size, x.size)]) for _ in range(n_boot)]
    return float(np.std(vals, ddof=1))


def doubling_fraction(log_prices: np.ndarray) -> float:
    """Share of paths whose price reaches at least twice its starting value."""
    rise = (log_prices - log_prices[:, :1]).max(axis=1)
    return float(np.mean(rise >= math.log(2.0) - 1e-12))


def swing_fraction(log_prices: np.ndarray, ratio: float = 5.0) -> float:
    """Share of paths with a peak-to-later-trough price ratio above ``ratio``."""
    drawdown = (np.maximum.accumulate(log_prices, axis=1) - log_prices).max(axis=1)
    return float(np.mean(drawdown > math.log(ratio)))


def bucket_volatility(times: np.ndarray, log_prices: np.ndarray, edges: Sequence[float] = DEFAULT_BUCKET_EDGES) -> np.ndarray:
    """Annualized volatility of one-step log changes in each horizon bucket.

    Every step's changes are demeaned across all paths (so scenario drift
    differences in a pooled mixture count as dispersion), squared, averaged
    over the steps ending in ``(lo, hi]`` and divided by the step length.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("bucket edges must be strictly increasing")
    if edges[0] != 0 or edges[-1] > times[-1] * (1 + 1e-12):
        raise ValidationError(f"buckets must cover (0, horizon] within horizon {times[-1]}")
    dx = np.diff(log_prices, axis=1)
    h = np.diff(times)
    step_var = dx.var(axis=0, ddof=1) / h
    ends = times[1:]
    out = np.empty(edges.size - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        mask = (ends > lo + 1e-12) & (ends <= hi + 1e-12)
        if not mask.any():
            raise ValidationError(f"bucket ({lo}, {hi}] contains no simulation steps")
        out[i] = math.sqrt(step_var[mask].mean())
    return out


def summarize(ensemble: Ensemble, bucket_edges: Optional[Sequence[float]] = None) -> EnsembleStats:
    """Percentile fan, terminal skewness and tail metrics of an ensemble.

    Skewness of identical paths is reported as 0 with ``degenerate`` set.
    """
    if ensemble.n_paths < 2:
        raise ValidationError("summarize needs at least two paths")
    x = ensemble.log_prices
    prices = np.exp(x)
    terminal = prices[:, -1]
    degenerate = bool(np.ptp(terminal) == 0)
    skew = skewness(terminal)
    skew_se = 0.0 if degenerate else bootstrap_se(terminal, skewness)
    if bucket_edges is None:
        bucket_edges = tuple(e for e in DEFAULT_BUCKET_EDGES if e < ensemble.horizon) + (ensemble.horizon,)
    pct = np.percentile(prices, PERCENTILES, axis=0)
    return EnsembleStats(
        times=ensemble.times,
        mean=prices.mean(axis=0),
        bands={p: pct[i] for i, p in enumerate(PERCENTILES)},
        terminal_skewness=skew,
        terminal_skewness_se=skew_se,
        degenerate=degenerate,
        frac_doubling=doubling_fraction(x),
        frac_swing5=swing_fraction(x),
        bucket_edges=tuple(bucket_edges),
        bucket_vol=bucket_volatility(ensemble.times, x, bucket_edges),
    )


def _allocate(n_paths: int, weights: Sequence[float]) -> list:
    raw = np.asarray(weights, dtype=float) * n_paths
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts), kind="stable")[: n_paths - counts.sum()]:
        counts[i] += 1
    return counts.tolist()


def _scenario_seed(base_seed: int, k: int) -> int:
    return int(np.random.SeedSequence(entropy=int(base_seed), spawn_key=(10_000 + k,)).generate_state(1, dtype=np.uint64)[0])


def mixture_ensemble(scenarios: Sequence[ScenarioSpec], base: ProcessParams = ProcessParams(), n_paths: int = 10_000, horizon: float = 3.0, dt: float = DEFAULT_DT, seed: int = 0, x0: Optional[float] = None):
    """Pool scenario ensembles with path counts proportional to mixture weights.

    All scenarios start from the same ``x0`` (default: baseline ``theta0``).
    Returns ``(times, log_prices, labels)``.
    """
    check_mixture(scenarios)
    x0 = base.theta0 if x0 is None else x0
    blocks, labels, times = [], [], None
    for k, (spec, m) in enumerate(zip(scenarios, _allocate(n_paths, [s.mixture_weight for s in scenarios]))):
        if m == 0:
            continue
        ens = run_scenario(spec, base, m, horizon, dt, _scenario_seed(seed, k), x0)
        times = ens.times
        blocks.append(ens.log_prices)
        labels += [spec.name] * m
    return times, np.vstack(blocks), labels


def vol_term_structure(scenarios: Sequence[ScenarioSpec] = DEFAULT_SCENARIOS, base: ProcessParams = ProcessParams(), n_paths: int = 10_000, bucket_edges: Sequence[float] = DEFAULT_BUCKET_EDGES, dt: float = DEFAULT_DT, seed: int = 0) -> np.ndarray:
    """Annualized realized volatility per horizon bucket of the scenario mixture."""
    times, x, _ = mixture_ensemble(scenarios, base, n_paths, float(bucket_edges[-1]), dt, seed)
    return bucket_volatility(times, x, bucket_edges)


HEDGE_METRICS = ("hedged_cost_std", "unhedged_cost_std", "variance_reduction", "std_reduction", "h_star")
ENSEMBLE_METRICS = ("terminal_mean", "terminal_p90", "terminal_skewness", "frac_doubling", "frac_swing5")
METRICS = ENSEMBLE_METRICS + HEDGE_METRICS


def _ensemble_metric(name: str, ens: Ensemble) -> float:
    x = ens.log_prices
    if name == "terminal_mean":
        return float(np.exp(x[:, -1]).mean())
    if name == "terminal_p90":
        return float(np.percentile(np.exp(x[:, -1]), 90))
    if name == "terminal_skewness":
        return skewness(np.exp(x[:, -1]))
    if name == "frac_doubling":
        return doubling_fraction(x)
    return swing_fraction(x)


def sensitivity_sweep(
    parameter: str,
    values: Sequence[float],
    base: ProcessParams = ProcessParams(),
    metric: str = "terminal_p90",
    n_paths: int = 2_000,
    horizon: float = 3.0,
    dt: float = DEFAULT_DT,
    seed: int = 0,
    hedge_horizon: float = 1.0,
    target_rho: float = 0.85,
    roll: RollRule = RollRule(),
):
    """Rerun the pipeline for each value of one parameter with a shared seed.

    ``parameter`` is a process parameter name or ``"target_rho"``. Hedge
    metrics come from ``backtest_hedge`` over ``hedge_horizon``.

    Returns
    -------
    list of (value, metric) pairs
    """
    if parameter not in PARAM_NAMES and parameter != "target_rho":
        raise ValidationError(f"unknown sweep parameter {parameter!r}")
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}; choose from {METRICS}")
    if parameter == "target_rho" and metric not in HEDGE_METRICS:
        raise ValidationError("sweeping target_rho only affects hedge metrics")
    sim_horizon = max(horizon, hedge_horizon) if metric in HEDGE_METRICS else horizon
    rows = []
    shared = None
    for v in values:
        if parameter == "target_rho":
            if shared is None:
                shared = simulate_ensemble(base, base.theta0, sim_horizon, dt, n_paths, seed)
            ens, rho = shared, float(v)
        else:
            try:
                params = base.with_overrides(**{parameter: float(v)})
            except DomainError as exc:
                raise ValidationError(f"{parameter}={v}: {exc}") from None
            ens, rho = simulate_ensemble(params, params.theta0, sim_horizon, dt, n_paths, seed), target_rho
        if metric in HEDGE_METRICS:
            rep = backtest_hedge(ens, BasisSpec(target_rho=rho), hedge_horizon, roll)
            val = {
                "hedged_cost_std": rep.hedged_std,
                "unhedged_cost_std": rep.unhedged_std,
                "variance_reduction": rep.variance_reduction,
                "std_reduction": rep.std_reduction,
                "h_star": rep.h_star,
            }[metric]
        else:
            val = _ensemble_metric(metric, ens)
        rows.append((float(v), float(val)))
    return rows
