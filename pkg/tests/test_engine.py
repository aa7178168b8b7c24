import math

import numpy as np
import pytest

from conftest import LN2
from sitmark.engine import (
    DEFAULT_SCENARIOS,
    ScenarioSpec,
    bootstrap_se,
    bucket_volatility,
    check_mixture,
    doubling_fraction,
    mixture_ensemble,
    run_scenario,
    sensitivity_sweep,
    skewness,
    summarize,
    swing_fraction,
    vol_term_structure,
)
from sitmark.errors import DomainError, ValidationError
from sitmark.pricing import futures_prices
from sitmark.process import ProcessParams, simulate_ensemble


def lognormal_skew(s2):
    return (math.exp(s2) + 2) * math.sqrt(math.expm1(s2))


@pytest.fixture(scope="module")
def baseline():
    return run_scenario(DEFAULT_SCENARIOS[0], n_paths=4000, horizon=3.0, seed=17)


def test_run_scenario_matches_direct_simulation():
    a = run_scenario(ScenarioSpec("b"), n_paths=20, horizon=0.5, seed=3)
    b = simulate_ensemble(ProcessParams(), LN2, 0.5, n_paths=20, base_seed=3)
    assert np.array_equal(a.log_prices, b.log_prices)
    with pytest.raises(DomainError):
        run_scenario(ScenarioSpec("bad", {"kappa": -1.0}), n_paths=2, horizon=0.1)
    with pytest.raises(ValidationError):
        ScenarioSpec("bad", {"lambda": 1.0})


def test_degenerate_ensemble():
    ens = run_scenario(ScenarioSpec("flat", {"sigma": 0.0, "lam": 0.0}), n_paths=10, horizon=0.5)
    assert np.all(ens.log_prices == ens.log_prices[0])
    st = summarize(ens)
    assert st.degenerate and st.terminal_skewness == 0.0 and st.terminal_skewness_se == 0.0
    assert np.array_equal(st.bands[5], st.bands[95])


def test_skewness_matches_lognormal_formula():
    rng = np.random.default_rng(0)
    s = 0.35
    x = np.exp(rng.normal(0.0, s, 20_000))
    se = bootstrap_se(x, skewness)
    assert abs(skewness(x) - lognormal_skew(s * s)) < 3 * se


def test_terminal_skewness_on_gaussian_log_ensemble():
    p = ProcessParams(lam=0.0)
    ens = simulate_ensemble(p, LN2, 2.0, n_paths=10_000, base_seed=5)
    st = summarize(ens)
    s2 = p.sigma**2 * -math.expm1(-2 * p.kappa * 2.0) / (2 * p.kappa)
    assert abs(st.terminal_skewness - lognormal_skew(s2)) < 3 * st.terminal_skewness_se


def test_band_ordering_and_widening(baseline):
    st = summarize(baseline)
    assert np.all(st.bands[5] <= st.bands[25]) and np.all(st.bands[25] <= st.bands[75]) and np.all(st.bands[75] <= st.bands[95])
    # spread in log terms; price-level widths also shrink with the falling trend
    width = np.log(st.bands[95] / st.bands[5])
    assert np.all(np.diff(width[[21, 63, 126, 252]]) > 0)
    rows = list(st.fan_chart_rows())
    assert len(rows) == baseline.times.size and rows[0][1] == pytest.approx(2.0)


def test_mean_path_matches_futures_curve(baseline):
    st = summarize(baseline)
    sd = np.exp(baseline.log_prices).std(axis=0, ddof=1) / math.sqrt(baseline.n_paths)
    ks = np.arange(63, baseline.times.size, 63)
    expected = futures_prices(LN2, 0.0, baseline.times[ks], baseline.params)
    assert np.all(np.abs(st.mean[ks] - expected) < 3.5 * sd[ks])
    # with beta < 0 the expected price keeps falling over the final year
    assert expected[-1] < expected[-5]


def test_positive_skew(baseline):
    st = summarize(baseline)
    assert st.terminal_skewness > 3 * st.terminal_skewness_se


def test_tail_metrics_by_hand():
    x = np.log(np.array([[1.0, 2.0, 0.3], [1.0, 1.9, 2.1], [1.0, 6.0, 1.1], [1.0, 0.9, 0.8]]))
    assert doubling_fraction(x) == pytest.approx(0.75)
    assert swing_fraction(x) == pytest.approx(0.5)
    assert swing_fraction(x, ratio=10.0) == 0.0


def test_flat_vol_without_jumps():
    p = ProcessParams(lam=0.0)
    ens = simulate_ensemble(p, LN2, 3.0, n_paths=2000, base_seed=8)
    vols = bucket_volatility(ens.times, ens.log_prices)
    # per-bucket estimate pools thousands of steps x paths; relative error well below 1%
    assert vols == pytest.approx([0.40] * 3, rel=0.01)


def test_divergent_trends_raise_mid_horizon_vol():
    toy = (ScenarioSpec("up", {"beta": 3.0}, 0.5), ScenarioSpec("down", {"beta": -3.0}, 0.5))
    vols = vol_term_structure(toy, ProcessParams(lam=0.0), n_paths=2000, seed=2)
    assert vols[1] > vols[0]


def test_bucket_validation(baseline):
    with pytest.raises(ValidationError):
        bucket_volatility(baseline.times, baseline.log_prices, (0.0, 1.0, 0.5))
    with pytest.raises(ValidationError):
        bucket_volatility(baseline.times, baseline.log_prices, (0.0, 5.0))
    with pytest.raises(ValidationError):
        bucket_volatility(baseline.times, baseline.log_prices, (0.0, 1e-4, 1.0))


def test_mixture_allocation():
    times, x, labels = mixture_ensemble(DEFAULT_SCENARIOS, n_paths=101, horizon=0.1, seed=1)
    counts = {s.name: labels.count(s.name) for s in DEFAULT_SCENARIOS}
    assert counts == {"baseline": 51, "optimistic": 30, "pessimistic": 20}
    assert x.shape == (101, times.size)
    with pytest.raises(ValidationError):
        check_mixture([ScenarioSpec("a", {}, 0.5)])


def test_sweep_length_one_and_errors():
    rows = sensitivity_sweep("beta", [-0.35], n_paths=200, horizon=0.5)
    assert len(rows) == 1 and rows[0][0] == -0.35
    with pytest.raises(ValidationError):
        sensitivity_sweep("demand", [1.0])
    with pytest.raises(ValidationError):
        sensitivity_sweep("beta", [1.0], metric="nope")
    with pytest.raises(ValidationError):
        sensitivity_sweep("kappa", [-1.0], n_paths=10, horizon=0.1)


def test_sweep_trend_raises_p90():
    rows = sensitivity_sweep("beta", [-0.35, 0.0, 0.35, 0.7], n_paths=1000, horizon=3.0, seed=4)
    vals = [m for _, m in rows]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_sweep_rho_lowers_hedged_std():
    rows = sensitivity_sweep("target_rho", [0.7, 0.85, 0.95], metric="hedged_cost_std", n_paths=800, horizon=0.5, hedge_horizon=0.5, seed=6)
    vals = [m for _, m in rows]
    assert vals[0] >= vals[1] >= vals[2]
