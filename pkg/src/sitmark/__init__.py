"""Simulation, pricing and risk tools for a standardized AI-token futures market."""

__version__ = "0.1.0"

from .errors import DomainError, SitmarkError, ValidationError
from .supply_cost import CostStructure, SupplyFactors, marginal_cost, token_supply, total_unit_cost
from .process import (
    Ensemble,
    PricePath,
    ProcessParams,
    derive_path_seed,
    long_term_mean,
    simulate_ensemble,
    simulate_path,
)
from .index import IndexSnapshot, ProviderQuote, capped_weights, compute_tpi, qualifies_as_sit, sit_equivalent_price
from .pricing import FuturesQuote, futures_curve, futures_price, mc_futures_oracle
from .clearing import (
    ContractSpec,
    MarginAccount,
    apply_price_limits,
    check_mm_compliance,
    initial_margin,
    listing_calendar,
    mark_to_market,
    realized_vol_20d,
    round_to_tick,
)
from .hedging import (
    BasisSpec,
    HedgeInputs,
    HedgeReport,
    RollRule,
    backtest_hedge,
    estimate_from_series,
    hedge_efficiency,
    hedged_variance,
    optimal_hedge_ratio,
    single_period_hedge,
)
from .engine import DEFAULT_SCENARIOS, EnsembleStats, ScenarioSpec, run_scenario, sensitivity_sweep, summarize, vol_term_structure
from .config import RunConfig, load_config, save_config
