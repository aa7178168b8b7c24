"""Token supply capacity and provider unit-cost arithmetic.

Units are documentation only: energy cost in currency/kWh, hardware
efficiency in FLOPS per currency unit, algorithm efficiency in tokens per
FLOP, capital in currency.
"""

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class SupplyFactors:
    energy_cost: float
    hardware_eff: float
    algo_eff: float
    capital: float

    def __post_init__(self):
        for name in ("energy_cost", "hardware_eff", "algo_eff", "capital"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class CostStructure:
    train_cost: float
    lifetime_tokens: float
    marginal_cost: float

    def __post_init__(self):
        if not self.lifetime_tokens > 0:
            raise DomainError(f"lifetime_tokens must be > 0, got {self.lifetime_tokens!r}")
        if self.train_cost < 0 or self.marginal_cost < 0:
            raise DomainError("costs must be non-negative")


def token_supply(factors: SupplyFactors) -> float:
    """Token supply capacity ``hardware_eff * algo_eff / energy_cost * capital``."""
    return factors.hardware_eff * factors.algo_eff / factors.energy_cost * factors.capital


def marginal_cost(energy_cost: float, hardware_eff: float, algo_eff: float) -> float:
    """Marginal inference cost per token, ``energy_cost / (hardware_eff * algo_eff)``."""
    if not (energy_cost > 0 and hardware_eff > 0 and algo_eff > 0):
        raise DomainError("energy_cost, hardware_eff and algo_eff must all be positive")
    return energy_cost / (hardware_eff * algo_eff)


def total_unit_cost(cost: CostStructure) -> float:
    """Amortized training cost per token plus marginal inference cost."""
    return cost.train_cost / cost.lifetime_tokens + cost.marginal_cost
