"""Token Price Index: benchmark qualification, capability-adjusted prices and capped volume weights."""

from dataclasses import dataclass, field
import math
from typing import Mapping, Optional, Sequence

from .errors import DomainError, ValidationError

SIT_THRESHOLDS = {"MMLU": 86.0, "HumanEval": 67.0, "GSM8K": 92.0}
DEFAULT_S_SIT = 100.0
DEFAULT_CAP = 0.30


@dataclass(frozen=True)
class ProviderQuote:
    """One provider's observation for a settlement window.

    ``raw_price`` is quoted per million tokens; ``benchmarks`` maps benchmark
    name to score in percent.
    """

    provider_id: str
    raw_price: float
    capability_score: float
    volume: float
    benchmarks: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.raw_price > 0:
            raise DomainError(f"{self.provider_id}: raw_price must be > 0")
        if not self.capability_score > 0:
            raise DomainError(f"{self.provider_id}: capability_score must be > 0")
        if self.volume < 0:
            raise DomainError(f"{self.provider_id}: volume must be >= 0")


@dataclass(frozen=True)
class IndexSnapshot:
    tpi: float
    weights: dict
    timestamp: Optional[str] = None
    s_sit: float = DEFAULT_S_SIT


def qualifies_as_sit(benchmarks: Mapping[str, float]) -> bool:
    """True when every benchmark meets its SIT threshold (inclusive)."""
    lowered = {k.lower(): v for k, v in benchmarks.items()}
    for name, threshold in SIT_THRESHOLDS.items():
        if name.lower() not in lowered:
            raise ValidationError(f"missing benchmark {name!r}")
    return all(lowered[name.lower()] >= threshold for name, threshold in SIT_THRESHOLDS.items())


def sit_equivalent_price(quote: ProviderQuote, s_sit: float = DEFAULT_S_SIT) -> float:
    """Raw price rescaled to benchmark capability: ``raw_price * s_sit / capability_score``."""
    if not quote.capability_score > 0:
        raise DomainError(f"{quote.provider_id}: capability_score must be > 0")
    return quote.raw_price * s_sit / quote.capability_score


def capped_weights(quotes: Sequence[ProviderQuote], cap: float = DEFAULT_CAP) -> dict:
    """Volume weights with a per-provider ceiling.

    Starts from volume shares, fixes every weight above ``cap`` at exactly
    ``cap`` and spreads the remaining mass over the uncapped providers in
    proportion to volume, repeating until no weight exceeds the cap. Each
    pass caps at least one more provider, so at most ``len(quotes)`` passes
    are needed.
    """
    if not quotes:
        raise DomainError("at least one quote is required")
    ids = [q.provider_id for q in quotes]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate provider_id in quotes")
    volumes = {q.provider_id: float(q.volume) for q in quotes}
    total = sum(volumes.values())
    if not total > 0:
        raise DomainError("all volumes are zero")
    if not 0 < cap <= 1:
        raise DomainError(f"cap must lie in (0, 1], got {cap!r}")
    active = [i for i in ids if volumes[i] > 0]
    if cap * len(active) < 1 - 1e-12:
        need = math.ceil(1 / cap - 1e-12)
        raise DomainError(
            f"cap {cap} infeasible with {len(active)} provider(s) with positive volume; at least {need} required"
        )

    capped = set()
    weights = {i: volumes[i] / total for i in ids}
    for _ in range(len(ids)):
        over = [i for i in ids if i not in capped and weights[i] > cap + 1e-15]
        if not over:
            break
        capped.update(over)
        free = [i for i in ids if i not in capped]
        free_volume = sum(volumes[i] for i in free)
        remainder = 1.0 - cap * len(capped)
        for i in capped:
            weights[i] = cap
        for i in free:
            weights[i] = remainder * volumes[i] / free_volume if free_volume > 0 else 0.0
    return weights


def compute_tpi(quotes: Sequence[ProviderQuote], s_sit: float = DEFAULT_S_SIT, cap: float = DEFAULT_CAP, timestamp: Optional[str] = None) -> IndexSnapshot:
    """Index value ``sum_i w_i * sit_equivalent_price_i`` over qualified providers.

    Raises
    ------
    ValidationError
        If any provider fails the SIT benchmark thresholds.
    """
    for q in quotes:
        try:
            ok = qualifies_as_sit(q.benchmarks)
        except ValidationError as exc:
            raise ValidationError(f"provider {q.provider_id!r}: {exc}") from None
        if not ok:
            raise ValidationError(f"provider {q.provider_id!r} does not qualify as SIT")
    weights = capped_weights(quotes, cap)
    tpi = math.fsum(weights[q.provider_id] * sit_equivalent_price(q, s_sit) for q in quotes)
    return IndexSnapshot(tpi, weights, timestamp, s_sit)
