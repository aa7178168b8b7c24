"""Contract terms, listing calendar, margin, daily settlement and price limits."""

from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from decimal import ROUND_HALF_UP, Decimal
import math
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ValidationError

QUARTERLY_MONTHS = (3, 6, 9, 12)


@dataclass(frozen=True)
class ContractSpec:
    """Futures contract terms.

    ``margin_floor_fraction`` sets the initial-margin floor as a fraction of
    notional; ``margin_floor`` (absolute currency) overrides it when given.
    """

    lot_size: float = 1_000_000.0
    tick: float = 0.01
    limit_tier1: float = 0.15
    limit_tier2: float = 0.25
    maintenance_ratio: float = 0.75
    margin_alpha: float = 3.0
    margin_floor_fraction: float = 0.08
    margin_floor: Optional[float] = None
    holding_period: float = 21.0 / 252.0
    n_monthly: int = 6
    n_quarterly: int = 4
    mm_uptime: float = 0.80
    mm_front_spread: float = 0.02
    mm_back_spread: float = 0.05
    mm_min_size: float = 50.0
    mm_net_capital: float = 50_000_000.0

    def __post_init__(self):
        if not self.tick > 0:
            raise DomainError("tick must be > 0")
        if not 0 < self.limit_tier1 < self.limit_tier2 < 1:
            raise DomainError("price limits must satisfy 0 < tier1 < tier2 < 1")
        if not 0 < self.maintenance_ratio < 1:
            raise DomainError("maintenance_ratio must lie in (0, 1)")
        if self.margin_alpha < 0 or self.margin_floor_fraction < 0:
            raise DomainError("margin_alpha and margin_floor_fraction must be >= 0")
        if self.margin_floor is not None and self.margin_floor < 0:
            raise DomainError("margin_floor must be >= 0")
        if self.n_monthly < 0 or self.n_quarterly < 0:
            raise DomainError("listing counts must be >= 0")

    def floor_for(self, notional: float) -> float:
        return self.margin_floor if self.margin_floor is not None else self.margin_floor_fraction * notional

    @property
    def units_per_lot(self) -> float:
        # prices are quoted per million SIT
        return self.lot_size / 1e6


def realized_vol_20d(settle_prices: Sequence[float]) -> float:
    """Annualized sample volatility of the last 20 daily log returns."""
    p = np.asarray(settle_prices, dtype=float)
    if p.size < 21:
        raise ValidationError(f"need at least 21 prices, got {p.size}")
    p = p[-21:]
    if np.any(p <= 0):
        raise ValidationError("prices must be strictly positive")
    r = np.diff(np.log(p))
    return float(np.std(r, ddof=1) * math.sqrt(252.0))


def initial_margin(sigma20: float, holding_period: float, notional: float, spec: ContractSpec = ContractSpec()) -> float:
    """``max(alpha * sigma20 * sqrt(T) * notional, floor)``."""
    if sigma20 < 0 or holding_period < 0:
        raise DomainError("sigma20 and holding_period must be >= 0")
    if not notional > 0:
        raise DomainError("notional must be > 0")
    return max(spec.margin_alpha * sigma20 * math.sqrt(holding_period) * notional, spec.floor_for(notional))


@dataclass(frozen=True)
class MarginAccount:
    position: float
    balance: float
    initial_margin: float
    maintenance_margin: float
    last_settle: float

    @classmethod
    def open(cls, position: float, initial_margin: float, settle: float, spec: ContractSpec = ContractSpec(), balance: Optional[float] = None):
        """New account funded with ``initial_margin`` unless ``balance`` is given."""
        return cls(
            position=position,
            balance=initial_margin if balance is None else balance,
            initial_margin=initial_margin,
            maintenance_margin=spec.maintenance_ratio * initial_margin,
            last_settle=settle,
        )


def mark_to_market(account: MarginAccount, new_settle: float, spec: ContractSpec = ContractSpec()):
    """Settle one day's price move.

    Returns
    -------
    (account, cashflow, margin_call)
    """
    if not new_settle > 0:
        raise DomainError("settlement price must be > 0")
    cashflow = account.position * spec.units_per_lot * (new_settle - account.last_settle)
    updated = replace(account, balance=account.balance + cashflow, last_settle=new_settle)
    return updated, cashflow, updated.balance < updated.maintenance_margin


@dataclass(frozen=True)
class LimitOutcome:
    price: float
    tier: str  # "none", "tier1_halt" or "tier2_halt"


def apply_price_limits(reference: float, proposed: float, spec: ContractSpec = ContractSpec()) -> LimitOutcome:
    """Clamp a proposed price to the daily limit bands around ``reference``.

    A move within tier 1 is accepted; a move beyond tier 1 but within tier 2
    is clamped to the tier-1 boundary; anything larger is clamped to the
    tier-2 boundary.
    """
    if not reference > 0:
        raise DomainError("reference price must be > 0")
    move = proposed / reference - 1.0
    sign = 1.0 if move >= 0 else -1.0
    eps = 1e-12
    if abs(move) <= spec.limit_tier1 + eps:
        return LimitOutcome(proposed, "none")
    if abs(move) <= spec.limit_tier2 + eps:
        return LimitOutcome(reference * (1.0 + sign * spec.limit_tier1), "tier1_halt")
    return LimitOutcome(reference * (1.0 + sign * spec.limit_tier2), "tier2_halt")


def round_to_tick(price: float, spec: ContractSpec = ContractSpec()) -> float:
    """Nearest tick multiple, ties away from zero, using the decimal value of ``price``."""
    if price < 0:
        raise DomainError("price must be >= 0")
    tick = Decimal(repr(spec.tick))
    n = (Decimal(repr(float(price))) / tick).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return float(n * tick)


def third_wednesday(year: int, month: int) -> date:
    first = date(year, month, 1)
    return first + timedelta(days=(2 - first.weekday()) % 7 + 14)


def _add_months(year: int, month: int, k: int):
    m = year * 12 + (month - 1) + k
    return m // 12, m % 12 + 1


def listing_calendar(as_of: date, spec: ContractSpec = ContractSpec(), include_expiring: bool = False):
    """Listed contract months on ``as_of`` with their last trading days.

    A contract is live while ``as_of`` precedes its last trading day; on the
    last trading day itself it counts as expired (after the session) unless
    ``include_expiring``. Quarterly contracts that coincide with a listed
    monthly are skipped forward to the next distinct quarter.

    Returns
    -------
    list of ((year, month), last_trading_day), sorted by expiry.
    """

    def live(ltd):
        return ltd > as_of or (include_expiring and ltd == as_of)

    listed = []
    y, m = as_of.year, as_of.month
    while len(listed) < spec.n_monthly:
        ltd = third_wednesday(y, m)
        if live(ltd):
            listed.append(((y, m), ltd))
        y, m = _add_months(y, m, 1)
    months = {ym for ym, _ in listed}
    quarterlies = []
    y, m = as_of.year, as_of.month
    while len(quarterlies) < spec.n_quarterly:
        ltd = third_wednesday(y, m)
        if m in QUARTERLY_MONTHS and (y, m) not in months and live(ltd):
            quarterlies.append(((y, m), ltd))
        y, m = _add_months(y, m, 1)
    return listed + quarterlies


@dataclass(frozen=True)
class MMQuote:
    """A market maker's standing two-sided quote from ``timestamp`` until its next update.

    ``bid`` or ``ask`` set to ``None`` withdraws the quote.
    """

    timestamp: float
    contract: str
    bid: Optional[float]
    ask: Optional[float]
    bid_size: float = 0.0
    ask_size: float = 0.0


@dataclass
class ComplianceReport:
    uptime: dict
    uptime_ok: bool
    spread_violations: dict
    size_violations: dict
    net_capital_ok: Optional[bool]
    front_month: Optional[str] = None
    violations: list = field(default_factory=list)

    @property
    def compliant(self) -> bool:
        return not self.violations


def _seconds(x) -> float:
    return x.total_seconds() if isinstance(x, timedelta) else float(x)


def check_mm_compliance(quote_log: Sequence[MMQuote], session, spec: ContractSpec = ContractSpec(), front_month: Optional[str] = None, net_capital: Optional[float] = None) -> ComplianceReport:
    """Check quoting obligations over one session.

    Uptime is the share of the session during which a contract carries a
    live two-sided quote; spread is measured against the mid. The front
    month defaults to the smallest contract label.
    """
    start, end = session
    length = _seconds(end - start)
    if not length > 0:
        raise DomainError("session must be non-empty")
    contracts = sorted({q.contract for q in quote_log})
    if front_month is None and contracts:
        front_month = contracts[0]
    uptime, spread_bad, size_bad = {}, {}, {}
    violations = []
    for c in contracts:
        qs = sorted((q for q in quote_log if q.contract == c), key=lambda q: q.timestamp)
        live = 0.0
        spread_bad[c] = 0
        size_bad[c] = 0
        limit = spec.mm_front_spread if c == front_month else spec.mm_back_spread
        for i, q in enumerate(qs):
            t0 = _seconds(q.timestamp - start)
            t1 = _seconds(qs[i + 1].timestamp - start) if i + 1 < len(qs) else length
            t0, t1 = max(t0, 0.0), min(t1, length)
            two_sided = q.bid is not None and q.ask is not None and q.ask >= q.bid > 0
            if not two_sided:
                continue
            if t1 > t0:
                live += t1 - t0
            mid = 0.5 * (q.bid + q.ask)
            if (q.ask - q.bid) / mid > limit + 1e-12:
                spread_bad[c] += 1
            if min(q.bid_size, q.ask_size) < spec.mm_min_size:
                size_bad[c] += 1
        uptime[c] = live / length
        if uptime[c] < spec.mm_uptime:
            violations.append(f"{c}: uptime {uptime[c]:.3f} below {spec.mm_uptime}")
        if spread_bad[c]:
            violations.append(f"{c}: {spread_bad[c]} quote(s) wider than {limit:.0%} of mid")
        if size_bad[c]:
            violations.append(f"{c}: {size_bad[c]} quote(s) below {spec.mm_min_size:g} lots")
    if not contracts:
        violations.append("no quotes in session")
    capital_ok = None if net_capital is None else net_capital >= spec.mm_net_capital
    if capital_ok is False:
        violations.append(f"net capital {net_capital:g} below {spec.mm_net_capital:g}")
    return ComplianceReport(
        uptime=uptime,
        uptime_ok=bool(contracts) and all(u >= spec.mm_uptime for u in uptime.values()),
        spread_violations=spread_bad,
        size_violations=size_bad,
        net_capital_ok=capital_ok,
        front_month=front_month,
        violations=violations,
    )


def settle_accounts(accounts: dict, settles: Sequence[float], dates: Sequence, spec: ContractSpec = ContractSpec()):
    """Run daily mark-to-market for a set of accounts.

    Returns the final accounts and a ledger of rows
    ``(date, account, position, settle, cashflow, balance, margin_call)``.
    Margin calls are recorded, not topped up.
    """
    if len(settles) != len(dates):
        raise ValidationError("settles and dates must have equal length")
    rows = []
    accounts = dict(accounts)
    for d, s in zip(dates, settles):
        for name in sorted(accounts):
            acct, cash, call = mark_to_market(accounts[name], s, spec)
            accounts[name] = acct
            rows.append((d, name, acct.position, s, cash, acct.balance, call))
    return accounts, rows
