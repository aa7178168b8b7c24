"""Futures prices as the expected terminal spot under the simulation measure.

``F(t, T) = exp(exp(-kappa tau) x_t + A(t, T))`` with ``tau = T - t`` and::

    A = kappa int_t^T exp(-kappa (T - s)) theta(s) ds
        + sigma**2 / (4 kappa) * (1 - exp(-2 kappa tau))
        + lam int_0^tau [exp(mu_j c(u) + sigma_j**2 c(u)**2 / 2) - 1] du,  c(u) = exp(-kappa u)

The first term is closed form, the jump term uses adaptive quadrature.
``mc_futures_oracle`` estimates the same expectation by brute-force sampling
and shares none of this algebra.
"""

from dataclasses import dataclass
from datetime import date
import math

import numpy as np
from scipy import integrate

from .errors import DomainError
from .process import ProcessParams, long_term_mean, reversion_integral

QUAD_EPSABS = 1e-10


@dataclass(frozen=True)
class FuturesQuote:
    t: float
    T: float
    price: float

    def __post_init__(self):
        if self.T < self.t:
            raise DomainError(f"maturity {self.T!r} precedes valuation time {self.t!r}")
        if not self.price > 0:
            raise DomainError("futures price must be positive")


def _q_params(params: ProcessParams, beta_shift: float) -> ProcessParams:
    return params if beta_shift == 0 else params.with_overrides(beta=params.beta + beta_shift)


def jump_adjustment(tau: float, params: ProcessParams) -> float:
    """Jump contribution ``lam * int_0^tau [M(exp(-kappa u)) - 1] du`` to the log futures price."""
    if tau <= 0 or params.lam == 0:
        return 0.0
    k, m, s2 = params.kappa, params.mu_j, params.sigma_j**2

    def integrand(u):
        c = math.exp(-k * u)
        return math.expm1(m * c + 0.5 * s2 * c * c)

    val, _ = integrate.quad(integrand, 0.0, tau, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
    return params.lam * val


def jump_adjustment_grid(taus, params: ProcessParams) -> np.ndarray:
    """``jump_adjustment`` for many maturities by integrating between sorted nodes."""
    taus = np.asarray(taus, dtype=float)
    flat = taus.ravel()
    nodes = np.unique(np.concatenate([[0.0], flat[flat > 0]]))
    pieces = np.zeros(nodes.size)
    if params.lam != 0:
        k, m, s2 = params.kappa, params.mu_j, params.sigma_j**2

        def integrand(u):
            c = math.exp(-k * u)
            return math.expm1(m * c + 0.5 * s2 * c * c)

        for i in range(1, nodes.size):
            pieces[i] = integrate.quad(integrand, nodes[i - 1], nodes[i], epsabs=QUAD_EPSABS, epsrel=1e-12)[0]
    cum = params.lam * np.cumsum(pieces)
    out = np.where(flat > 0, cum[np.searchsorted(nodes, np.maximum(flat, 0.0))], 0.0)
    return out.reshape(taus.shape)


def adjustment(t, T, params: ProcessParams, beta_shift: float = 0.0, jump_term=None):
    """The deterministic term ``A(t, T)`` of the log futures price."""
    q = _q_params(params, beta_shift)
    t = np.asarray(t, dtype=float)
    T = np.asarray(T, dtype=float)
    tau = T - t
    var = q.sigma**2 / (4.0 * q.kappa) * -np.expm1(-2.0 * q.kappa * tau)
    if jump_term is None:
        jump_term = jump_adjustment_grid(tau, q)
    return reversion_integral(t, T, q) + var + jump_term


def futures_price(x_t: float, t: float, T: float, params: ProcessParams, beta_shift: float = 0.0) -> float:
    """Futures price for maturity ``T`` given log spot ``x_t`` at time ``t``.

    ``beta_shift`` is an additive change to the trend under the pricing
    measure; zero means pricing under the simulation measure.
    """
    if T < t:
        raise DomainError(f"maturity T={T!r} precedes valuation time t={t!r}")
    if T == t:
        return math.exp(x_t)
    q = _q_params(params, beta_shift)
    tau = T - t
    a = (
        reversion_integral(t, T, q)
        + q.sigma**2 / (4.0 * q.kappa) * -math.expm1(-2.0 * q.kappa * tau)
        + jump_adjustment(tau, q)
    )
    return math.exp(math.exp(-q.kappa * tau) * x_t + a)


def futures_prices(x, t, T, params: ProcessParams, beta_shift: float = 0.0) -> np.ndarray:
    """Vectorized ``futures_price`` over broadcastable ``x``, ``t`` and ``T``."""
    x, t, T = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, t, T)))
    if np.any(T < t):
        raise DomainError("maturity precedes valuation time")
    q = _q_params(params, beta_shift)
    a = adjustment(t, T, q)
    return np.exp(np.exp(-q.kappa * (T - t)) * x + a)


def mc_futures_oracle(x_t: float, t: float, T: float, params: ProcessParams, n_paths: int = 1_000_000, seed: int = 0, steps_per_year: int = 12):
    """Monte Carlo estimate of ``E[exp(X_T) | X_t = x_t]``.

    Paths are stepped on a coarse grid with the exact Gaussian transition;
    each step's deterministic drift is integrated numerically and every jump
    is placed at a uniform arrival time and decayed to the step end, so the
    scheme is exact in distribution for any grid.

    Returns
    -------
    (mean, std_error)
    """
    if n_paths < 100:
        raise DomainError(f"n_paths must be >= 100, got {n_paths!r}")
    if T < t:
        raise DomainError(f"maturity T={T!r} precedes valuation time t={t!r}")
    tau = T - t
    if tau == 0:
        return math.exp(x_t), 0.0
    k = params.kappa
    n_steps = max(1, int(math.ceil(tau * steps_per_year)))
    edges = np.linspace(t, T, n_steps + 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.full(n_paths, float(x_t))
    for a, b in zip(edges[:-1], edges[1:]):
        h = b - a
        drift = integrate.quad(lambda s: k * math.exp(-k * (b - s)) * long_term_mean(s, params), a, b, epsabs=1e-13, epsrel=1e-13)[0]
        x *= math.exp(-k * h)
        x += drift
        if params.sigma > 0:
            x += params.sigma * math.sqrt((1.0 - math.exp(-2.0 * k * h)) / (2.0 * k)) * rng.standard_normal(n_paths)
        if params.lam > 0:
            counts = rng.poisson(params.lam * h, n_paths)
            total = int(counts.sum())
            if total:
                owner = np.repeat(np.arange(n_paths), counts)
                arrival = rng.uniform(0.0, h, total)
                size = rng.normal(params.mu_j, params.sigma_j, total)
                x += np.bincount(owner, weights=size * np.exp(-k * (h - arrival)), minlength=n_paths)
    p = np.exp(x)
    if params.sigma == 0 and params.lam == 0:
        return float(p[0]), 0.0
    return float(p.mean()), float(p.std(ddof=1) / math.sqrt(n_paths))


def year_fraction(start: date, end: date) -> float:
    """Trading-day year fraction between two dates (business days / 252)."""
    return float(np.busday_count(start, end)) / 252.0


def futures_curve(x_t: float, t: float, params: ProcessParams, maturities=None, as_of: date = None, beta_shift: float = 0.0):
    """Futures prices along a set of maturities.

    When ``maturities`` is omitted, the listed contracts on ``as_of`` are
    used, with year fractions measured in trading days from ``as_of``.
    """
    if maturities is None:
        from .clearing import listing_calendar

        if as_of is None:
            raise DomainError("as_of is required when maturities are not given")
        maturities = [t + year_fraction(as_of, ltd) for _, ltd in listing_calendar(as_of)]
    maturities = list(maturities)
    if not maturities:
        raise DomainError("maturities must be non-empty")
    return [FuturesQuote(t, float(m), futures_price(x_t, t, float(m), params, beta_shift)) for m in maturities]
