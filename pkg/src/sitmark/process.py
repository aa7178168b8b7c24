"""Mean-reverting jump-diffusion for the log token price.

The log price ``X_t`` follows::

    dX = kappa * (theta(t) - X) dt + sigma dW + J dN
    theta(t) = theta0 + beta * t + gamma * sin(2 pi t / t_season)

with ``N`` a Poisson process of intensity ``lam`` and ``J ~ N(mu_j, sigma_j**2)``.
Paths are sampled with the exact Gaussian transition of the diffusive part;
the jumps of a step are added undamped at the end of the step.
"""

from dataclasses import asdict, dataclass, fields, replace
import math

import numpy as np

from .errors import DomainError

TRADING_DAYS = 252
DEFAULT_DT = 1.0 / TRADING_DAYS


@dataclass(frozen=True)
class ProcessParams:
    """Parameters of the log-price process, defaulting to the calibrated baseline.

    Parameters
    ----------
    kappa : float
        Mean-reversion speed, per year.
    theta0 : float
        Initial long-term mean of the log price.
    beta : float
        Trend of the long-term mean, per year.
    sigma : float
        Diffusion volatility, per sqrt(year).
    lam : float
        Jump intensity, jumps per year.
    mu_j, sigma_j : float
        Mean and standard deviation of a log jump.
    gamma : float
        Seasonal amplitude of the long-term mean.
    t_season : float
        Seasonal period in years.
    """

    kappa: float = 2.5
    theta0: float = math.log(2.0)
    beta: float = -0.35
    sigma: float = 0.40
    lam: float = 3.0
    mu_j: float = 0.10
    sigma_j: float = 0.25
    gamma: float = 0.08
    t_season: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v!r}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa!r}")
        for name in ("sigma", "lam", "sigma_j"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.t_season > 0:
            raise DomainError(f"t_season must be > 0, got {self.t_season!r}")

    @property
    def half_life(self) -> float:
        """Mean-reversion half-life ``ln 2 / kappa`` in years."""
        return math.log(2.0) / self.kappa

    @property
    def stationary_variance(self) -> float:
        """Diffusive stationary variance ``sigma**2 / (2 kappa)``."""
        return self.sigma**2 / (2.0 * self.kappa)

    def with_overrides(self, **overrides) -> "ProcessParams":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise DomainError(f"unknown process parameter(s): {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


PARAM_NAMES = tuple(f.name for f in fields(ProcessParams))


def long_term_mean(t, params: ProcessParams):
    """Time-varying long-term mean ``theta(t)`` of the log price."""
    t = np.asarray(t, dtype=float)
    out = params.theta0 + params.beta * t + params.gamma * np.sin(2.0 * np.pi * t / params.t_season)
    return out if out.ndim else float(out)


def reversion_integral(a, b, params: ProcessParams):
    """Closed form of ``kappa * int_a^b exp(-kappa (b - s)) theta(s) ds``.

    This is the deterministic part of ``X_b - exp(-kappa (b - a)) X_a``.
    Broadcasts over ``a`` and ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = params.kappa
    w = 2.0 * np.pi / params.t_season
    decay = np.exp(-k * (b - a))
    one_minus = -np.expm1(-k * (b - a))

    level = params.theta0 * one_minus
    trend = params.beta * ((b - 1.0 / k) - decay * (a - 1.0 / k))
    c = k / (k * k + w * w)
    season = params.gamma * c * (
        (k * np.sin(w * b) - w * np.cos(w * b)) - decay * (k * np.sin(w * a) - w * np.cos(w * a))
    )
    out = level + trend + season
    return out if out.ndim else float(out)


def deterministic_path(x0: float, times, params: ProcessParams):
    """Noise-free solution ``x0 exp(-kappa t) + reversion_integral(0, t)``."""
    times = np.asarray(times, dtype=float)
    return x0 * np.exp(-params.kappa * times) + reversion_integral(0.0, times, params)


def time_grid(horizon: float, dt: float) -> np.ndarray:
    """Grid ``0, dt, 2 dt, ...`` ending exactly at ``horizon``.

    A trailing step shorter than ``dt`` is used when ``horizon / dt`` is not
    an integer (up to a 1e-9 relative slack).
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon!r}")
    if not (0 < dt <= horizon * (1 + 1e-12)):
        raise DomainError(f"dt must satisfy 0 < dt <= horizon, got dt={dt!r}")
    n = int(math.ceil(horizon / dt - 1e-9))
    times = dt * np.arange(n + 1, dtype=float)
    times[-1] = horizon
    return times


def derive_path_seed(base_seed: int, path_index: int) -> int:
    """128-bit seed for path ``path_index`` hashed from ``(base_seed, path_index)``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(path_index),))
    lo, hi = ss.generate_state(2, dtype=np.uint64)
    return int(lo) | (int(hi) << 64)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass
class PricePath:
    """One simulated trajectory.

    ``jump_marks[k]`` is the number of jumps that arrived during step ``k``
    (between ``times[k]`` and ``times[k + 1]``).
    """

    times: np.ndarray
    log_prices: np.ndarray
    jump_marks: np.ndarray
    seed: int

    @property
    def prices(self) -> np.ndarray:
        return np.exp(self.log_prices)


@dataclass
class Ensemble:
    """A set of independent paths on a shared time grid.

    ``log_prices`` has shape ``(n_paths, n_steps + 1)`` and ``jump_marks``
    ``(n_paths, n_steps)``.
    """

    times: np.ndarray
    log_prices: np.ndarray
    jump_marks: np.ndarray
    seeds: list
    params: ProcessParams
    base_seed: int = 0

    @property
    def n_paths(self) -> int:
        return self.log_prices.shape[0]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def prices(self) -> np.ndarray:
        return np.exp(self.log_prices)

    def path(self, i: int) -> PricePath:
        return PricePath(self.times, self.log_prices[i], self.jump_marks[i], self.seeds[i])


def _step_coefficients(times: np.ndarray, params: ProcessParams):
    h = np.diff(times)
    decay = np.exp(-params.kappa * h)
    drift = reversion_integral(times[:-1], times[1:], params)
    sd = params.sigma * np.sqrt(-np.expm1(-2.0 * params.kappa * h) / (2.0 * params.kappa))
    return h, decay, drift, sd


def _innovations(seed: int, h: np.ndarray, params: ProcessParams):
    # fixed draw order per path keeps common random numbers aligned across parameter sweeps
    rng = _rng(seed)
    n = h.size
    z = rng.standard_normal(n)
    counts = rng.poisson(params.lam * h)
    zj = rng.standard_normal(n)
    return z, counts, zj


def _propagate(x0: float, decay, drift, sd, z, counts, zj, params: ProcessParams):
    """Run the exact recursion for a block of paths (rows)."""
    jumps = counts * params.mu_j + np.sqrt(counts) * params.sigma_j * zj
    shocks = drift + sd * z + jumps
    n_paths, n = z.shape
    x = np.empty((n_paths, n + 1))
    x[:, 0] = x0
    for k in range(n):
        x[:, k + 1] = decay[k] * x[:, k] + shocks[:, k]
    return x


def simulate_path(params: ProcessParams, x0: float, horizon: float, dt: float = DEFAULT_DT, seed: int = 0) -> PricePath:
    """Simulate a single log-price path.

    Parameters
    ----------
    params : ProcessParams
    x0 : float
        Initial log price.
    horizon : float
        Length of the path in years.
    dt : float
        Step size in years; defaults to one trading day.
    seed : int
        Seed of the path's PCG64 stream. Identical inputs give bit-identical paths.
    """
    if not isinstance(params, ProcessParams):
        raise DomainError("params must be a ProcessParams")
    times = time_grid(horizon, dt)
    h, decay, drift, sd = _step_coefficients(times, params)
    z, counts, zj = _innovations(seed, h, params)
    x = _propagate(x0, decay, drift, sd, z[None], counts[None], zj[None], params)
    return PricePath(times, x[0], counts.astype(np.int64), int(seed))


def simulate_ensemble(
    params: ProcessParams,
    x0: float,
    horizon: float,
    dt: float = DEFAULT_DT,
    n_paths: int = 10_000,
    base_seed: int = 0,
    block_size: int = 4096,
) -> Ensemble:
    """Simulate ``n_paths`` independent paths.

    Path ``i`` uses the stream ``derive_path_seed(base_seed, i)``, so the
    result does not depend on how paths are blocked or scheduled.
    """
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths!r}")
    if not isinstance(params, ProcessParams):
        raise DomainError("params must be a ProcessParams")
    times = time_grid(horizon, dt)
    h, decay, drift, sd = _step_coefficients(times, params)
    n = h.size
    seeds = [derive_path_seed(base_seed, i) for i in range(n_paths)]
    log_prices = np.empty((n_paths, n + 1))
    marks = np.empty((n_paths, n), dtype=np.int64)
    for start in range(0, n_paths, block_size):
        stop = min(start + block_size, n_paths)
        z = np.empty((stop - start, n))
        zj = np.empty_like(z)
        counts = np.empty((stop - start, n), dtype=np.int64)
        for j, s in enumerate(seeds[start:stop]):
            z[j], counts[j], zj[j] = _innovations(s, h, params)
        log_prices[start:stop] = _propagate(x0, decay, drift, sd, z, counts, zj, params)
        marks[start:stop] = counts
    return Ensemble(times, log_prices, marks, seeds, params, int(base_seed))
