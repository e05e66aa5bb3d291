"""Terminal price law, unary-basis discretization, and the Monte Carlo baseline.

The model is the standard geometric Brownian motion under the risk-neutral
measure: ln S_T ~ N(ln s0 + (r - sigma^2/2) t, sigma^2 t). Everything downstream
(circuit loading, amplitude estimation) consumes the discretized terminal law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


class DegenerateRangeError(ValueError):
    """The requested quantile range collapsed to a point."""


@dataclass(frozen=True)
class BsmParams:
    """European call market parameters.

    s0: spot price, r: risk-free rate, sigma: volatility (annualized),
    t: maturity in years, strike: strike price.
    """

    s0: float
    r: float
    sigma: float
    t: float
    strike: float

    def __post_init__(self):
        # not-greater-than comparisons also reject NaN
        if not self.s0 > 0:
            raise ValueError(f"invalid s0: must be > 0, got {self.s0}")
        if not self.sigma > 0:
            raise ValueError(f"invalid sigma: must be > 0, got {self.sigma}")
        if not self.t > 0:
            raise ValueError(f"invalid t: must be > 0, got {self.t}")
        if not self.strike >= 0:
            raise ValueError(f"invalid strike: must be >= 0, got {self.strike}")
        if not math.isfinite(self.r):
            raise ValueError(f"invalid r: must be finite, got {self.r}")


@dataclass(frozen=True)
class DiscreteDistribution:
    """n-bin approximation of the terminal law: ascending prices, probabilities."""

    prices: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "probs", probs)
        if prices.ndim != 1 or probs.ndim != 1 or len(prices) != len(probs):
            raise ValueError("prices and probs must be 1-d arrays of equal length")
        if len(prices) < 2:
            raise ValueError(f"need at least 2 bins, got {len(prices)}")
        if not np.all(np.diff(prices) > 0):
            raise ValueError("prices must be strictly increasing")
        if np.any(probs < 0):
            raise ValueError("probs must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1, got {probs.sum()!r}")

    @property
    def n(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class McResult:
    """Monte Carlo estimate with its standard error and provenance."""

    estimate: float
    std_error: float
    n_paths: int
    seed: int


def lognormal_terminal_params(params: BsmParams) -> tuple[float, float]:
    """Mean and standard deviation of ln S_T.

    Returns (mu_log, sigma_log) with mu_log = ln s0 + (r - sigma^2/2) t and
    sigma_log = sigma * sqrt(t).
    """
    mu_log = math.log(params.s0) + (params.r - 0.5 * params.sigma**2) * params.t
    sigma_log = params.sigma * math.sqrt(params.t)
    return mu_log, sigma_log


def _terminal_law(params: BsmParams):
    mu_log, sigma_log = lognormal_terminal_params(params)
    return stats.lognorm(s=sigma_log, scale=math.exp(mu_log))


def discretize(params: BsmParams, n: int, coverage: float = 0.997) -> DiscreteDistribution:
    """Bin the terminal law into n equal-width price bins.

    The bins span the central `coverage` quantile range of the lognormal
    terminal distribution; probabilities are CDF differences renormalized to
    sum to one, and the representative price of each bin is its midpoint.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"invalid n: need an integer >= 2, got {n}")
    if not 0 < coverage < 1:
        raise ValueError(f"invalid coverage: need 0 < coverage < 1, got {coverage}")
    law = _terminal_law(params)
    tail = (1.0 - coverage) / 2.0
    lo, hi = law.ppf(tail), law.ppf(1.0 - tail)
    if not hi > lo:
        raise DegenerateRangeError(
            f"quantile range [{lo}, {hi}] is degenerate for coverage={coverage}"
        )
    edges = np.linspace(lo, hi, n + 1)
    probs = np.diff(law.cdf(edges))
    probs = probs / probs.sum()
    prices = 0.5 * (edges[:-1] + edges[1:])
    return DiscreteDistribution(prices, probs)


def expected_payoff_discrete(dist: DiscreteDistribution, strike: float) -> float:
    """Expected call payoff under the discrete law: sum of p_i (s_i - K) over s_i > K.

    Bins with s_i == K contribute nothing (the inequality is strict).
    """
    gain = dist.prices - strike
    above = gain > 0
    return float(np.sum(dist.probs[above] * gain[above]))


def mc_price(params: BsmParams, n_paths: int, seed: int, steps: int = 1) -> McResult:
    """Monte Carlo estimate of the undiscounted expected call payoff.

    steps=1 samples the exact terminal law in a single step (default).
    steps>1 runs an Euler-Maruyama walk with that many increments, for path
    fidelity at the cost of discretization bias. Deterministic per seed; paths
    are generated in one sequential stream so reruns are bit-identical.
    """
    if not isinstance(n_paths, (int, np.integer)) or n_paths < 2:
        raise ValueError(f"invalid n_paths: need an integer >= 2, got {n_paths}")
    if steps < 1:
        raise ValueError(f"invalid steps: need >= 1, got {steps}")
    rng = np.random.default_rng(seed)
    if steps == 1:
        mu_log, sigma_log = lognormal_terminal_params(params)
        s_t = np.exp(mu_log + sigma_log * rng.standard_normal(n_paths))
    else:
        dt = params.t / steps
        s_t = np.full(n_paths, params.s0)
        for _ in range(steps):
            z = rng.standard_normal(n_paths)
            s_t = s_t * (1.0 + params.r * dt + params.sigma * math.sqrt(dt) * z)
        s_t = np.maximum(s_t, 0.0)
    payoff = np.maximum(s_t - params.strike, 0.0)
    estimate = float(payoff.mean())
    std_error = float(payoff.std(ddof=1) / math.sqrt(n_paths))
    return McResult(estimate=estimate, std_error=std_error, n_paths=int(n_paths), seed=int(seed))
