"""Iterative amplitude estimation on the unary pricing circuit.

The amplified circuit Q^m (P D) |init> puts the ancilla in level 1 with
probability sin^2((2m+1) alpha), where sin^2(alpha) is the normalized expected
payoff. Measuring a ladder of depths m and pooling the binomial records into a
maximum-likelihood fit recovers alpha far faster than the shot noise of any
single depth allows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .circuit import (
    CircuitUnitary,
    UnaryState,
    apply,
    ancilla_one_prob,
    build_loader,
    build_payoff,
    build_q,
    fit_loader,
    initial_state,
    payoff_angles,
    sample_shots,
)
from .market import DiscreteDistribution, expected_payoff_discrete


class InconsistentRecordsError(RuntimeError):
    """No angle explains the measurement records: noise beyond the model."""


@dataclass(frozen=True)
class AESchedule:
    """Measurement plan: amplification depths, shots per depth, repeats."""

    depths: tuple
    shots_per_depth: int
    repeats: int = 1

    def __post_init__(self):
        depths = tuple(int(m) for m in self.depths)
        object.__setattr__(self, "depths", depths)
        if len(depths) == 0 or depths[0] != 0:
            raise ValueError("depths must start at m=0")
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("depths must be strictly increasing")
        if self.shots_per_depth < 1:
            raise ValueError(f"invalid shots_per_depth: {self.shots_per_depth}")
        if self.repeats < 1:
            raise ValueError(f"invalid repeats: {self.repeats}")


def default_schedule() -> AESchedule:
    """Depths 0..50, 100 shots per depth, 50 repeats."""
    return AESchedule(depths=tuple(range(51)), shots_per_depth=100, repeats=50)


@dataclass(frozen=True)
class DepthRecord:
    """Pooled measurement record at one amplification depth."""

    m: int
    hits: float
    shots: float
    frequency: float
    wilson_lo: float
    wilson_hi: float


@dataclass(frozen=True)
class AEResult:
    records: tuple
    alpha_hat: float
    alpha_ci: tuple
    payoff_hat: float
    oracle_calls: int


class PricingCircuit:
    """Compiled operators for one pricing instance, with cached amplified states.

    Exposes the loader D, payoff rotation P, amplifier Q, the above-strike bin
    mask, and the payoff scale s_max - K (clamped at 0). States Q^m (P D)|init>
    are cached incrementally since they are deterministic.
    """

    def __init__(self, dist: DiscreteDistribution, strike: float):
        self.dist = dist
        self.strike = float(strike)
        self.n = dist.n
        self.loader: CircuitUnitary = build_loader(fit_loader(dist), self.n)
        self.angles = payoff_angles(dist, strike)
        self.payoff: CircuitUnitary = build_payoff(self.angles)
        self.q: CircuitUnitary = build_q(self.loader, self.payoff, self.n)
        self.mask = dist.prices > strike
        self.scale = max(float(dist.prices[-1] - strike), 0.0)
        self._states = [apply(self.payoff, apply(self.loader, initial_state(self.n)))]

    def state_at_depth(self, m: int) -> UnaryState:
        if m < 0:
            raise ValueError(f"invalid depth: {m}")
        while len(self._states) <= m:
            self._states.append(apply(self.q, self._states[-1]))
        return self._states[m]

    @property
    def alpha(self) -> float:
        """Infinite-shot angle arcsin(sqrt(a)) from the unamplified statevector."""
        a = ancilla_one_prob(self.state_at_depth(0), self.mask)
        return math.asin(math.sqrt(min(max(a, 0.0), 1.0)))


def run_depth(circuit: PricingCircuit, m: int, shots: int, seed) -> tuple[int, int]:
    """Measure the depth-m circuit: masked ancilla-1 hit count out of `shots`."""
    counts = sample_shots(circuit.state_at_depth(m), shots, seed)
    hits = int(counts[1::2][circuit.mask].sum())
    return hits, int(shots)


def binomial_ci(hits: float, shots: float, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if shots <= 0:
        raise ValueError(f"invalid shots: {shots}")
    if not 0 <= hits <= shots:
        raise ValueError(f"hits {hits} outside [0, {shots}]")
    if not 0 < confidence < 1:
        raise ValueError(f"invalid confidence: {confidence}")
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    phat = hits / shots
    denom = 1.0 + z * z / shots
    center = (phat + z * z / (2.0 * shots)) / denom
    margin = (z / denom) * math.sqrt(phat * (1.0 - phat) / shots + z * z / (4.0 * shots * shots))
    return max(center - margin, 0.0), min(center + margin, 1.0)


_P_FLOOR = 1e-15


def _log_likelihood(records, alphas: np.ndarray) -> np.ndarray:
    """Pooled binomial log-likelihood of the records on a grid of angles."""
    total = np.zeros_like(alphas)
    for rec in records:
        p = np.sin((2 * rec.m + 1) * alphas) ** 2
        p = np.clip(p, _P_FLOOR, 1.0 - _P_FLOOR)
        total += rec.hits * np.log(p) + (rec.shots - rec.hits) * np.log1p(-p)
    return total


def _saturated_log_likelihood(records) -> float:
    out = 0.0
    for rec in records:
        f = rec.hits / rec.shots
        if 0.0 < f < 1.0:
            out += rec.hits * math.log(f) + (rec.shots - rec.hits) * math.log1p(-f)
    return out


def recover_angle(
    records,
    prior: tuple[float, float] | None = None,
    confidence: float = 0.95,
    anchor_confidence: float = 0.999,
) -> tuple[float, tuple[float, float]]:
    """Maximum-likelihood angle from pooled depth records.

    The search is restricted to the angle image of the m=0 Wilson interval
    (at `anchor_confidence`), which pins the branch of the oscillatory
    likelihood; `prior` overrides that anchor with an explicit angle interval.
    The base grid step adapts to the pooled Fisher information (a third of the
    Cramer-Rao width, clamped to [1e-6, 5e-3] rad) and the peak is refined
    locally to ~1e-6 rad. The confidence interval is the likelihood-ratio set
    at `confidence`, widened by half a grid step on each side.

    Raises InconsistentRecordsError when even the best-fitting angle is
    astronomically incompatible with the records (deviance p-value < 1e-9),
    which signals noise outside the binomial model.
    """
    records = list(records)
    if not records:
        raise ValueError("no records given")
    if prior is None:
        base = [r for r in records if r.m == 0]
        if not base:
            raise ValueError("records must include depth m=0 (or pass an explicit prior)")
        plo, phi = binomial_ci(base[0].hits, base[0].shots, anchor_confidence)
        lo = math.asin(math.sqrt(plo))
        hi = math.asin(math.sqrt(phi))
    else:
        lo, hi = prior
    # Fisher information of a depth-m binomial record is 4*shots*(2m+1)^2,
    # independent of the angle; use it to size the grid.
    info = sum(4.0 * r.shots * (2 * r.m + 1) ** 2 for r in records)
    step = min(max((1.0 / math.sqrt(info)) / 3.0, 1e-6), 5e-3)
    lo = max(lo - step, 0.0)
    hi = min(hi + step, math.pi / 2)

    grid = np.arange(lo, hi + step, step)
    ll = _log_likelihood(records, grid)
    k = int(np.argmax(ll))

    fine_step = max(step / 200.0, 2e-7)
    f_lo = max(grid[k] - 5 * step, 0.0)
    f_hi = min(grid[k] + 5 * step, math.pi / 2)
    fine = np.arange(f_lo, f_hi + fine_step, fine_step)
    ll_fine = _log_likelihood(records, fine)
    j = int(np.argmax(ll_fine))
    alpha_hat = float(fine[j])
    ll_max = float(ll_fine[j])

    # model sanity: deviance of the best fit against the saturated model
    deviance = 2.0 * (_saturated_log_likelihood(records) - ll_max)
    df = max(len(records) - 1, 1)
    if deviance > 0 and stats.chi2.sf(deviance, df) < 1e-9:
        raise InconsistentRecordsError(
            f"records incompatible with any angle (deviance {deviance:.1f}, df {df})"
        )

    threshold = ll_max - 0.5 * stats.chi2.ppf(confidence, 1)
    inside = grid[ll >= threshold]
    if len(inside):
        ci = (max(float(inside[0]) - step / 2, 0.0), min(float(inside[-1]) + step / 2, math.pi / 2))
    else:  # peak narrower than the base grid; fall back to the refined window
        inside = fine[ll_fine >= threshold]
        ci = (max(float(inside[0]) - fine_step, 0.0), min(float(inside[-1]) + fine_step, math.pi / 2))
    ci = (min(ci[0], alpha_hat), max(ci[1], alpha_hat))
    return alpha_hat, ci


def _pooled_record(m: int, hits: float, shots: float, confidence: float) -> DepthRecord:
    w_lo, w_hi = binomial_ci(hits, shots, confidence)
    return DepthRecord(
        m=m, hits=hits, shots=shots, frequency=hits / shots, wilson_lo=w_lo, wilson_hi=w_hi
    )


def oracle_calls_for(schedule: AESchedule) -> int:
    """Loader-payoff pair applications: sum over depths of repeats*shots*(2m+1)."""
    return int(
        sum(schedule.repeats * schedule.shots_per_depth * (2 * m + 1) for m in schedule.depths)
    )


def estimate_payoff(
    dist: DiscreteDistribution,
    strike: float,
    schedule: AESchedule,
    seed: int,
    confidence: float = 0.95,
) -> AEResult:
    """Full amplitude-estimation run: measure the schedule, fit alpha, scale to payoff.

    Each (depth, repeat) cell draws from its own RNG substream, so results are
    reproducible bit-for-bit per seed and independent of evaluation order.
    """
    circuit = PricingCircuit(dist, strike)
    records = []
    for di, m in enumerate(schedule.depths):
        hits = 0
        for ri in range(schedule.repeats):
            h, _ = run_depth(
                circuit, m, schedule.shots_per_depth, np.random.default_rng((seed, 0, di, ri))
            )
            hits += h
        records.append(
            _pooled_record(m, hits, schedule.shots_per_depth * schedule.repeats, confidence)
        )
    alpha_hat, alpha_ci = recover_angle(records, confidence=confidence)
    return AEResult(
        records=tuple(records),
        alpha_hat=alpha_hat,
        alpha_ci=alpha_ci,
        payoff_hat=math.sin(alpha_hat) ** 2 * circuit.scale,
        oracle_calls=oracle_calls_for(schedule),
    )


@dataclass(frozen=True)
class ConvergenceRow:
    """One depth prefix of the convergence study."""

    depth: int
    m: int
    oracle_calls: int
    payoff_mean: float
    payoff_std: float
    abs_error: float
    mc_error: float


# Per-link confidence of the bracket handed from one depth to the next in the
# iterative refinement. Wide enough (z ~ 4.4) that a 50-link chain practically
# never drops the true angle, narrow enough to exclude neighboring likelihood
# lobes at the next depth.
_BRACKET_CONFIDENCE = 0.99999


def convergence_study(
    dist: DiscreteDistribution,
    strike: float,
    max_depth: int,
    shots: int,
    repeats: int,
    seed: int,
) -> list[ConvergenceRow]:
    """Error scaling of iterative amplitude estimation as the depth ladder grows.

    Each of the `repeats` independent runs walks the depth prefix 0..max_depth
    once: the depth-d record is fitted inside the angle bracket inherited from
    depth d-1 (a likelihood-ratio interval at high per-link confidence), so the
    row-d estimate is the refinement the ladder has reached after consuming
    that prefix. Rows report the mean, empirical std, and mean absolute error
    of the per-run estimates against the discrete oracle.

    oracle_calls is the call budget of the row's experiment, shots*(2d+1)
    loader-payoff pairs: the deepest circuit in the prefix, whose width sets
    the precision of the refined estimate. mc_error is the matched-budget
    comparison at that same count: a classical sampler drawing that many paths
    from the same discrete law, scored against the same oracle.

    shots=0 switches to the infinite-shot limit: records carry the exact
    statevector frequencies (unit weight, pooled over the whole prefix) and
    the error floor is set by the angle grid alone.
    """
    if max_depth < 0:
        raise ValueError(f"invalid max_depth: {max_depth}")
    circuit = PricingCircuit(dist, strike)
    oracle = expected_payoff_discrete(dist, strike)
    payoff_of = np.maximum(dist.prices - strike, 0.0)
    exact = shots == 0
    n_rep = 1 if exact else repeats
    if n_rep < 1:
        raise ValueError(f"invalid repeats: {repeats}")

    estimates = np.empty((n_rep, max_depth + 1))
    for ri in range(n_rep):
        if exact:
            records = []
            for d in range(max_depth + 1):
                p = ancilla_one_prob(circuit.state_at_depth(d), circuit.mask)
                records.append(_pooled_record(d, p, 1.0, 0.95))
                a_hat, _ = recover_angle(records)
                estimates[ri, d] = math.sin(a_hat) ** 2 * circuit.scale
            continue
        bracket = (0.0, math.pi / 2)
        for d in range(max_depth + 1):
            h, s = run_depth(circuit, d, shots, np.random.default_rng((seed, 1, ri, d)))
            rec = _pooled_record(d, h, s, 0.95)
            a_hat, bracket = recover_angle(
                [rec], prior=bracket, confidence=_BRACKET_CONFIDENCE
            )
            estimates[ri, d] = math.sin(a_hat) ** 2 * circuit.scale

    rows = []
    for d in range(max_depth + 1):
        calls = max(shots, 1) * (2 * d + 1)
        ests = estimates[:, d]
        mc_errs = np.empty(n_rep)
        for ri in range(n_rep):
            counts = np.random.default_rng((seed, 2, ri, d)).multinomial(calls, dist.probs)
            mc_errs[ri] = abs(counts @ payoff_of / calls - oracle)
        rows.append(
            ConvergenceRow(
                depth=d,
                m=d,
                oracle_calls=calls,
                payoff_mean=float(ests.mean()),
                payoff_std=float(ests.std(ddof=1)) if n_rep > 1 else 0.0,
                abs_error=float(np.abs(ests - oracle).mean()),
                mc_error=float(mc_errs.mean()),
            )
        )
    return rows
