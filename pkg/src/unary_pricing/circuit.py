"""Exact unitaries of the unary pricing circuit.

State layout: one photon over n price bins times a 2-level ancilla, stored as
2n complex amplitudes with index 2*i + a for bin i (prices ascending) and
ancilla level a. Bin-space couplers act on index pairs (2i, 2i+2) and
(2i+1, 2i+3); ancilla rotations act on (2i, 2i+1). All operators are dense
(2n, 2n) matrices, built exactly; no shot noise enters until sampling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .market import DiscreteDistribution


class DegenerateStrikeWarning(UserWarning):
    """Strike at or above the top bin: the payoff rotation is identically zero."""


@dataclass(frozen=True)
class UnaryState:
    """Statevector of the bin-ancilla register: amps[2*i + a]."""

    amps: np.ndarray
    n: int

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        object.__setattr__(self, "amps", amps)
        if amps.shape != (2 * self.n,):
            raise ValueError(f"expected {2 * self.n} amplitudes, got shape {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm} is not 1")


@dataclass(frozen=True)
class LoaderParams:
    """Splitting probabilities of the loader, in circuit application order."""

    splits: np.ndarray

    def __post_init__(self):
        splits = np.asarray(self.splits, dtype=float)
        object.__setattr__(self, "splits", splits)
        if splits.ndim != 1 or len(splits) < 1:
            raise ValueError("splits must be a non-empty 1-d array")
        if np.any(splits < 0) or np.any(splits > 1):
            raise ValueError("splits must lie in [0, 1]")


@dataclass(frozen=True)
class PayoffAngles:
    """Per-bin ancilla rotation angles, in [0, pi/2]."""

    thetas: np.ndarray

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        object.__setattr__(self, "thetas", thetas)
        if thetas.ndim != 1 or len(thetas) < 2:
            raise ValueError("thetas must be a 1-d array with at least 2 entries")
        if np.any(thetas < 0) or np.any(thetas > np.pi / 2 + 1e-12):
            raise ValueError("thetas must lie in [0, pi/2]")


@dataclass(frozen=True)
class CircuitUnitary:
    """A dense (2n, 2n) unitary with a short role label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0:
            raise ValueError(f"matrix must be square with even dimension, got {m.shape}")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev > 1e-12:
            raise ValueError(f"matrix is not unitary: max |U^H U - I| = {dev}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def initial_bin(n: int) -> int:
    """Bin the photon enters from: the middle waveguide, floor((n-1)/2)."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"invalid n: need an integer >= 2, got {n}")
    return (n - 1) // 2


def initial_state(n: int) -> UnaryState:
    """Photon in the middle bin, ancilla 0."""
    amps = np.zeros(2 * n, dtype=complex)
    amps[2 * initial_bin(n)] = 1.0
    return UnaryState(amps, n)


def loader_layers(n: int) -> list[list[tuple[int, int]]]:
    """Center-outward coupler schedule: layers of disjoint bin pairs (i, i+1).

    Layer 1 holds the center pair (c, c+1); layer j >= 2 holds the left pair
    (c-j+1, c-j+2) and right pair (c+j-1, c+j) where in range. Exactly n-1
    pairs over floor((n+1)/2) layers.
    """
    c = initial_bin(n)
    layers = [[(c, c + 1)]]
    j = 2
    while True:
        layer = []
        if c - j + 1 >= 0:
            layer.append((c - j + 1, c - j + 2))
        if c + j <= n - 1:
            layer.append((c + j - 1, c + j))
        if not layer:
            return layers
        layers.append(layer)
        j += 1


def _flat_schedule(n: int) -> list[tuple[int, int]]:
    return [pair for layer in loader_layers(n) for pair in layer]


def fit_loader(dist: DiscreteDistribution) -> LoaderParams:
    """Back-solve the splitting probabilities that load `dist` exactly.

    The center split keeps the total mass of bins 0..c; each subsequent
    coupler fixes one bin's probability and pushes the remainder outward, so
    every split is a ratio of partial sums of the target. Exact for any
    distribution, including zero-probability bins.
    """
    q = dist.probs
    n = dist.n
    c = initial_bin(n)
    prefix = np.concatenate(([0.0], np.cumsum(q)))  # prefix[k] = sum of q[:k]

    def ratio(num: float, den: float) -> float:
        if den <= 0.0:
            return 0.0
        return min(max(num / den, 0.0), 1.0)

    split_of: dict[tuple[int, int], float] = {(c, c + 1): float(prefix[c + 1])}
    for a in range(c - 1, -1, -1):  # left chain fixes bin a+1, mass q[:a+2] remains
        split_of[(a, a + 1)] = ratio(q[a + 1], prefix[a + 2])
    for a in range(c + 1, n - 1):  # right chain fixes bin a, mass q[a:] remains
        split_of[(a, a + 1)] = ratio(q[a], 1.0 - prefix[a])
    return LoaderParams(np.array([split_of[p] for p in _flat_schedule(n)]))


def _apply_coupler(u: np.ndarray, a: int, p: float) -> None:
    # two-bin coupler on (a, a+1), identity on the ancilla: update 4 rows in place
    sp, sq = np.sqrt(p), np.sqrt(1.0 - p)
    for anc in (0, 1):
        i, j = 2 * a + anc, 2 * (a + 1) + anc
        top = sp * u[i] + sq * u[j]
        bot = sq * u[i] - sp * u[j]
        u[i], u[j] = top, bot


def build_loader(params: LoaderParams, n: int) -> CircuitUnitary:
    """Compose the distribution loader D from the layered coupler schedule."""
    sched = _flat_schedule(n)
    if len(params.splits) != len(sched):
        raise ValueError(f"need {len(sched)} splits for n={n}, got {len(params.splits)}")
    u = np.eye(2 * n, dtype=complex)
    for (a, _), p in zip(sched, params.splits):
        _apply_coupler(u, a, p)
    return CircuitUnitary(u, "D")


def payoff_angles(dist: DiscreteDistribution, strike: float) -> PayoffAngles:
    """Rotation angles theta_i = arcsin(sqrt((s_i - K)/(s_max - K))), clamped at 0.

    Bins at or below the strike get angle 0; the top bin gets pi/2. If the
    strike is at or above the top bin, all angles are zero and a
    DegenerateStrikeWarning is emitted (the instance has no payoff to encode).
    """
    s_max = dist.prices[-1]
    if s_max <= strike:
        warnings.warn(
            f"strike {strike} >= top bin {s_max}: payoff rotation is identically zero",
            DegenerateStrikeWarning,
        )
        return PayoffAngles(np.zeros(dist.n))
    frac = np.clip((dist.prices - strike) / (s_max - strike), 0.0, 1.0)
    return PayoffAngles(np.arcsin(np.sqrt(frac)))


def build_payoff(angles: PayoffAngles) -> CircuitUnitary:
    """Block-diagonal ancilla rotation P: bin i rotates its ancilla by theta_i."""
    n = len(angles.thetas)
    u = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, th in enumerate(angles.thetas):
        ct, st = np.cos(th), np.sin(th)
        u[2 * i, 2 * i] = ct
        u[2 * i, 2 * i + 1] = -st
        u[2 * i + 1, 2 * i] = st
        u[2 * i + 1, 2 * i + 1] = ct
    return CircuitUnitary(u, "P")


def build_s_psi(n: int) -> CircuitUnitary:
    """Diagonal reflection: +1 on ancilla-0 slots, -1 on ancilla-1 slots."""
    initial_bin(n)  # validates n
    diag = np.where(np.arange(2 * n) % 2 == 0, 1.0, -1.0)
    return CircuitUnitary(np.diag(diag).astype(complex), "S_psi")


def build_s_0(n: int) -> CircuitUnitary:
    """Reflection about the initial state: -1 at the photon's entry index."""
    diag = np.ones(2 * n)
    diag[2 * initial_bin(n)] = -1.0
    return CircuitUnitary(np.diag(diag).astype(complex), "S_0")


def build_q(loader: CircuitUnitary, payoff: CircuitUnitary, n: int) -> CircuitUnitary:
    """Amplification operator Q = P D S_0 D^H P^H S_psi."""
    if loader.dim != 2 * n or payoff.dim != 2 * n:
        raise ValueError(
            f"operator dimensions {loader.dim}, {payoff.dim} do not match 2n={2 * n}"
        )
    d, p = loader.matrix, payoff.matrix
    q = p @ d @ build_s_0(n).matrix @ d.conj().T @ p.conj().T @ build_s_psi(n).matrix
    return CircuitUnitary(q, "Q")


def apply(unitary: CircuitUnitary, state: UnaryState) -> UnaryState:
    if unitary.dim != 2 * state.n:
        raise ValueError(f"operator dim {unitary.dim} does not match state dim {2 * state.n}")
    return UnaryState(unitary.matrix @ state.amps, state.n)


def ancilla_one_prob(state: UnaryState, strike_mask) -> float:
    """Probability of finding the ancilla in level 1 within the masked bins."""
    mask = np.asarray(strike_mask, dtype=bool)
    if mask.shape != (state.n,):
        raise ValueError(f"mask must have shape ({state.n},), got {mask.shape}")
    anc1 = np.abs(state.amps[1::2]) ** 2
    return float(anc1[mask].sum())


def sample_shots(state: UnaryState, shots: int, seed) -> np.ndarray:
    """Multinomial measurement counts over all 2n slots. Deterministic per seed."""
    if shots < 1:
        raise ValueError(f"invalid shots: need >= 1, got {shots}")
    probs = np.abs(state.amps) ** 2
    probs = probs / probs.sum()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.multinomial(shots, probs)


def perturb_splits(params: LoaderParams, noise_std: float, seed) -> LoaderParams:
    """Gaussian angle noise on the splits: p -> cos^2(arccos(sqrt(p)) + eps)."""
    if noise_std == 0:
        return params
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    phi = np.arccos(np.sqrt(np.clip(params.splits, 0.0, 1.0)))
    phi = phi + rng.normal(0.0, noise_std, len(phi))
    return LoaderParams(np.cos(phi) ** 2)


def perturb_angles(angles: PayoffAngles, noise_std: float, seed) -> PayoffAngles:
    """Gaussian noise on the payoff rotations, clipped back to [0, pi/2]."""
    if noise_std == 0:
        return angles
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    th = angles.thetas + rng.normal(0.0, noise_std, len(angles.thetas))
    return PayoffAngles(np.clip(th, 0.0, np.pi / 2))
