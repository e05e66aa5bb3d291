"""Adversarial loading of a target distribution onto the unary circuit.

The generator is the loader circuit itself: its free parameters are one angle
per coupler, mapped to splitting probabilities by p = cos^2(phi). A small
dense critic is trained Wasserstein-style (score difference between real and
generated distributions, weights clipped after each step), and the generator
population evolves against the critic score since the physical parameters
admit no backpropagation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import LoaderParams, apply, build_loader, initial_state, sample_shots


@dataclass(frozen=True)
class GeneratorAnsatz:
    """Loader-circuit generator: n output bins, one angle per coupler."""

    n: int
    params: np.ndarray
    shot_budget: int = 0  # 0 = exact statevector probabilities

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        object.__setattr__(self, "params", params)
        if self.n < 2:
            raise ValueError(f"invalid n: {self.n}")
        if params.shape != (self.n - 1,):
            raise ValueError(f"expected {self.n - 1} params for n={self.n}, got {params.shape}")
        if self.shot_budget < 0:
            raise ValueError(f"invalid shot_budget: {self.shot_budget}")


@dataclass
class CriticNet:
    """Dense scorer with tanh hidden layers and a linear scalar output."""

    weights: list
    biases: list
    clip_bound: float = 0.1

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)


@dataclass(frozen=True)
class TrainConfig:
    population_size: int = 60
    elite_fraction: float = 0.2
    mutation_std: float = 0.025
    crossover_rate: float = 0.5
    critic_steps_per_generation: int = 10
    critic_learning_rate: float = 0.25
    generations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError(f"invalid population_size: {self.population_size}")
        if not 0 < self.elite_fraction <= 1:
            raise ValueError(f"invalid elite_fraction: {self.elite_fraction}")
        if self.mutation_std < 0 or not 0 <= self.crossover_rate <= 1:
            raise ValueError("invalid mutation_std or crossover_rate")
        if self.critic_steps_per_generation < 0 or self.generations < 1:
            raise ValueError("invalid critic_steps_per_generation or generations")
        if self.critic_learning_rate <= 0:
            raise ValueError(f"invalid critic_learning_rate: {self.critic_learning_rate}")


@dataclass
class GanHistory:
    """Per-generation log: best-so-far l2, critic scores, best-so-far params."""

    generations: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    e_real: list = field(default_factory=list)
    e_fake: list = field(default_factory=list)
    best_params: list = field(default_factory=list)

    @property
    def final_l2(self) -> float:
        return self.l2[-1]

    @property
    def final_params(self) -> np.ndarray:
        return self.best_params[-1]


def l2_norm(fake, real) -> float:
    """Euclidean distance between two probability vectors."""
    fake = np.asarray(fake, dtype=float)
    real = np.asarray(real, dtype=float)
    if fake.shape != real.shape:
        raise ValueError(f"shape mismatch: {fake.shape} vs {real.shape}")
    return float(np.linalg.norm(fake - real))


def angles_for_splits(splits) -> np.ndarray:
    """Inverse of the parameter map: phi = arccos(sqrt(p))."""
    return np.arccos(np.sqrt(np.clip(np.asarray(splits, dtype=float), 0.0, 1.0)))


def generate_distribution(ansatz: GeneratorAnsatz, seed=None) -> np.ndarray:
    """Distribution produced by the generator circuit.

    Exact bin probabilities when shot_budget == 0, otherwise empirical
    frequencies from that many measurement shots (deterministic per seed).
    """
    splits = np.cos(ansatz.params) ** 2
    loader = build_loader(LoaderParams(splits), ansatz.n)
    state = apply(loader, initial_state(ansatz.n))
    per_slot = np.abs(state.amps) ** 2
    probs = per_slot[0::2] + per_slot[1::2]
    probs = probs / probs.sum()
    if ansatz.shot_budget == 0:
        return probs
    counts = sample_shots(state, ansatz.shot_budget, seed)
    return (counts[0::2] + counts[1::2]) / ansatz.shot_budget


def make_critic(layer_sizes, clip_bound: float = 0.1, seed=0) -> CriticNet:
    """Random critic with weights drawn inside the clipping box."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or sizes[-1] != 1:
        raise ValueError(f"layer_sizes must end in 1, got {sizes}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = [rng.uniform(-clip_bound, clip_bound, (b, a)) for a, b in zip(sizes, sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return CriticNet(weights=weights, biases=biases, clip_bound=clip_bound)


def _forward(net: CriticNet, x: np.ndarray):
    # returns hidden activations (post-tanh) plus the linear output column
    acts = [x]
    h = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.tanh(h @ w.T + b)
        acts.append(h)
    out = h @ net.weights[-1].T + net.biases[-1]
    return acts, out


def critic_score(net: CriticNet, dist) -> float:
    """Scalar realness score of one distribution."""
    x = np.asarray(dist, dtype=float)
    if x.shape != (net.layer_sizes[0],):
        raise ValueError(f"expected input of size {net.layer_sizes[0]}, got {x.shape}")
    _, out = _forward(net, x[None, :])
    return float(out[0, 0])


def critic_batch_scores(net: CriticNet, batch: np.ndarray) -> np.ndarray:
    _, out = _forward(net, np.asarray(batch, dtype=float))
    return out[:, 0]


def _mean_score_grads(net: CriticNet, batch: np.ndarray):
    """Gradients of mean(score(batch)) w.r.t. every weight and bias."""
    acts, _ = _forward(net, batch)
    b = batch.shape[0]
    g_w = [None] * len(net.weights)
    g_b = [None] * len(net.biases)
    delta = np.full((b, 1), 1.0 / b)  # d mean(out) / d out
    g_w[-1] = delta.T @ acts[-1]
    g_b[-1] = delta.sum(axis=0)
    for k in range(len(net.weights) - 2, -1, -1):
        delta = (delta @ net.weights[k + 1]) * (1.0 - acts[k + 1] ** 2)  # tanh'
        g_w[k] = delta.T @ acts[k]
        g_b[k] = delta.sum(axis=0)
    return g_w, g_b


def critic_gradients(net: CriticNet, real_batch, fake_batch):
    """Gradients of E[score(real)] - E[score(fake)] by backpropagation."""
    real = np.asarray(real_batch, dtype=float)
    fake = np.asarray(fake_batch, dtype=float)
    gwr, gbr = _mean_score_grads(net, real)
    gwf, gbf = _mean_score_grads(net, fake)
    return [a - b for a, b in zip(gwr, gwf)], [a - b for a, b in zip(gbr, gbf)]


def critic_update(net: CriticNet, real_batch, fake_batch, lr: float) -> CriticNet:
    """One gradient-ascent step on the score gap, then weight clipping."""
    g_w, g_b = critic_gradients(net, real_batch, fake_batch)
    c = net.clip_bound
    weights = [np.clip(w + lr * g, -c, c) for w, g in zip(net.weights, g_w)]
    biases = [np.clip(b + lr * g, -c, c) for b, g in zip(net.biases, g_b)]
    return CriticNet(weights=weights, biases=biases, clip_bound=c)


def evolve_generation(population: np.ndarray, fitness, config: TrainConfig, seed) -> np.ndarray:
    """Elitist tournament evolution: keep the top slice, breed the rest.

    Parents come from size-3 tournaments; children are uniform crossovers
    (with probability crossover_rate, else a clone of the first parent) plus
    Gaussian mutation on every gene.
    """
    population = np.asarray(population, dtype=float)
    fitness = np.asarray(fitness, dtype=float)
    pop, dim = population.shape
    if fitness.shape != (pop,):
        raise ValueError(f"fitness must have shape ({pop},), got {fitness.shape}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_elite = max(1, int(round(config.elite_fraction * pop)))
    order = np.argsort(-fitness, kind="stable")
    out = np.empty_like(population)
    out[:n_elite] = population[order[:n_elite]]

    def tournament() -> int:
        contenders = rng.integers(0, pop, 3)
        return contenders[np.argmax(fitness[contenders])]

    for k in range(n_elite, pop):
        p1 = population[tournament()]
        if rng.random() < config.crossover_rate:
            p2 = population[tournament()]
            mask = rng.random(dim) < 0.5
            child = np.where(mask, p1, p2)
        else:
            child = p1.copy()
        out[k] = child + rng.normal(0.0, config.mutation_std, dim)
    return out


def _jittered_real_batch(target: np.ndarray, size: int, sigma: float, rng) -> np.ndarray:
    batch = np.tile(target, (size, 1))
    if sigma > 0:
        batch = np.clip(batch + rng.normal(0.0, sigma, batch.shape), 0.0, None)
        batch = batch / batch.sum(axis=1, keepdims=True)
    return batch


def train_gan(
    target,
    config: TrainConfig,
    shot_budget: int = 0,
    real_jitter: float = 0.01,
    critic_hidden=(32, 16),
    clip_bound: float = 0.1,
) -> GanHistory:
    """Adversarial fit of the loader circuit to a target distribution.

    Per generation: the critic takes critic_steps_per_generation ascent steps
    on jittered copies of the target versus the population's distributions,
    then the population evolves one step against the critic score. The history
    logs the best exact l2 to the target seen so far (monotone by
    construction) together with that snapshot's parameters.
    """
    target = np.asarray(target, dtype=float)
    if target.ndim != 1 or len(target) < 2:
        raise ValueError("target must be a 1-d distribution with >= 2 bins")
    if np.any(target < 0) or abs(target.sum() - 1.0) > 1e-9:
        raise ValueError("target must be a probability vector")
    n = len(target)
    pop = config.population_size

    rng_init = np.random.default_rng((config.seed, 3, 0))
    population = rng_init.uniform(0.0, math.pi / 2, (pop, n - 1))
    critic = make_critic((n, *critic_hidden, 1), clip_bound, np.random.default_rng((config.seed, 3, 1)))

    history = GanHistory()
    best_l2 = math.inf
    best_params = population[0].copy()
    for gen in range(config.generations):
        gen_rng = np.random.default_rng((config.seed, 3, 2, gen))
        exact = np.stack(
            [generate_distribution(GeneratorAnsatz(n, p)) for p in population]
        )
        if shot_budget > 0:
            fakes = np.stack(
                [
                    generate_distribution(GeneratorAnsatz(n, p, shot_budget), gen_rng)
                    for p in population
                ]
            )
        else:
            fakes = exact

        for _ in range(config.critic_steps_per_generation):
            real = _jittered_real_batch(target, pop, real_jitter, gen_rng)
            critic = critic_update(critic, real, fakes, config.critic_learning_rate)

        fitness = critic_batch_scores(critic, fakes)
        e_real = float(
            critic_batch_scores(critic, _jittered_real_batch(target, pop, real_jitter, gen_rng)).mean()
        )
        e_fake = float(fitness.mean())

        l2s = np.linalg.norm(exact - target, axis=1)
        gen_best = int(np.argmin(l2s))
        if l2s[gen_best] < best_l2:
            best_l2 = float(l2s[gen_best])
            best_params = population[gen_best].copy()
        history.generations.append(gen)
        history.l2.append(best_l2)
        history.e_real.append(e_real)
        history.e_fake.append(e_fake)
        history.best_params.append(best_params.copy())

        population = evolve_generation(population, fitness, config, gen_rng)
    return history


def export_history_csv(history: GanHistory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "l2", "e_real", "e_fake"])
        for row in zip(history.generations, history.l2, history.e_real, history.e_fake):
            writer.writerow(row)


def save_generator_params(path, ansatz: GeneratorAnsatz, l2: float | None = None) -> None:
    """Best-parameters file: JSON with the bin count and coupler angles."""
    payload = {"n": ansatz.n, "params": [float(x) for x in ansatz.params]}
    if l2 is not None:
        payload["l2"] = float(l2)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_generator_params(path) -> GeneratorAnsatz:
    with open(path) as fh:
        payload = json.load(fh)
    return GeneratorAnsatz(int(payload["n"]), np.asarray(payload["params"], dtype=float))
