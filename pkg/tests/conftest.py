import numpy as np
import pytest

from unary_pricing import BsmParams, CriticNet, DiscreteDistribution
from unary_pricing.gan import critic_batch_scores, critic_gradients

# One line per acceptance check, printed in the terminal summary so the
# outcome of every headline requirement is visible in plain pytest output.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance results")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ref_dist():
    """Three-bin reference instance used throughout: strike 1.5 pays 0.625."""
    return DiscreteDistribution(
        prices=np.array([1.0, 2.0, 3.0]), probs=np.array([0.25, 0.5, 0.25])
    )


@pytest.fixture
def ref_market():
    return BsmParams(s0=1.0, r=0.0, sigma=0.4, t=1.0, strike=1.0)


def random_distribution(rng, n):
    """Random strictly-increasing prices with a random probability vector."""
    prices = np.cumsum(rng.uniform(0.2, 1.0, n)) + rng.uniform(0.0, 2.0)
    probs = rng.dirichlet(np.ones(n))
    return DiscreteDistribution(prices=prices, probs=probs)


def critic_objective(net, real, fake):
    """Wasserstein-style critic objective: mean real score minus mean fake score."""
    return float(critic_batch_scores(net, real).mean() - critic_batch_scores(net, fake).mean())


def numeric_critic_gradients(net, real, fake, eps=1e-6):
    """Central finite differences of the critic objective, parameter by parameter."""
    grads_w, grads_b = [], []
    for li in range(len(net.weights)):
        gw = np.zeros_like(net.weights[li])
        for idx in np.ndindex(*net.weights[li].shape):
            for sign in (1, -1):
                w = [m.copy() for m in net.weights]
                w[li][idx] += sign * eps
                shifted = CriticNet(weights=w, biases=[b.copy() for b in net.biases],
                                    clip_bound=net.clip_bound)
                gw[idx] += sign * critic_objective(shifted, real, fake)
        grads_w.append(gw / (2 * eps))
        gb = np.zeros_like(net.biases[li])
        for idx in np.ndindex(*net.biases[li].shape):
            for sign in (1, -1):
                b = [m.copy() for m in net.biases]
                b[li][idx] += sign * eps
                shifted = CriticNet(weights=[m.copy() for m in net.weights], biases=b,
                                    clip_bound=net.clip_bound)
                gb[idx] += sign * critic_objective(shifted, real, fake)
        grads_b.append(gb / (2 * eps))
    return grads_w, grads_b


def critic_gradient_gap(net, real, fake):
    """Max analytic-vs-numeric gradient mismatch, relative to the numeric scale."""
    aw, ab = critic_gradients(net, real, fake)
    nw, nb = numeric_critic_gradients(net, real, fake)
    num = max(max(np.abs(a - n).max() for a, n in zip(aw, nw)),
              max(np.abs(a - n).max() for a, n in zip(ab, nb)))
    scale = max(max(np.abs(n).max() for n in nw), max(np.abs(n).max() for n in nb), 1e-12)
    return num / scale
