"""Delimited output, structured summaries, and report figures.

Everything here is deterministic: given the same inputs the CSV and JSON
writers produce byte-identical files (no timestamps, stable key order), and
the figure renderers draw from already-computed results only.
"""

from __future__ import annotations

import csv
import json
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def render_distribution(dist, strike, path) -> None:
    """Discretized price law as bars with the strike marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    width = (dist.prices[-1] - dist.prices[0]) / max(dist.n - 1, 1) * 0.85
    ax.bar(dist.prices, dist.probs, width=width, color="#4878cf", alpha=0.8, label="bin probability")
    ax.axvline(strike, color="#d1495b", linestyle="--", label=f"strike {strike:g}")
    ax.set_xlabel("price")
    ax.set_ylabel("probability")
    ax.set_title("discretized terminal price law")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_depth_fit(records, alpha_hat, path) -> None:
    """Measured ancilla-1 frequency per depth against the fitted oscillation."""
    ms = np.array([r.m for r in records])
    freq = np.array([r.frequency for r in records])
    lo = np.array([r.wilson_lo for r in records])
    hi = np.array([r.wilson_hi for r in records])

    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.errorbar(
        ms, freq, yerr=[freq - lo, hi - freq], fmt="o", ms=3.5,
        color="#4878cf", ecolor="#9fb8e3", label="measured frequency",
    )
    grid = np.linspace(ms.min(), ms.max(), 600)
    ax.plot(
        grid, np.sin((2 * grid + 1) * alpha_hat) ** 2, "-",
        color="#d1495b", lw=1.2, label="fitted oscillation",
    )
    ax.set_xlabel("amplification depth m")
    ax.set_ylabel("ancilla-1 probability")
    ax.set_title("depth ladder and maximum-likelihood fit")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_convergence(rows, path) -> None:
    """Log-log error scaling: amplified estimator vs matched-budget sampling."""
    calls = np.array([r.oracle_calls for r in rows], dtype=float)
    ae = np.array([r.abs_error for r in rows])
    mc = np.array([r.mc_error for r in rows])

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.loglog(calls, ae, "o-", ms=3.5, color="#4878cf", label="amplitude estimation")
    ax.loglog(calls, mc, "s-", ms=3.5, color="#e1a100", label="matched-budget sampling")
    anchor = ae[0] * calls[0]
    ax.loglog(calls, anchor / calls, ":", color="#4878cf", alpha=0.6, label="slope -1")
    anchor_mc = mc[0] * math.sqrt(calls[0])
    ax.loglog(calls, anchor_mc / np.sqrt(calls), ":", color="#e1a100", alpha=0.6, label="slope -1/2")
    ax.set_xlabel("oracle calls")
    ax.set_ylabel("mean absolute error")
    ax.set_title("error scaling against call budget")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_gan_history(history, target, path) -> None:
    """Final generator output against the target, plus the l2 trace."""
    from .gan import GeneratorAnsatz, generate_distribution

    target = np.asarray(target, dtype=float)
    final = generate_distribution(GeneratorAnsatz(len(target), history.final_params))
    bins = np.arange(len(target))

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4))
    ax1.bar(bins, target, color="#bcd2ee", label="target")
    ax1.plot(bins, final, "o-", color="#d1495b", ms=4, label="generator")
    ax1.set_xlabel("bin")
    ax1.set_ylabel("probability")
    ax1.set_title("loaded distribution")
    ax1.legend()

    ax2.semilogy(history.generations, history.l2, color="#4878cf")
    ax2.set_xlabel("generation")
    ax2.set_ylabel("best l2 distance")
    ax2.set_title("adversarial training progress")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
