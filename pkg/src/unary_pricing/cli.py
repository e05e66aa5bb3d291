"""Command-line front end for the pricing experiments.

One YAML file (or the built-in defaults) describes an experiment; positional
``key=value`` arguments override single fields, where the key is a dotted path
into the config tree or a bare leaf name when that name is unambiguous. Depth
ladders accept a compact range syntax, e.g. ``ae.depths=0..50``.

Every run writes into the output directory: ``manifest.json`` (the fully
resolved config plus the code version, enough to reproduce the run exactly),
``results.csv``, ``summary.json``, and report figures unless disabled with
``--no-figures``. Exit status 0 on success, 1 when the measurement records
cannot be explained by the model, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import copy
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .estimation import (
    AESchedule,
    InconsistentRecordsError,
    convergence_study,
    estimate_payoff,
)
from .gan import (
    GeneratorAnsatz,
    TrainConfig,
    export_history_csv,
    generate_distribution,
    load_generator_params,
    save_generator_params,
    train_gan,
)
from .market import BsmParams, DiscreteDistribution, discretize, expected_payoff_discrete, mc_price
from . import reporting

MODES = ("price", "converge", "gan-train", "mc-baseline")

DEFAULTS = {
    "mode": "price",
    "seed": 7,
    "output_dir": "out",
    "figures": True,
    "n_bins": 8,
    "coverage": 0.997,
    "market": {"s0": 2.0, "r": 0.05, "sigma": 0.4, "t": 1.0, "strike": 1.9},
    "instance": {"prices": None, "probs": None},
    "ae": {"depths": "0..50", "shots_per_depth": 100, "repeats": 50, "confidence": 0.95},
    "gan": {
        "population_size": 60,
        "elite_fraction": 0.2,
        "mutation_std": 0.025,
        "crossover_rate": 0.5,
        "critic_steps_per_generation": 10,
        "critic_learning_rate": 0.25,
        "generations": 100,
        "shot_budget": 0,
        "real_jitter": 0.01,
        "load_params": None,
    },
    "mc": {"n_paths": 100000, "steps": 1},
}


class ConfigError(Exception):
    """Configuration problem; the message names the offending field."""


def _merge(base: dict, incoming: dict, prefix: str = "") -> None:
    for key, val in incoming.items():
        full = prefix + str(key)
        if key not in base:
            raise ConfigError(f"{full}: unknown field")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{full}: expected a mapping")
            _merge(base[key], val, full + ".")
        elif val is None and base[key] is not None:
            raise ConfigError(f"{full}: value required (null given)")
        else:
            base[key] = val


def _leaf_paths(tree: dict, prefix: str = ""):
    for key, val in tree.items():
        full = prefix + str(key)
        if isinstance(val, dict):
            yield from _leaf_paths(val, full + ".")
        else:
            yield full


def _coerce(field: str, current, raw: str):
    """Parse an override string against the type of the value it replaces."""
    if raw.lower() in ("null", "none"):
        return None
    try:
        if isinstance(current, bool):
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(float(raw)) if any(c in raw for c in ".eE") else int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{field}: cannot parse {raw!r}") from None
    return raw


def _apply_override(config: dict, token: str) -> None:
    if "=" not in token:
        raise ConfigError(f"{token!r}: overrides take the form key=value")
    key, raw = token.split("=", 1)
    if "." not in key:
        matches = [p for p in _leaf_paths(config) if p.rsplit(".", 1)[-1] == key]
        if not matches:
            raise ConfigError(f"{key}: unknown field")
        if len(matches) > 1:
            raise ConfigError(f"{key}: ambiguous, could be any of {', '.join(sorted(matches))}")
        key = matches[0]
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"{key}: unknown field")
        node = node[part]
    leaf = parts[-1]
    if leaf not in node or isinstance(node[leaf], dict):
        raise ConfigError(f"{key}: unknown field")
    node[leaf] = _coerce(key, node[leaf], raw)


def parse_depths(value) -> tuple:
    """Depth ladder: a list, an int, 'a,b,c', or the range shorthand 'a..b'."""
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    text = str(value).strip()
    try:
        if ".." in text:
            a, b = text.split("..")
            return tuple(range(int(a), int(b) + 1))
        if "," in text:
            return tuple(int(tok) for tok in text.split(","))
        return (int(text),)
    except ValueError:
        raise ConfigError(f"ae.depths: cannot parse {value!r}") from None


def load_config(config_path, overrides, mode=None, seed=None, out=None, no_figures=False) -> dict:
    """Defaults, then the YAML file, then key=value overrides, then flags."""
    config = copy.deepcopy(DEFAULTS)
    if config_path is not None:
        try:
            with open(config_path) as fh:
                loaded = yaml.safe_load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file does not parse: {exc}") from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must be a mapping at top level")
        _merge(config, loaded)
    for token in overrides:
        _apply_override(config, token)
    if mode is not None:
        config["mode"] = mode
    if seed is not None:
        config["seed"] = int(seed)
    if out is not None:
        config["output_dir"] = str(out)
    if no_figures:
        config["figures"] = False
    return config


class ExperimentConfig:
    """Validated experiment: typed sub-configs plus the resolved raw tree."""

    def __init__(self, raw: dict):
        self.raw = raw
        self.mode = raw["mode"]
        if self.mode not in MODES:
            raise ConfigError(f"mode: {self.mode!r} is not one of {', '.join(MODES)}")
        try:
            self.seed = int(raw["seed"])
        except (TypeError, ValueError):
            raise ConfigError(f"seed: cannot parse {raw['seed']!r}") from None
        self.output_dir = Path(raw["output_dir"])
        self.figures = bool(raw["figures"])
        self.n_bins = self._int("n_bins", raw["n_bins"], minimum=2)
        self.coverage = self._float("coverage", raw["coverage"])

        try:
            self.market = BsmParams(**{k: float(v) for k, v in raw["market"].items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"market: {exc}") from None

        ae = raw["ae"]
        try:
            self.schedule = AESchedule(
                depths=parse_depths(ae["depths"]),
                shots_per_depth=self._int("ae.shots_per_depth", ae["shots_per_depth"], 1),
                repeats=self._int("ae.repeats", ae["repeats"], 1),
            )
        except ValueError as exc:
            raise ConfigError(f"ae: {exc}") from None
        self.confidence = self._float("ae.confidence", ae["confidence"])
        if not 0 < self.confidence < 1:
            raise ConfigError(f"ae.confidence: must be in (0, 1), got {self.confidence}")

        gan = raw["gan"]
        try:
            self.train_config = TrainConfig(
                population_size=self._int("gan.population_size", gan["population_size"], 1),
                elite_fraction=self._float("gan.elite_fraction", gan["elite_fraction"]),
                mutation_std=self._float("gan.mutation_std", gan["mutation_std"]),
                crossover_rate=self._float("gan.crossover_rate", gan["crossover_rate"]),
                critic_steps_per_generation=self._int(
                    "gan.critic_steps_per_generation", gan["critic_steps_per_generation"], 0
                ),
                critic_learning_rate=self._float(
                    "gan.critic_learning_rate", gan["critic_learning_rate"]
                ),
                generations=self._int("gan.generations", gan["generations"], 1),
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(f"gan: {exc}") from None
        self.gan_shot_budget = self._int("gan.shot_budget", gan["shot_budget"], 0)
        self.gan_real_jitter = self._float("gan.real_jitter", gan["real_jitter"])
        self.gan_load_params = gan["load_params"]

        mc = raw["mc"]
        self.mc_n_paths = self._int("mc.n_paths", mc["n_paths"], 1)
        self.mc_steps = self._int("mc.steps", mc["steps"], 1)

        inst = raw["instance"]
        if (inst["prices"] is None) != (inst["probs"] is None):
            raise ConfigError("instance: prices and probs must be given together")
        self.instance = None
        if inst["prices"] is not None:
            try:
                self.instance = DiscreteDistribution(
                    prices=np.asarray(inst["prices"], dtype=float),
                    probs=np.asarray(inst["probs"], dtype=float),
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"instance: {exc}") from None

    @staticmethod
    def _int(field: str, value, minimum=None) -> int:
        try:
            out = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{field}: cannot parse {value!r}") from None
        if minimum is not None and out < minimum:
            raise ConfigError(f"{field}: must be >= {minimum}, got {out}")
        return out

    @staticmethod
    def _float(field: str, value) -> float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{field}: cannot parse {value!r}") from None

    def distribution(self) -> DiscreteDistribution:
        """The priced instance: explicit bins if given, else the discretized market law."""
        if self.instance is not None:
            return self.instance
        return discretize(self.market, self.n_bins, self.coverage)


def _write_manifest(cfg: ExperimentConfig) -> None:
    reporting.write_json(
        cfg.output_dir / "manifest.json",
        {"code_version": __version__, "config": cfg.raw},
    )


def _run_price(cfg: ExperimentConfig) -> int:
    dist = cfg.distribution()
    if cfg.gan_load_params:
        ansatz = _load_ansatz(cfg.gan_load_params, dist.n)
        dist = DiscreteDistribution(prices=dist.prices, probs=generate_distribution(ansatz))
    strike = cfg.market.strike
    result = estimate_payoff(dist, strike, cfg.schedule, cfg.seed, cfg.confidence)
    scale = max(float(dist.prices[-1] - strike), 0.0)
    payoff_ci = [float(np.sin(b) ** 2 * scale) for b in result.alpha_ci]

    reporting.write_csv(
        cfg.output_dir / "results.csv",
        ["m", "hits", "shots", "frequency", "wilson_lo", "wilson_hi"],
        [(r.m, r.hits, r.shots, r.frequency, r.wilson_lo, r.wilson_hi) for r in result.records],
    )
    reporting.write_json(
        cfg.output_dir / "summary.json",
        {
            "mode": "price",
            "seed": cfg.seed,
            "n_bins": dist.n,
            "strike": strike,
            "payoff_hat": result.payoff_hat,
            "payoff_ci": payoff_ci,
            "alpha_hat": result.alpha_hat,
            "alpha_ci": list(result.alpha_ci),
            "oracle_calls": result.oracle_calls,
            "discrete_oracle": expected_payoff_discrete(dist, strike),
        },
    )
    if cfg.figures:
        reporting.render_distribution(dist, strike, cfg.output_dir / "distribution.png")
        reporting.render_depth_fit(result.records, result.alpha_hat, cfg.output_dir / "depth_fit.png")
    print(
        f"payoff_hat {result.payoff_hat:.6f}  ci [{payoff_ci[0]:.6f}, {payoff_ci[1]:.6f}]"
        f"  oracle_calls {result.oracle_calls}"
    )
    return 0


def _load_ansatz(path, n_bins: int) -> GeneratorAnsatz:
    try:
        ansatz = load_generator_params(path)
    except FileNotFoundError:
        raise ConfigError(f"gan.load_params: file not found: {path}") from None
    if ansatz.n != n_bins:
        raise ConfigError(
            f"gan.load_params: file is for {ansatz.n} bins, experiment uses {n_bins}"
        )
    return ansatz


def _run_converge(cfg: ExperimentConfig) -> int:
    dist = cfg.distribution()
    strike = cfg.market.strike
    rows = convergence_study(
        dist,
        strike,
        max_depth=max(cfg.schedule.depths),
        shots=cfg.schedule.shots_per_depth,
        repeats=cfg.schedule.repeats,
        seed=cfg.seed,
    )
    reporting.write_csv(
        cfg.output_dir / "results.csv",
        ["depth", "m", "oracle_calls", "payoff_mean", "payoff_std", "abs_error", "mc_error"],
        [
            (r.depth, r.m, r.oracle_calls, r.payoff_mean, r.payoff_std, r.abs_error, r.mc_error)
            for r in rows
        ],
    )
    calls = [r.oracle_calls for r in rows]
    ae_slope = reporting.loglog_slope(calls, [r.abs_error for r in rows])
    mc_slope = reporting.loglog_slope(calls, [r.mc_error for r in rows])
    contraction = rows[0].payoff_std / rows[-1].payoff_std if rows[-1].payoff_std > 0 else float("inf")
    reporting.write_json(
        cfg.output_dir / "summary.json",
        {
            "mode": "converge",
            "seed": cfg.seed,
            "ae_slope": ae_slope,
            "mc_slope": mc_slope,
            "std_contraction": contraction,
            "final_abs_error": rows[-1].abs_error,
            "oracle_calls": rows[-1].oracle_calls,
            "discrete_oracle": expected_payoff_discrete(dist, strike),
        },
    )
    if cfg.figures:
        reporting.render_convergence(rows, cfg.output_dir / "convergence.png")
        reporting.render_distribution(dist, strike, cfg.output_dir / "distribution.png")
    print(f"ae_slope {ae_slope:.3f}  mc_slope {mc_slope:.3f}  std_contraction {contraction:.1f}")
    return 0


def _run_gan_train(cfg: ExperimentConfig) -> int:
    target = cfg.distribution().probs
    history = train_gan(
        target,
        cfg.train_config,
        shot_budget=cfg.gan_shot_budget,
        real_jitter=cfg.gan_real_jitter,
    )
    export_history_csv(history, cfg.output_dir / "results.csv")
    params_file = cfg.output_dir / "generator_params.json"
    save_generator_params(
        params_file, GeneratorAnsatz(len(target), history.final_params), history.final_l2
    )
    reporting.write_json(
        cfg.output_dir / "summary.json",
        {
            "mode": "gan-train",
            "seed": cfg.seed,
            "l2_final": history.final_l2,
            "generations": len(history.generations),
            "params_file": params_file.name,
        },
    )
    if cfg.figures:
        reporting.render_gan_history(history, target, cfg.output_dir / "gan_training.png")
    print(f"l2_final {history.final_l2:.5f}  generations {len(history.generations)}")
    return 0


def _run_mc_baseline(cfg: ExperimentConfig) -> int:
    result = mc_price(cfg.market, cfg.mc_n_paths, cfg.seed, cfg.mc_steps)
    reporting.write_csv(
        cfg.output_dir / "results.csv",
        ["n_paths", "steps", "estimate", "std_error"],
        [(result.n_paths, cfg.mc_steps, result.estimate, result.std_error)],
    )
    reporting.write_json(
        cfg.output_dir / "summary.json",
        {
            "mode": "mc-baseline",
            "seed": cfg.seed,
            "estimate": result.estimate,
            "std_error": result.std_error,
            "n_paths": result.n_paths,
            "steps": cfg.mc_steps,
        },
    )
    if cfg.figures:
        reporting.render_distribution(cfg.distribution(), cfg.market.strike, cfg.output_dir / "distribution.png")
    print(f"estimate {result.estimate:.6f}  std_error {result.std_error:.6f}  n_paths {result.n_paths}")
    return 0


_RUNNERS = {
    "price": _run_price,
    "converge": _run_converge,
    "gan-train": _run_gan_train,
    "mc-baseline": _run_mc_baseline,
}


def run(config: dict) -> int:
    """Execute one experiment from a resolved config tree."""
    cfg = ExperimentConfig(config)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(cfg)
    return _RUNNERS[cfg.mode](cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="unary-pricer",
        description="Unary option pricing experiments: amplified estimation, "
        "convergence studies, adversarial distribution loading, and a Monte "
        "Carlo baseline.",
    )
    parser.add_argument("--config", metavar="PATH", default=None, help="YAML experiment file")
    parser.add_argument("--mode", choices=MODES, default=None, help="pipeline to run")
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--out", metavar="DIR", default=None, help="output directory")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG report figures")
    parser.add_argument(
        "--print-defaults", action="store_true", help="dump the default config as YAML and exit"
    )
    parser.add_argument(
        "overrides", nargs="*", metavar="key=value",
        help="config overrides, dotted paths or unambiguous leaf names",
    )
    args = parser.parse_args(argv)

    if args.print_defaults:
        print(yaml.safe_dump(DEFAULTS, sort_keys=False).rstrip())
        return 0

    try:
        config = load_config(
            args.config, args.overrides, args.mode, args.seed, args.out, args.no_figures
        )
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InconsistentRecordsError as exc:
        print(f"inconsistent records: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
