import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from unary_pricing import cli
from unary_pricing.cli import ConfigError, DEFAULTS, load_config, parse_depths
from unary_pricing.estimation import InconsistentRecordsError
from unary_pricing.gan import load_generator_params

FIXTURE = {
    "instance": {"prices": [1.0, 2.0, 3.0], "probs": [0.25, 0.5, 0.25]},
    "market": {"strike": 1.5},
    "ae": {"depths": "0..6", "shots_per_depth": 200, "repeats": 3},
    "seed": 1,
}


def write_yaml(path, tree):
    path.write_text(yaml.safe_dump(tree))
    return str(path)


def run_fixture(tmp_path, out_name, extra_args=(), tree=FIXTURE, **tree_updates):
    tree = {**tree, **tree_updates}
    config = write_yaml(tmp_path / f"{out_name}.yaml", tree)
    out = tmp_path / out_name
    code = cli.main(["--config", config, "--out", str(out), *extra_args])
    return code, out


class TestParseDepths:
    def test_range_shorthand(self):
        assert parse_depths("0..5") == (0, 1, 2, 3, 4, 5)

    def test_comma_list(self):
        assert parse_depths("1,3,9") == (1, 3, 9)

    def test_single_int(self):
        assert parse_depths("7") == (7,)
        assert parse_depths(7) == (7,)

    def test_list_passthrough(self):
        assert parse_depths([0, 2, 4]) == (0, 2, 4)

    def test_garbage_rejected(self):
        with pytest.raises(ConfigError, match="ae.depths"):
            parse_depths("0..x")


class TestOverrides:
    def test_dotted_path(self):
        config = load_config(None, ["market.sigma=0.2"])
        assert config["market"]["sigma"] == 0.2

    def test_bare_leaf_resolves(self):
        config = load_config(None, ["sigma=0.2", "repeats=9"])
        assert config["market"]["sigma"] == 0.2
        assert config["ae"]["repeats"] == 9

    def test_int_accepts_scientific(self):
        config = load_config(None, ["mc.n_paths=1e4"])
        assert config["mc"]["n_paths"] == 10000

    def test_bool_coercion(self):
        assert load_config(None, ["figures=false"])["figures"] is False
        assert load_config(None, ["figures=yes"])["figures"] is True

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="bogus: unknown field"):
            load_config(None, ["bogus=1"])

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key=value"):
            load_config(None, ["market.sigma"])

    def test_unparseable_value_names_field(self):
        with pytest.raises(ConfigError, match="seed: cannot parse 'abc'"):
            load_config(None, ["seed=abc"])

    def test_ambiguous_leaf_lists_candidates(self):
        tree = {"first": {"x": 1}, "second": {"x": 2}}
        with pytest.raises(ConfigError, match="first.x"):
            cli._apply_override(tree, "x=3")

    def test_flags_win_over_file(self, tmp_path):
        config = write_yaml(tmp_path / "c.yaml", {"seed": 3, "mode": "price"})
        merged = load_config(config, [], mode="converge", seed=11, no_figures=True)
        assert merged["mode"] == "converge"
        assert merged["seed"] == 11
        assert merged["figures"] is False


class TestConfigFile:
    def test_unknown_yaml_field(self, tmp_path):
        config = write_yaml(tmp_path / "c.yaml", {"marget": {"sigma": 0.2}})
        with pytest.raises(ConfigError, match="marget: unknown field"):
            load_config(config, [])

    def test_null_for_required_value(self, tmp_path):
        config = write_yaml(tmp_path / "c.yaml", {"market": {"sigma": None}})
        with pytest.raises(ConfigError, match=r"market.sigma: value required"):
            load_config(config, [])

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/nonexistent/config.yaml", [])

    def test_non_mapping_file(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("- just\n- a\n- list\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(str(path), [])


class TestPriceMode:
    def test_fixture_run(self, tmp_path, capsys):
        code, out = run_fixture(tmp_path, "price", ["--no-figures"])
        assert code == 0
        assert "payoff_hat" in capsys.readouterr().out

        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == "m,hits,shots,frequency,wilson_lo,wilson_hi"

        summary = json.loads((out / "summary.json").read_text())
        lo, hi = summary["payoff_ci"]
        assert lo <= 0.625 <= hi
        assert summary["payoff_hat"] == pytest.approx(0.625, abs=0.02)
        assert summary["discrete_oracle"] == pytest.approx(0.625)

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 1
        assert "code_version" in manifest

    def test_same_config_same_bytes(self, tmp_path):
        _, out_a = run_fixture(tmp_path, "a", ["--no-figures"])
        _, out_b = run_fixture(tmp_path, "b", ["--no-figures"])
        assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()
        assert (out_a / "summary.json").read_bytes() == (out_b / "summary.json").read_bytes()

    def test_manifest_reproduces_run(self, tmp_path):
        _, out_a = run_fixture(tmp_path, "orig", ["--no-figures"])
        manifest = json.loads((out_a / "manifest.json").read_text())
        replay = write_yaml(tmp_path / "replay.yaml", manifest["config"])
        out_b = tmp_path / "replay"
        assert cli.main(["--config", replay, "--out", str(out_b), "--no-figures"]) == 0
        assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()

    def test_figures_written_and_suppressed(self, tmp_path):
        _, with_figs = run_fixture(tmp_path, "figs")
        assert (with_figs / "distribution.png").exists()
        assert (with_figs / "depth_fit.png").exists()
        _, without = run_fixture(tmp_path, "nofigs", ["--no-figures"])
        assert not list(without.glob("*.png"))


class TestConvergeMode:
    def test_small_run(self, tmp_path, capsys):
        code, out = run_fixture(
            tmp_path, "conv", ["--mode", "converge"],
            ae={"depths": "0..4", "shots_per_depth": 50, "repeats": 4},
        )
        assert code == 0
        assert "ae_slope" in capsys.readouterr().out
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == "depth,m,oracle_calls,payoff_mean,payoff_std,abs_error,mc_error"
        summary = json.loads((out / "summary.json").read_text())
        for key in ("ae_slope", "mc_slope", "std_contraction", "final_abs_error"):
            assert key in summary
        assert (out / "convergence.png").exists()


GAN_TREE = {
    "instance": {"prices": [1.0, 2.0, 3.0, 4.0], "probs": [0.1, 0.2, 0.3, 0.4]},
    "market": {"strike": 2.5},
    "gan": {"population_size": 10, "generations": 5},
    "seed": 0,
}


class TestGanTrainMode:
    def test_small_run_and_params_reuse(self, tmp_path):
        code, out = run_fixture(
            tmp_path, "gan", ["--mode", "gan-train", "--no-figures"], tree=GAN_TREE
        )
        assert code == 0
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == "generation,l2,e_real,e_fake"

        params_file = out / "generator_params.json"
        ansatz = load_generator_params(params_file)
        assert ansatz.n == 4
        assert len(ansatz.params) == 3

        summary = json.loads((out / "summary.json").read_text())
        assert summary["l2_final"] >= 0
        assert summary["params_file"] == "generator_params.json"

        # the trained generator can stand in for the loader when pricing
        code, priced = run_fixture(
            tmp_path, "priced", ["--no-figures"], tree=GAN_TREE,
            **{"gan": {**GAN_TREE["gan"], "load_params": str(params_file)}},
        )
        assert code == 0
        assert np.isfinite(json.loads((priced / "summary.json").read_text())["payoff_hat"])

    def test_params_bin_mismatch(self, tmp_path, capsys):
        code, out = run_fixture(
            tmp_path, "gan4", ["--mode", "gan-train", "--no-figures"], tree=GAN_TREE
        )
        assert code == 0
        code, _ = run_fixture(
            tmp_path, "mismatch", ["--no-figures"],
            **{"gan": {**FIXTURE.get("gan", {}), "load_params": str(out / "generator_params.json")}},
        )
        assert code == 2
        assert "gan.load_params" in capsys.readouterr().err


class TestMcBaselineMode:
    def test_error_shrinks_with_paths(self, tmp_path):
        summaries = []
        for n_paths, name in ((10**4, "mc_small"), (10**6, "mc_big")):
            out = tmp_path / name
            code = cli.main([
                "--mode", "mc-baseline", "--seed", "3", "--out", str(out),
                "--no-figures", f"mc.n_paths={n_paths}",
            ])
            assert code == 0
            summaries.append(json.loads((out / "summary.json").read_text()))
        ratio = summaries[0]["std_error"] / summaries[1]["std_error"]
        assert ratio == pytest.approx(10.0, rel=0.2)
        header = (tmp_path / "mc_big" / "results.csv").read_text().splitlines()[0]
        assert header == "n_paths,steps,estimate,std_error"


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        assert cli.main(["--out", str(tmp_path / "x"), "bogus_field=1"]) == 2
        assert "config error: bogus_field" in capsys.readouterr().err

    def test_bad_mode_in_file_is_2(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "c.yaml", {"mode": "frobnicate"})
        assert cli.main(["--config", config]) == 2
        assert "mode" in capsys.readouterr().err

    def test_instance_needs_both_arrays(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "c.yaml", {"instance": {"prices": [1.0, 2.0]}})
        assert cli.main(["--config", config, "--out", str(tmp_path / "x")]) == 2
        assert "instance" in capsys.readouterr().err

    def test_inconsistent_records_is_1(self, tmp_path, capsys, monkeypatch):
        def explode(*args, **kwargs):
            raise InconsistentRecordsError("synthetic failure")

        monkeypatch.setattr(cli, "estimate_payoff", explode)
        config = write_yaml(tmp_path / "c.yaml", FIXTURE)
        code = cli.main(["--config", config, "--out", str(tmp_path / "x"), "--no-figures"])
        assert code == 1
        assert "inconsistent records" in capsys.readouterr().err


class TestPrintDefaults:
    def test_round_trips_through_yaml(self, capsys):
        assert cli.main(["--print-defaults"]) == 0
        assert yaml.safe_load(capsys.readouterr().out) == DEFAULTS

    def test_installed_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "unary_pricing.cli", "--print-defaults"],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 0
        assert yaml.safe_load(proc.stdout) == DEFAULTS
