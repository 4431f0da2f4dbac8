"""Config parsing, result stores and the batch commands end to end."""
import copy
import json

import numpy as np
import pandas as pd
import pytest
import yaml

from pyopc.cli import (
    InMemoryResultStore,
    config_from_dict,
    main,
    parse_config,
    render_json,
    render_table,
    run_command,
)
from pyopc.errors import ConfigError
from pyopc.simulate import ScenarioMixture

BASE = {
    "market": {"n": 2, "horizon": 1.0, "rate": 0.0, "drift": [0.05, 0.06], "vol": [0.2, 0.0, 0.0, 0.3]},
    "utility": {"family": "log"},
    "compress": {"subset": [1]},
    "sim": {"paths": 3000, "steps": 10, "seed": 42},
    "verify": {"compare": [2]},
}


def make_config(**sections):
    data = copy.deepcopy(BASE)
    for name, value in sections.items():
        if value is None:
            data.pop(name, None)
        else:
            data[name] = value
    return data


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="run.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
        return str(path)
    return _write


class TestConfig:
    def test_minimal(self):
        cfg = parse_config("market:\n  n: 1\n  drift: [0.05]\n  vol: [0.2]\n")
        assert cfg.utility is None
        assert cfg.sim.paths == 10000
        market = cfg.build_market()
        assert market.n == 1
        assert market.horizon == 1.0

    def test_wrong_vol_length_names_the_field(self):
        text = "market:\n  n: 2\n  drift: [0.05, 0.06]\n  vol: [0.2, 0.0, 0.3]\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert "market.vol" in exc.value.message
        assert "line 4" in exc.value.message
        assert exc.value.exit_code == 1

    def test_yaml_syntax_error_reports_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("market:\n  n: 2\n  drift: [0.05, 0.06\n")
        assert "invalid YAML at line" in exc.value.message

    def test_unknown_section_and_key(self):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(make_config(extra={"a": 1}))
        assert "extra" in exc.value.message
        with pytest.raises(ConfigError) as exc:
            config_from_dict(make_config(sim={"pathz": 10}))
        assert "sim.pathz" in exc.value.message

    def test_bad_utility_parameter(self):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(make_config(utility={"family": "power", "delta": 2.0}))
        assert exc.value.payload == ("utility", "delta")

    def test_ellipticity_is_checked_at_load(self):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(make_config(market={"n": 2, "drift": [0.05, 0.06], "vol": [0.2, 0.0, 0.0, 0.0]}))
        assert exc.value.payload == ("market",)

    def test_ellipticity_constant_must_be_positive(self):
        market = dict(BASE["market"], c1=0.0)
        with pytest.raises(ConfigError) as exc:
            config_from_dict(make_config(market=market))
        assert exc.value.payload == ("market", "c1")
        assert exc.value.exit_code == 1

    def test_cutoff_steps(self):
        cfg = config_from_dict(make_config(sim={"paths": 10, "cutoff_steps": 0}))
        assert cfg.build_sim(epsilon=0.001).cutoff_steps == 0
        with pytest.raises(ConfigError) as exc:
            config_from_dict(make_config(sim={"paths": 10, "cutoff_steps": -1})).build_sim()
        assert exc.value.payload == ("sim", "cutoff_steps")

    def test_subsets_are_one_based(self):
        cfg = config_from_dict(make_config())
        assert cfg.subset() == (0,)
        assert cfg.compare_subset() == (1,)
        with pytest.raises(ConfigError):
            config_from_dict(make_config(compress={"subset": [3]}))

    def test_per_interval_coefficients(self):
        market = {"n": 1, "grid": [0.0, 0.5, 1.0], "rate": [0.0, 0.01], "drift": [[0.05], [0.08]], "vol": [0.2]}
        params = config_from_dict({"market": market}).build_market()
        np.testing.assert_allclose(params.drift[:, 0], [0.05, 0.08])
        np.testing.assert_allclose(params.vol[:, 0, 0], [0.2, 0.2])

    def test_scenario_overrides(self):
        cfg = config_from_dict({
            "market": {"n": 1, "drift": [0.04], "vol": [0.2]},
            "scenario": [{"probability": 0.5}, {"probability": 0.5, "drift": [0.08]}],
        })
        mix = cfg.build_market()
        assert isinstance(mix, ScenarioMixture)
        assert mix.size == 2

    def test_hash_ignores_threads_and_output(self):
        cfg = config_from_dict(make_config())
        assert cfg.with_overrides(threads=4, out="elsewhere").config_hash() == cfg.config_hash()
        assert cfg.with_overrides(seed=7).config_hash() != cfg.config_hash()
        assert len(cfg.config_hash()) == 16


class TestStore:
    def test_render_table(self):
        assert render_table([{"x": 0.1}], "abc") == "x,config_hash\n0.10000000000000001,abc\n"

    def test_render_json(self):
        assert render_json({"b": np.float64(1.5), "a": np.arange(2)}) == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5\n}\n'

    def test_in_memory_run(self):
        store = InMemoryResultStore()
        cfg = config_from_dict(make_config(compress={"m": 1}))
        result = run_command("select", cfg, store)
        assert store.keys() == ["manifest.json", "selection.csv", "selection.json"]
        assert result.files == store.keys()
        frame = store.read_table("selection.csv")
        assert frame.loc[frame["selected"], "subset"].tolist() == ["{1}"]
        assert store.read("selection.csv").splitlines()[1].endswith("," + cfg.config_hash())
        manifest = json.loads(store.read("manifest.json"))
        assert manifest["command"] == "select"
        store.clear()
        assert store.keys() == []

    def test_unknown_command(self):
        with pytest.raises(ValueError):
            run_command("optimize", config_from_dict(make_config()), InMemoryResultStore())


class TestCommands:
    def test_simulate(self, write_config, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--config", write_config(make_config()), "--out", str(out), "-q"]) == 0
        frame = pd.read_csv(out / "simulate_summary.csv")
        assert list(frame.columns[:3]) == ["t", "z_mean", "z_var"]
        assert {"s1_mean", "s2_var", "x_mean", "wealth_mean", "config_hash"} <= set(frame.columns)
        last = frame.iloc[-1]
        assert last["t"] == 1.0
        assert abs(last["z_mean"] - 1.0) <= 3.0 * np.sqrt(last["z_var"] / 3000)
        assert (out / "simulate.json").exists()
        assert (out / "manifest.json").exists()

    def test_wrong_vol_exits_one(self, write_config, tmp_path, capsys):
        data = make_config(market={"n": 2, "drift": [0.05, 0.06], "vol": [0.2, 0.0, 0.3]})
        assert main(["verify", "--config", write_config(data), "--out", str(tmp_path / "x")]) == 1
        err = capsys.readouterr().err
        assert "ConfigError" in err
        assert "market.vol" in err

    def test_replicate(self, write_config, tmp_path):
        out = tmp_path / "rep"
        assert main(["replicate", "--config", write_config(make_config()), "--out", str(out), "-q"]) == 0
        report = pd.read_csv(out / "replication_report.csv")
        assert report["passed"].all()
        sample = pd.read_csv(out / "strategy_sample.csv")
        assert sorted(sample["path"].unique()) == [0, 1, 2, 3, 4]
        first = sample[sample["t"] == 0.0].iloc[0]
        assert first["pi_1"] == pytest.approx(1.25, rel=1e-12)
        assert first["pi_2"] == 0.0
        assert (sample.loc[sample["t"] == 1.0, "pi_1"] == 0.0).all()

    def test_goal_without_risk_exits_two(self, write_config, tmp_path, capsys):
        data = make_config(
            market={"n": 1, "rate": 0.03, "drift": [0.03], "vol": [0.2]},
            utility={"family": "goal_achieving", "alpha": 2.0},
            compress=None,
            verify=None,
        )
        assert main(["replicate", "--config", write_config(data), "--out", str(tmp_path / "g")]) == 2
        assert "GoalWithZeroRisk" in capsys.readouterr().err

    def test_select(self, write_config, tmp_path):
        for m, expected in ((1, ["{1}"]), (2, ["{1,2}"])):
            out = tmp_path / f"sel{m}"
            data = make_config(compress={"m": m})
            assert main(["select", "--config", write_config(data), "--out", str(out), "-q"]) == 0
            frame = pd.read_csv(out / "selection.csv")
            assert frame.loc[frame["selected"], "subset"].tolist() == expected
            assert len(frame) == (2 if m == 1 else 3)

    def test_verify_passes(self, write_config, tmp_path):
        out = tmp_path / "ver"
        assert main(["verify", "--config", write_config(make_config()), "--out", str(out), "-q"]) == 0
        summary = json.loads((out / "verify_summary.json").read_text())
        assert summary["passed"]
        names = {c["name"] for c in summary["checks"]}
        assert {"martingale_z", "replication", "dominance_gap", "iplus_equality", "iplus_extra_position"} <= names

    def test_compare_must_be_dominated(self, write_config, tmp_path, capsys):
        data = make_config(compress={"subset": [2]}, verify={"compare": [1]})
        out = tmp_path / "rev"
        assert main(["verify", "--config", write_config(data), "--out", str(out)]) == 1
        err = capsys.readouterr().err
        assert "ConfigError" in err
        assert "verify.compare" in err
        assert not (out / "verify_report.csv").exists()

    def test_goal_replication(self, write_config, tmp_path):
        data = make_config(utility={"family": "goal_achieving", "alpha": 2.0}, compress=None, verify=None)
        out = tmp_path / "goal"
        assert main(["replicate", "--config", write_config(data), "--out", str(out), "-q"]) == 0
        report = pd.read_csv(out / "replication_report.csv").set_index("name")
        assert report.loc["replication", "passed"]
        assert json.loads(report.loc["replication", "details"])["mode"] == "rms"

    def test_negative_control_exits_three(self, write_config, tmp_path):
        data = make_config(verify={"negative_control": True})
        out = tmp_path / "neg"
        assert main(["verify", "--config", write_config(data), "--out", str(out), "-q"]) == 3
        summary = json.loads((out / "verify_summary.json").read_text())
        assert "martingale_z" in summary["failed"]

    def test_zero_risk_market_verifies(self, write_config, tmp_path):
        data = make_config(market={"n": 2, "rate": 0.03, "drift": [0.03, 0.03], "vol": [0.2, 0.0, 0.0, 0.3]},
                           compress=None, verify=None)
        assert main(["verify", "--config", write_config(data), "--out", str(tmp_path / "deg"), "-q"]) == 0

    def test_threads_do_not_change_output(self, write_config, tmp_path):
        path = write_config(make_config())
        a, b = tmp_path / "t1", tmp_path / "t4"
        assert main(["verify", "--config", path, "--out", str(a), "--threads", "1", "-q"]) == 0
        assert main(["verify", "--config", path, "--out", str(b), "--threads", "4", "-q"]) == 0
        for name in ("verify_report.csv", "verify_summary.json", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
