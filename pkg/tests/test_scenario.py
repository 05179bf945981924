import json
from pathlib import Path

import pytest

from adiabat.cli import main as cli_main
from adiabat.errors import ConfigError
from adiabat.runner import run_scenario_file, run_suite
from adiabat.scenario import parse_scenario
from adiabat.spectra import PowerLaw

MINIMAL = """
[scenario]
experiment = continuum_advect

[spectrum]
family = power_law
c = 1.0
kappa = 2.0
eta = 1.0

[initial]
kind = canonical
t0 = 1.0

[sweep]
a_start = 1.0
a_end = 2.0
"""

SWEEP_CFG = """
[scenario]
name = mini_sweep
experiment = discrete_sweep

[spectrum]
family = oscillator_ladder
levels = 4
modes = 1

[initial]
kind = canonical
t0 = 1.0

[sweep]
a_start = 0.5
a_end = 2.0
"""


def code_of(err: ConfigError) -> str:
    return err.code


class TestParse:
    def test_minimal_config_fills_defaults(self):
        s = parse_scenario(MINIMAL, fallback_name="mini")
        assert s.name == "mini"
        assert s.experiment == "continuum_advect"
        assert isinstance(s.spectrum, PowerLaw)
        assert s.numerics.grid_nodes == 2048
        assert s.numerics.ode_rel_tol == 1e-10
        assert s.checkpoints == ()
        assert s.out_dir == "mini"

    def test_equal_endpoints_rejected(self):
        bad = MINIMAL.replace("a_end = 2.0", "a_end = 1.0")
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        assert err.value.code == "constraint"
        assert "a_start" in str(err.value)

    def test_unknown_experiment(self):
        bad = MINIMAL.replace("continuum_advect", "teleport")
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        assert err.value.code == "unknown-experiment"

    def test_missing_required_key(self):
        bad = MINIMAL.replace("t0 = 1.0", "")
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        assert err.value.code == "missing-key"

    def test_unknown_key_rejected(self):
        bad = MINIMAL + "\nwarp = 9\n"
        with pytest.raises(ConfigError):
            parse_scenario(bad)

    def test_checkpoint_outside_sweep(self):
        bad = MINIMAL + "checkpoints = 0.2\n"
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        assert err.value.code == "constraint"

    def test_custom_table_must_normalize(self):
        cfg = """
[scenario]
experiment = discrete_sweep

[spectrum]
family = linear_ensemble
intercepts = 0.0, 1.0
slopes = 1.0, 0.0

[initial]
kind = custom_table
w = 0.9, 0.5

[sweep]
a_start = 0.0
a_end = 2.0
"""
        with pytest.raises(ConfigError) as err:
            parse_scenario(cfg)
        assert err.value.code == "constraint"
        assert "sum" in str(err.value)

    def test_bad_number(self):
        bad = MINIMAL.replace("kappa = 2.0", "kappa = banana")
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        assert err.value.code == "bad-value"

    def test_experiment_family_compatibility(self):
        bad = MINIMAL.replace("continuum_advect", "discrete_sweep")
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        assert err.value.code == "constraint"


class TestRun:
    def test_no_crossing_sweep_reports_zero(self, tmp_path):
        cfg = tmp_path / "mini_sweep.ini"
        cfg.write_text(SWEEP_CFG)
        run_scenario_file(cfg, tmp_path / "out")
        summary = json.loads((tmp_path / "out/mini_sweep/summary.json").read_text())
        assert summary["total_delta_s"] == 0.0
        assert summary["n_events"] == 0

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = tmp_path / "mini_sweep.ini"
        cfg.write_text(SWEEP_CFG)
        m1 = run_scenario_file(cfg, tmp_path / "o1")
        m2 = run_scenario_file(cfg, tmp_path / "o2")
        assert m1.files == m2.files
        for name in m1.files:
            b1 = (tmp_path / "o1/mini_sweep" / name).read_bytes()
            b2 = (tmp_path / "o2/mini_sweep" / name).read_bytes()
            assert b1 == b2

    def test_power_law_compare_energy_columns_match(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(MINIMAL.replace("continuum_advect", "compare"))
        run_scenario_file(cfg, tmp_path / "out")
        summary = json.loads((tmp_path / "out/c/summary.json").read_text())
        assert summary["max_mean_energy_gap_rel"] < 1e-8

    def test_distribution_files_written(self, tmp_path):
        cfg = tmp_path / "adv.ini"
        cfg.write_text(MINIMAL + "checkpoints = 1.0, 1.5, 2.0\n")
        run_scenario_file(cfg, tmp_path / "out")
        names = {p.name for p in (tmp_path / "out/adv").iterdir()}
        assert {"distribution_1.csv", "distribution_1p5.csv",
                "distribution_2.csv", "trajectory.csv",
                "summary.json", "manifest.json"} <= names
        header = (tmp_path / "out/adv/distribution_1p5.csv").read_text().splitlines()[0]
        assert header == "epsilon,G,w"

    def test_manifest_lists_every_data_file(self, tmp_path):
        cfg = tmp_path / "adv.ini"
        cfg.write_text(MINIMAL)
        manifest = run_scenario_file(cfg, tmp_path / "out")
        out = tmp_path / "out/adv"
        data_files = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert set(manifest.files) == data_files


class TestSuite:
    def _write_three(self, tmp_path):
        good = MINIMAL.replace("experiment = continuum_advect",
                               "experiment = continuum_advect")
        (tmp_path / "a.ini").write_text(good)
        (tmp_path / "b.ini").write_text(SWEEP_CFG.replace("mini_sweep", "b_sweep"))
        broken = MINIMAL.replace("a_end = 2.0", "a_end = 0.0002")
        # a_end below support start of nothing; force a runtime failure via
        # an impossible temperature instead
        broken = MINIMAL.replace("t0 = 1.0", "t0 = 1e-300")
        (tmp_path / "c.ini").write_text(broken)
        return [tmp_path / n for n in ("a.ini", "b.ini", "c.ini")]

    def test_failure_isolation_and_exit(self, tmp_path):
        paths = self._write_three(tmp_path)
        results, any_failed = run_suite(paths, tmp_path / "out", jobs=1)
        assert any_failed
        statuses = {r["name"]: r["status"] for r in results}
        assert statuses["a"] == "ok"
        assert statuses["b_sweep"] == "ok"
        assert [r["status"] for r in results].count("error") == 1
        index = json.loads((tmp_path / "out/index.json").read_text())
        assert len(index["scenarios"]) == 3

    def test_parallel_matches_serial(self, tmp_path):
        cfgs = []
        for name in ("s1", "s2", "s3", "s4"):
            text = SWEEP_CFG.replace("mini_sweep", name)
            p = tmp_path / f"{name}.ini"
            p.write_text(text)
            cfgs.append(p)
        r1, f1 = run_suite(cfgs, tmp_path / "serial", jobs=1)
        r2, f2 = run_suite(cfgs, tmp_path / "par", jobs=4)
        assert not f1 and not f2
        for a, b in zip(r1, r2):
            assert a["manifest"]["files"] == b["manifest"]["files"]

    def test_shared_output_directory_rejected(self, tmp_path):
        p1 = tmp_path / "x.ini"
        p2 = tmp_path / "y.ini"
        shared = SWEEP_CFG + "\n[output]\ndir = same\n"
        p1.write_text(shared)
        p2.write_text(shared.replace("mini_sweep", "other"))
        with pytest.raises(ConfigError):
            run_suite([p1, p2], tmp_path / "out")


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        cfg = tmp_path / "v.ini"
        cfg.write_text(MINIMAL)
        assert cli_main(["validate", str(cfg)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_config_error_exit_2(self, tmp_path):
        cfg = tmp_path / "v.ini"
        cfg.write_text(MINIMAL.replace("a_end = 2.0", "a_end = 1.0"))
        assert cli_main(["validate", str(cfg)]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert cli_main(["validate", str(tmp_path / "nope.ini")]) == 2

    def test_run_numerical_failure_exit_3(self, tmp_path):
        cfg = tmp_path / "r.ini"
        cfg.write_text(MINIMAL.replace("t0 = 1.0", "t0 = 1e-300"))
        assert cli_main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 3

    def test_run_and_suite_exit_0(self, tmp_path):
        cfg = tmp_path / "ok.ini"
        cfg.write_text(SWEEP_CFG)
        assert cli_main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
        assert cli_main(["suite", str(tmp_path), "--out", str(tmp_path / "sout")]) == 0

    def test_env_output_root(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("ADIABAT_OUT", str(tmp_path / "envroot"))
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "e.ini"
        cfg.write_text(SWEEP_CFG)
        assert cli_main(["run", str(cfg)]) == 0
        assert (tmp_path / "envroot/mini_sweep/summary.json").exists()
