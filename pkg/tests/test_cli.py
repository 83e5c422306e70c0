import json
import math

import numpy as np
import pytest

from ntkinfo.cli import (
    ConfigError,
    ExperimentConfig,
    MetricConfig,
    TauGridConfig,
    TaskConfig,
    VerifyConfig,
    build_task,
    compute_trajectories,
    config_from_dict,
    load_config,
    main,
    run_sweep,
    write_frontier,
)
from ntkinfo.info_metrics import TRAJECTORY_COLUMNS
from ntkinfo import exact_mi, gib_frontier


def small_config_dict(out_dir, **overrides):
    cfg = {
        "seed": 0,
        "task": {"n_train": 48, "n_test": 48},
        "arch": {"depth": 2, "activation": "erf", "bias_variance": 0.01},
        "weight_variance_grid": [0.5, 2.0],
        "tau": {"minimum": 1e-2, "maximum": 1e4, "num": 7},
        "metrics": {"batch_size": 48, "mc_samples": 4},
        "output_dir": str(out_dir),
    }
    cfg.update(overrides)
    return cfg


@pytest.fixture()
def small_sweep(tmp_path):
    cfg = config_from_dict(small_config_dict(tmp_path / "out"))
    manifest = run_sweep(cfg)
    return cfg, manifest, tmp_path / "out"


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


class TestConfig:
    def test_defaults_materialize(self):
        cfg = ExperimentConfig()
        data = cfg.materialized()
        assert data["tau"]["num"] == 120
        assert data["metrics"]["batch_size"] == 1000
        assert config_from_dict(data) == cfg

    def test_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown"):
            config_from_dict({"sweeps": 3})
        with pytest.raises(ConfigError, match="bad keys"):
            config_from_dict({"task": {"n_points": 3}})

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            config_from_dict({"weight_variance_grid": []})
        with pytest.raises(ConfigError):
            config_from_dict({"weight_variance_grid": [0.0]})
        with pytest.raises(ConfigError):
            config_from_dict({"tau": {"minimum": 1.0, "maximum": 1.0, "num": 5}})
        with pytest.raises(ConfigError):
            config_from_dict(
                {"metrics": {"batch_size": 64}, "task": {"n_train": 8, "n_test": 8}}
            )

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="valid JSON"):
            load_config(bad)

    def test_env_seed_override(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 1}))
        monkeypatch.setenv("NTKINFO_SEED", "42")
        assert load_config(path).seed == 42
        monkeypatch.setenv("NTKINFO_SEED", "not-a-number")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_main_exit_code_on_config_error(self, tmp_path, capsys):
        assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 1
        assert "config error" in capsys.readouterr().err


class TestSweep:
    def test_files_and_schema(self, small_sweep):
        cfg, manifest, out = small_sweep
        assert sorted(manifest["files"].values()) == [
            "trajectory_wv0.5.csv",
            "trajectory_wv2.csv",
        ]
        for name in manifest["files"].values():
            header, rows = read_csv(out / name)
            assert header == list(TRAJECTORY_COLUMNS)
            assert len(rows) == 7

    def test_floats_round_trip_17_digits(self, small_sweep):
        cfg, manifest, out = small_sweep
        name = next(iter(manifest["files"].values()))
        header, rows = read_csv(out / name)
        for row in rows:
            for text in row[:-1]:
                value = float(text)
                assert format(value, ".17g") == text

    def test_fisher_column_constant_and_matches_manifest(self, small_sweep):
        cfg, manifest, out = small_sweep
        col = TRAJECTORY_COLUMNS.index("fisher_trace")
        for key, name in manifest["files"].items():
            _, rows = read_csv(out / name)
            values = {row[col] for row in rows}
            assert len(values) == 1
            assert float(values.pop()) == manifest["fisher_trace"][key]

    def test_row_invariants(self, small_sweep):
        cfg, manifest, out = small_sweep
        idx = {name: i for i, name in enumerate(TRAJECTORY_COLUMNS)}
        cap = math.log(cfg.metrics.batch_size)
        for name in manifest["files"].values():
            _, rows = read_csv(out / name)
            taus = [float(r[idx["tau"]]) for r in rows]
            assert taus == sorted(taus)
            for row in rows:
                assert float(row[idx["izx_lower"]]) <= float(row[idx["izx_upper"]]) + 1e-9
                assert float(row[idx["izx_lower"]]) <= cap + 1e-12
                assert float(row[idx["izd_upper"]]) >= 0.0
                int(row[idx["degeneracy_flags"]])

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg1 = config_from_dict(small_config_dict(tmp_path / "a"))
        cfg2 = config_from_dict(small_config_dict(tmp_path / "b"))
        m1, m2 = run_sweep(cfg1), run_sweep(cfg2)
        for name in m1["files"].values():
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert m1["config_sha256"] == m2["config_sha256"]

    def test_parallel_matches_serial(self, tmp_path):
        cfg1 = config_from_dict(small_config_dict(tmp_path / "serial"))
        cfg2 = config_from_dict(small_config_dict(tmp_path / "parallel"))
        m1 = run_sweep(cfg1, jobs=1)
        run_sweep(cfg2, jobs=2)
        for name in m1["files"].values():
            assert (tmp_path / "serial" / name).read_bytes() == (
                tmp_path / "parallel" / name
            ).read_bytes()

    def test_single_variance_three_taus(self, tmp_path):
        cfg = config_from_dict(
            small_config_dict(
                tmp_path / "out",
                weight_variance_grid=[0.25],
                tau={"minimum": 1e-1, "maximum": 1e1, "num": 3},
            )
        )
        manifest = run_sweep(cfg)
        assert list(manifest["files"].values()) == ["trajectory_wv0.25.csv"]
        header, rows = read_csv(tmp_path / "out" / "trajectory_wv0.25.csv")
        assert len(rows) == 3

    def test_emit_verify_writes_report(self, tmp_path):
        cfg = config_from_dict(
            small_config_dict(
                tmp_path / "out",
                emit_verify=True,
                verify={
                    "width": 128,
                    "n_networks": 10,
                    "nngp_heads": 64,
                    "ntk_heads": 16,
                    "n_points": 4,
                    "ensemble_draws": 20000,
                    "kernel_rtol": 0.25,
                },
            )
        )
        manifest = run_sweep(cfg)
        assert manifest["verification"]["all_passed"]
        report = json.loads((tmp_path / "out" / "verify_report.json").read_text())
        assert {c["name"] for c in report["checks"]} >= {"kernel_oracle", "derivative_fd"}

    def test_manifest_contents(self, small_sweep):
        cfg, manifest, out = small_sweep
        task = build_task(cfg)
        assert manifest["exact_mi"] == exact_mi(task)
        front = manifest["gib_frontier"]
        expected = gib_frontier(task, np.asarray(front["izx"]))
        np.testing.assert_allclose(front["izy"], expected, atol=1e-12)
        assert json.loads((out / "manifest.json").read_text()) == manifest


class TestFrontierCommand:
    def test_table_written_and_monotone(self, tmp_path):
        cfg = config_from_dict(small_config_dict(tmp_path / "out"))
        path = write_frontier(cfg, tmp_path / "out")
        header, rows = read_csv(path)
        assert header == ["izx", "izy"]
        izy = [float(r[1]) for r in rows]
        assert izy == sorted(izy)
        assert izy[-1] <= exact_mi(build_task(cfg)) + 1e-12


class TestMainEntry:
    def test_sweep_and_verify_roundtrip(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps(
                small_config_dict(
                    tmp_path / "out",
                    verify={
                        "width": 128,
                        "n_networks": 12,
                        "nngp_heads": 64,
                        "ntk_heads": 16,
                        "n_points": 5,
                        "ensemble_draws": 20000,
                        "kernel_rtol": 0.2,
                    },
                )
            )
        )
        assert main(["sweep", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "out" / "manifest.json").exists()
        assert main(["frontier", "--config", str(cfg_path)]) == 0
        assert main(["verify", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        assert "PASS kernel_oracle" in out

    def test_verify_failure_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps(
                small_config_dict(
                    tmp_path / "out",
                    verify={
                        "width": 64,
                        "n_networks": 2,
                        "nngp_heads": 8,
                        "ntk_heads": 2,
                        "n_points": 4,
                        "ensemble_draws": 1000,
                        "kernel_rtol": 1e-6,  # unattainable at this scale
                    },
                )
            )
        )
        assert main(["verify", "--config", str(cfg_path)]) == 2
        assert "FAIL kernel_oracle" in capsys.readouterr().out

    def test_out_flag_overrides_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(small_config_dict(tmp_path / "ignored")))
        override = tmp_path / "actual"
        assert main(["sweep", "--config", str(cfg_path), "--out", str(override)]) == 0
        assert (override / "manifest.json").exists()
        assert not (tmp_path / "ignored").exists()
