import numpy as np
import pytest
import yaml

from hjbsolve.cli import (
    EXIT_BAD_CONFIG,
    EXIT_OK,
    ConfigError,
    main,
    run_config,
)


def write_config(tmp_path, cfg, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


class TestConfigValidation:
    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config({"command": "exact", "bogus": 1}, str(tmp_path))

    def test_unknown_command(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config({"command": "frobnicate"}, str(tmp_path))

    def test_unknown_parameter(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config(
                {"command": "exact", "parameters": {"a": 1.0, "nope": 2}}, str(tmp_path)
            )

    def test_non_numeric_parameter(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config({"command": "exact", "parameters": {"a": "one"}}, str(tmp_path))

    def test_bad_seed(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config({"command": "exact", "seed": "abc"}, str(tmp_path))

    def test_main_returns_1_on_bad_config(self, tmp_path):
        cfg = write_config(tmp_path, {"command": "nope"})
        assert main(["--config", cfg, "--output", str(tmp_path / "o")]) == EXIT_BAD_CONFIG

    def test_main_returns_1_on_missing_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.yaml")]) == EXIT_BAD_CONFIG


class TestExactCommand:
    def test_summary_metrics(self, tmp_path):
        code = run_config(
            {"command": "exact", "parameters": {"a": 1.0, "b": 0.0, "N": 2}},
            str(tmp_path),
            quiet=True,
        )
        assert code == EXIT_OK
        summary = (tmp_path / "summary.txt").read_text().splitlines()
        kv = dict(line.split("=", 1) for line in summary)
        assert float(kv["A"]) == pytest.approx(0.5)
        assert float(kv["B"]) == pytest.approx(1.0)
        assert kv["status"] == "ok"


class TestRadialCommand:
    def test_csv_schema(self, tmp_path):
        code = run_config(
            {"command": "radial", "parameters": {"N": 2, "m": 200}},
            str(tmp_path),
            quiet=True,
        )
        assert code == EXIT_OK
        lines = (tmp_path / "radial.csv").read_text().splitlines()
        assert lines[0] == "r,u,s,upp,residual"
        assert len(lines) == 201

    def test_multiple_dimensions(self, tmp_path):
        run_config(
            {"command": "radial", "parameters": {"N": [1, 2], "m": 200}},
            str(tmp_path),
            quiet=True,
        )
        assert (tmp_path / "radial_N1.csv").exists()
        assert (tmp_path / "radial_N2.csv").exists()


class TestMonotoneCommand:
    def test_convergence_csv(self, tmp_path):
        code = run_config(
            {
                "command": "monotone",
                "parameters": {"radii": [4.0, 6.0], "eps_schedule": [0.5, 1 / 3], "m": 300},
            },
            str(tmp_path),
            quiet=True,
        )
        # two balls leave too few points for the rate fit; csv still written
        lines = (tmp_path / "convergence.csv").read_text().splitlines()
        assert lines[0] == "R_n,eps_n,error,min_monotone_gap"
        assert len(lines) == 3


class TestSimulateCommand:
    def _cfg(self, seed=3):
        return {
            "command": "simulate",
            "seed": seed,
            "parameters": {"T": 10.0, "dt": 0.01, "n_paths": 200, "paths_stored": 3},
        }

    def test_paths_and_estimates(self, tmp_path):
        code = run_config(self._cfg(), str(tmp_path), quiet=True)
        assert code == EXIT_OK
        paths = (tmp_path / "paths.csv").read_text().splitlines()
        assert paths[0] == "t,path_id,x1,regime"
        est = (tmp_path / "estimates.csv").read_text().splitlines()
        assert est[0] == "name,mean,std_error,n"
        assert est[1].startswith("mean_sq,")

    def test_byte_identical_reruns(self, tmp_path):
        run_config(self._cfg(), str(tmp_path / "a"), quiet=True)
        run_config(self._cfg(), str(tmp_path / "b"), quiet=True)
        for name in ("paths.csv", "estimates.csv", "summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        run_config(self._cfg(), str(tmp_path / "a"), quiet=True)
        run_config(self._cfg(), str(tmp_path / "b"), seed_override=4, quiet=True)
        assert (tmp_path / "a" / "paths.csv").read_bytes() != (
            tmp_path / "b" / "paths.csv"
        ).read_bytes()


class TestRegimeCommand:
    def test_defaults_run(self, tmp_path):
        code = run_config(
            {"command": "regime", "parameters": {"T": 5.0, "n_paths": 20, "paths_stored": 2}},
            str(tmp_path),
            quiet=True,
        )
        assert code == EXIT_OK
        est = (tmp_path / "estimates.csv").read_text().splitlines()
        names = [line.split(",")[0] for line in est[1:]]
        assert "beta_1" in names and "eta_2" in names and "occupation_1" in names
        paths = (tmp_path / "paths.csv").read_text().splitlines()
        assert paths[0] == "t,path_id,x1,x2,regime"
        # regime column populated with 1-based labels
        assert paths[1].rstrip().endswith(("1", "2"))

    def test_invalid_model_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config(
                {"command": "regime", "parameters": {"delta": [0.0, 1.0]}},
                str(tmp_path),
                quiet=True,
            )


class TestVerifyCommand:
    def test_small_run_passes(self, tmp_path):
        code = run_config(
            {"command": "verify", "seed": 5, "parameters": {"n_paths": 3000, "dt": 0.01}},
            str(tmp_path),
            quiet=True,
        )
        assert code == EXIT_OK
        kv = dict(
            line.split("=", 1) for line in (tmp_path / "summary.txt").read_text().splitlines()
        )
        assert kv["pass"] == "1"
        assert float(kv["u_exact"]) == pytest.approx(0.5)
