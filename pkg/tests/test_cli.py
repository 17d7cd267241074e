"""CLI behavior: presets, config merge, overrides, exit codes."""

import json

import pytest
import yaml

from adanudge.cli import main
from adanudge.harness import read_csv


def run_cli(args):
    return main(args)


class TestRunSubcommands:
    def test_twin_decay_with_overrides(self, tmp_path, capsys):
        out = tmp_path / "decay.csv"
        code = run_cli([
            "twin-decay", "--dt", "0.01", "--out", str(out),
        ])
        assert code == 0
        recs = read_csv(out)
        assert recs[0].t == 0.0
        assert recs[-1].t == pytest.approx(1.0)
        assert (tmp_path / "decay.csv.report.json").exists()
        report = json.loads((tmp_path / "decay.csv.report.json").read_text())
        assert report["conditions"]["h_ok"] is True
        assert "fitted error decay rate" in capsys.readouterr().out

    def test_config_file_merge_and_flag_overrides(self, tmp_path):
        conf_file = tmp_path / "conf.yaml"
        conf_file.write_text(yaml.safe_dump({
            "t_final": 0.1,
            "grid_n": 32,
            "truth": {"kind": "dns", "grid_n_fine": 32},
            "model": {"kind": "kolmogorov", "k_f": 4},
            "observer": {"kind": "fourier", "cutoff": 10},
        }))
        out = tmp_path / "sat.csv"
        code = run_cli([
            "saturate", "--config", str(conf_file), "--dt", "0.01",
            "--nu", "0.05", "--controller", "constant", "--chi0", "500",
            "--observer-k", "9", "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        recs = read_csv(out)
        assert len(recs) == 11  # 0.1 / 0.01 steps plus the initial row
        assert all(r.chi == 500.0 for r in recs)

    def test_bad_config_returns_1(self, tmp_path):
        conf_file = tmp_path / "conf.yaml"
        conf_file.write_text(yaml.safe_dump({"grid_n": 7}))
        assert run_cli(["twin-decay", "--config", str(conf_file)]) == 1

    def test_unwritable_output_returns_3(self, tmp_path):
        code = run_cli([
            "twin-decay", "--dt", "0.1",
            "--out", str(tmp_path / "missing" / "dir" / "x.csv"),
        ])
        assert code == 3

    def test_numerical_blowup_returns_2(self, tmp_path):
        conf_file = tmp_path / "conf.yaml"
        # gigantic dt with strong forcing destabilizes the explicit advection
        conf_file.write_text(yaml.safe_dump({
            "nu": 1e-9,
            "dt": 10.0,
            "t_final": 1000.0,
            "model": {"kind": "kolmogorov", "k_f": 4, "amplitude": 100.0, "ramp": 0.01},
            "truth": {"kind": "dns", "grid_n_fine": 32, "perturb_amplitude": 1.0},
            "grid_n": 32,
        }))
        code = run_cli([
            "saturate", "--config", str(conf_file),
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 2

    def test_usage_error_returns_1(self):
        assert run_cli(["no-such-command"]) == 1


class TestConvergeSubcommand:
    def test_small_convergence_table(self, tmp_path, capsys):
        conf_file = tmp_path / "conf.yaml"
        conf_file.write_text(yaml.safe_dump({
            "grid_n": 32,
            "t_final": 0.5,
            "dt_list": [0.25, 0.125],
            "observer": {"kind": "fourier", "cutoff": 10},
        }))
        out = tmp_path / "rows.csv"
        code = run_cli(["converge", "--config", str(conf_file), "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "dt,final_err,rate,chi_max"
        assert len(lines) == 3
        # first row has an empty rate cell
        assert lines[1].split(",")[2] == ""
        assert "rate" in capsys.readouterr().out


class TestConditionsSubcommand:
    def test_prints_report(self, tmp_path, capsys):
        conf_file = tmp_path / "scales.yaml"
        conf_file.write_text(yaml.safe_dump({
            "L": 1.0, "U": 1.0, "nu": 0.01, "kf": 1.0, "dim": 2,
            "chi": 40.0, "chi0": 1.0, "H": 0.009947, "c1": 1.0,
            "avg_grad_sq": 0.2,
        }))
        code = run_cli(["conditions", "--config", str(conf_file)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["re"] == pytest.approx(100.0)
        assert payload["recommendations"]["chi_tstar_min"] == pytest.approx(2000.0)
        assert payload["h_condition"]["ok"] is True
        assert payload["chi_condition_2d"]["ok"] is True

    def test_missing_scales_is_config_error(self):
        assert run_cli(["conditions"]) == 1
