import csv
import io
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from elemtcl import cli
from elemtcl.config import RunConfig, dump_config, figure_config, parse_config
from elemtcl.errors import ConfigError, DivergenceError

FIG1_TEXT = """\
# reference figure 1
model = single_qubit
lambda = 1
omega_c = 10
omega0 = 2
beta = 0.3
restart_step = 0.05
t_final = 5
"""

FIG2_TEXT = FIG1_TEXT.replace("single_qubit", "two_qubit") + "v = 0.6\nalpha1 = 0.4+0.3i\nalpha2 = 0.5+0.2i\n"

SMALL = """\
model = single_qubit
solver = compare_all
lambda = 1
omega_c = 10
omega0 = 2
beta = 0.3
restart_step = 0.1
t_final = 0.5
"""


class TestParse:
    def test_fig1_preset(self):
        cfg = parse_config(FIG1_TEXT)
        assert cfg.model == "single_qubit" and cfg.solver == "compare_all"
        assert cfg.dt == pytest.approx(0.005)
        assert cfg.dt_kernel == pytest.approx(0.01)
        assert cfg.renormalize_trace is False and cfg.initial_state == "excited"

    def test_fig2_preset(self):
        cfg = parse_config(FIG2_TEXT)
        assert cfg.alpha1 == 0.4 + 0.3j and cfg.alpha2 == 0.5 + 0.2j and cfg.v == 0.6

    def test_matches_builtin_figures(self):
        assert parse_config(FIG1_TEXT + "dt_kernel = 0.01\n") == replace(figure_config(1), output_path="trajectory.csv")
        assert parse_config(FIG2_TEXT + "dt_kernel = 0.01\n") == replace(figure_config(2), output_path="trajectory.csv")

    def test_split_alpha(self):
        text = FIG1_TEXT.replace("single_qubit", "two_qubit") + (
            "v = 0.6\nalpha1_re = 0.4\nalpha1_im = 0.3\nalpha2 = 0.5+0.2j\n")
        assert parse_config(text).alpha1 == 0.4 + 0.3j

    def test_lambda_rescales_kernel_step(self):
        cfg = parse_config(FIG1_TEXT.replace("lambda = 1", "lambda = 2"))
        assert cfg.dt_kernel == pytest.approx(0.005)

    def test_custom_state(self):
        cfg = parse_config(FIG1_TEXT + "initial_state = custom\ninitial_elements = 0.6, 0.1+0.2i\n")
        rho = cli.initial_state(cfg).matrix
        np.testing.assert_allclose(rho, [[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])

    def test_comments_and_blank_lines(self):
        assert parse_config("\n\n" + FIG1_TEXT.replace("beta = 0.3", "beta = 0.3   # inverse temperature"))

    @pytest.mark.parametrize("extra, line, key", [
        ("dt = 0.04\n", 9, "dt"),
        ("colour = red\n", 9, "colour"),
        ("beta = 1\n", 9, "beta"),
        ("solver = euler\n", 9, "solver"),
        ("v = 0.5\n", 9, "v"),
        ("renormalize_trace = maybe\n", 9, "renormalize_trace"),
        ("initial_state = custom\n", 9, "initial_elements"),
    ])
    def test_errors_name_line_and_key(self, extra, line, key):
        with pytest.raises(ConfigError) as info:
            parse_config(FIG1_TEXT + extra)
        assert info.value.key == key
        if key != "initial_elements":
            assert info.value.line == line
        assert f"key '{key}'" in str(info.value)

    def test_malformed_value(self):
        with pytest.raises(ConfigError, match="line 5, key 'omega0'"):
            parse_config(FIG1_TEXT.replace("omega0 = 2", "omega0 = two"))

    def test_non_positive_lambda(self):
        with pytest.raises(ConfigError) as info:
            parse_config(FIG1_TEXT.replace("lambda = 1", "lambda = 0"))
        assert info.value.key == "lambda" and info.value.line == 3

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="beta"):
            parse_config(FIG1_TEXT.replace("beta = 0.3\n", ""))

    def test_two_qubit_requires_parameters(self):
        with pytest.raises(ConfigError, match="alpha2"):
            parse_config(FIG1_TEXT.replace("single_qubit", "two_qubit") + "v = 0.6\nalpha1 = 1\n")

    def test_non_tiling_final_time(self):
        with pytest.raises(ConfigError) as info:
            parse_config(FIG1_TEXT.replace("t_final = 5", "t_final = 5.01"))
        assert info.value.key == "t_final"

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("model = single_qubit\nlambda 1\n")

    def test_case_sensitive_keys(self):
        with pytest.raises(ConfigError, match="Lambda"):
            parse_config(FIG1_TEXT.replace("lambda", "Lambda"))


class TestDump:
    @pytest.mark.parametrize("text", [
        FIG1_TEXT,
        FIG2_TEXT,
        FIG1_TEXT + "initial_state = custom\ninitial_elements = 0.6, 0.1+0.2i\nrenormalize_trace = true\n",
        FIG1_TEXT + "dt = 0.001\ndt_kernel = 0.0007\noutput_path = out/x.csv\n",
    ])
    def test_round_trip(self, text):
        cfg = parse_config(text)
        assert parse_config(dump_config(cfg)) == cfg

    def test_negative_imaginary(self):
        cfg = parse_config(FIG2_TEXT.replace("0.5+0.2i", "0.5-0.2i"))
        assert parse_config(dump_config(cfg)).alpha2 == 0.5 - 0.2j

    def test_cli_flag(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text(FIG2_TEXT)
        assert cli.main(["run", str(path), "--dump-config"]) == 0
        assert parse_config(capsys.readouterr().out) == parse_config(FIG2_TEXT)


def test_kernel_step_aligns_with_rk4_stages():
    cfg = parse_config(FIG1_TEXT + "dt_kernel = 0.003\n")
    h = cli.kernel_step(cfg)
    assert h <= 0.003
    ratio = (cfg.dt / 2) / h
    assert ratio == pytest.approx(round(ratio), abs=1e-9)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRun:
    def test_single_solver_csv(self, tmp_path, capsys):
        cfg = parse_config(SMALL.replace("compare_all", "traditional") + f"output_path = {tmp_path / 'a.csv'}\n")
        written = cli.execute(cfg)
        rows = _read(written["traditional"])
        assert rows[0] == ["t", "rho_11_re", "rho_11_im", "rho_21_re", "rho_21_im", "raw_trace_re", "raw_trace_im"]
        assert len(rows) == 1 + 6
        assert float(rows[1][1]) == 1.0
        assert capsys.readouterr().out == ""

    def test_two_qubit_header(self):
        head = cli.trajectory_header(4)
        assert head[1:7] == ["rho_11_re", "rho_11_im", "rho_22_re", "rho_22_im", "rho_33_re", "rho_33_im"]
        assert head[7] == "rho_21_re" and head[-3] == "rho_43_im"
        assert len(head) == 1 + 2 * 9 + 2

    def test_compare_all(self, tmp_path):
        cfg = parse_config(SMALL + f"output_path = {tmp_path / 'run.csv'}\n")
        out = io.StringIO()
        written = cli.execute(cfg, out)
        assert set(written) == {"traditional", "element_iterative", "markov", "markov_iterative", "compare"}
        line = out.getvalue().strip()
        assert line.startswith("max_abs_deviation=")
        report = _read(written["compare"])
        assert report[0] == ["quantity", "max_abs_deviation", "final_abs_deviation"]
        assert float(line.split("=")[1]) == max(float(r[1]) for r in report[1:3])
        assert report[3][0] == "raw_trace_drift_traditional"
        # the traditional solver keeps the trace to rounding
        assert float(report[3][1]) < 1e-12

    def test_no_coupling_rows_are_constant(self, tmp_path):
        text = FIG2_TEXT.replace("t_final = 5", "t_final = 0.5").replace("0.4+0.3i", "0").replace("0.5+0.2i", "0")
        cfg = parse_config(text + f"solver = traditional\noutput_path = {tmp_path / 'z.csv'}\n")
        rows = _read(cli.execute(cfg)["traditional"])
        assert all(r[1:] == rows[1][1:] for r in rows[2:])

    def test_deterministic(self, tmp_path):
        paths = []
        for k in range(2):
            d = tmp_path / str(k)
            d.mkdir()
            cli.execute(parse_config(SMALL + f"output_path = {d / 'r.csv'}\n"), io.StringIO())
            paths.append(d)
        for name in ("r_traditional.csv", "r_element_iterative.csv", "r_compare.csv"):
            assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()


class TestExitCodes:
    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text(FIG1_TEXT + "dt = 0.04\n")
        assert cli.main(["run", str(path)]) == 2
        err = capsys.readouterr().err.strip()
        assert err.startswith("error=parse:") and "line 9" in err and "'dt'" in err
        assert "\n" not in err

    def test_missing_output_directory(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text(SMALL + f"output_path = {tmp_path / 'nope' / 'r.csv'}\n")
        assert cli.main(["run", str(path)]) == 4
        assert capsys.readouterr().err.startswith("error=io:")

    def test_missing_config(self, tmp_path, capsys):
        assert cli.main(["run", str(tmp_path / "absent.cfg")]) == 4
        assert capsys.readouterr().err.startswith("error=io:")

    def test_figure_missing_directory(self, tmp_path, capsys):
        assert cli.main(["fig1", "--out", str(tmp_path / "nope")]) == 4
        assert "error=io:" in capsys.readouterr().err

    def test_solver_error(self, tmp_path, capsys, monkeypatch):
        def boom(cfg):
            raise DivergenceError("non-finite state at t=0.3", time=0.3)

        monkeypatch.setattr(cli, "run_solvers", boom)
        path = tmp_path / "c.cfg"
        path.write_text(SMALL + f"output_path = {tmp_path / 'r.csv'}\n")
        assert cli.main(["run", str(path)]) == 3
        assert capsys.readouterr().err.strip() == "error=solver:non-finite state at t=0.3"


class TestSubcommands:
    def test_kernels(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text(SMALL)
        out = tmp_path / "k.csv"
        assert cli.main(["kernels", str(path), "--out", str(out)]) == 0
        rows = _read(out)
        assert rows[0][:3] == ["t", "f_plus", "f_minus"]
        assert len(rows) == 1 + 51
        assert float(rows[1][1]) == 0.0

    def test_fig1_small_step(self, tmp_path, capsys):
        assert cli.main(["fig1", "--out", str(tmp_path), "--restart-step", "0.1"]) == 0
        assert capsys.readouterr().out.startswith("max_abs_deviation=")
        assert (tmp_path / "fig1_compare.csv").exists()
        assert len(_read(tmp_path / "fig1_traditional.csv")) == 1 + 51

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "elemtcl", "run", str(tmp_path / "x.cfg")],
                              capture_output=True, text=True)
        assert proc.returncode == 4 and proc.stderr.startswith("error=io:")

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            cli.main([])


def test_figure_config_rejects_unknown():
    with pytest.raises(ValueError):
        figure_config(3)


def test_runconfig_validate_direct():
    cfg = figure_config(1)
    with pytest.raises(ConfigError):
        replace(cfg, model="three_qubit").validate()
    assert isinstance(cfg, RunConfig)
