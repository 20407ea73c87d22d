"""Command-line behaviour: flags, config files, exit codes, outputs."""

import os

from szegolab.cli import load_config_file, main


def _data_section(path):
    with open(path, encoding="utf-8") as fh:
        return "".join(ln for ln in fh if not ln.startswith("#"))


BASE = ["--d", "1", "--k", "2", "--L", "30",
        "--lambda-start", "50", "--lambda-factor", "2", "--lambda-count", "3",
        "--symbol", "trig-poly", "--symbol-param", "coeffs=2,1",
        "--f", "poly:0,0,1", "--x-grid", "64"]


class TestMainPaths:
    def test_szego_writes_csv(self, tmp_path):
        out = str(tmp_path / "szego.csv")
        assert main(["szego", *BASE, "--out", out]) == 0
        text = open(out, encoding="utf-8").read()
        assert "lambda,rank,lhs,rhs,abs_err,rel_err" in text
        assert "# family = szego" in text

    def test_stdout_mode(self, capsys):
        assert main(["weyl", *BASE]) == 0
        captured = capsys.readouterr().out
        assert "lambda,count,weyl,ratio" in captured

    def test_json_format(self, tmp_path):
        out = str(tmp_path / "r.json")
        assert main(["weyl", *BASE, "--out", out, "--format", "json"]) == 0
        import json

        doc = json.loads(open(out, encoding="utf-8").read())
        assert doc["columns"] == ["lambda", "count", "weyl", "ratio"]

    def test_plot_flag_writes_png(self, tmp_path):
        out = str(tmp_path / "w.csv")
        assert main(["weyl", *BASE, "--out", out, "--plot"]) == 0
        png = str(tmp_path / "w.png")
        assert os.path.exists(png) and os.path.getsize(png) > 1000

    def test_repeat_runs_bit_identical(self, tmp_path):
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["szego", *BASE, "--out", out1]) == 0
        assert main(["szego", *BASE, "--out", out2]) == 0
        assert _data_section(out1).encode() == _data_section(out2).encode()

    def test_symbol_subcommand(self, tmp_path):
        out = str(tmp_path / "p.csv")
        code = main(["symbol", "--d", "1", "--k", "2", "--L", "60",
                     "--symbol", "shifted-cosine", "--symbol-param", "gamma=1",
                     "--symbol-param", "c0=0", "--x-grid", "64",
                     "--symbol-task", "power", "--power-k", "2", "--out", out])
        assert code == 0
        assert "n,sup_err" in open(out, encoding="utf-8").read()


class TestExitCodes:
    def test_invalid_config_is_exit_1(self, capsys):
        assert main(["szego", "--d", "0"]) == 1
        assert "field 'd'" in capsys.readouterr().err

    def test_trust_violation_is_exit_2(self, capsys):
        args = ["szego", *BASE]
        args[args.index("--L") + 1] = "5"  # trust window 12.5 < lambda grid
        assert main(args) == 2
        assert "untrusted-window" in capsys.readouterr().err

    def test_unknown_symbol_is_exit_1(self, capsys):
        args = list(BASE)
        args[args.index("--symbol") + 1] = "mystery"
        assert main(["szego", *args]) == 1
        assert "symbol" in capsys.readouterr().err


class TestConfigFile:
    def test_file_seeds_and_flags_override(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "# comment line\n"
            "d = 1\n"
            "k = 2\n"
            "L = 30\n"
            "lambda-start = 50\n"
            "lambda_factor = 2\n"
            "lambda_count = 3\n"
            "symbol = trig-poly\n"
            "symbol_param = coeffs=2,1\n"
            "f = poly:0,0,1\n"
            "x_grid = 64\n")
        out1 = str(tmp_path / "from_file.csv")
        assert main(["szego", "--config", str(cfg), "--out", out1]) == 0
        # flag overrides the file value
        out2 = str(tmp_path / "override.csv")
        assert main(["szego", "--config", str(cfg), "--lambda-count", "2",
                     "--out", out2]) == 0
        assert len(_data_section(out1).splitlines()) == len(_data_section(out2).splitlines()) + 1

    def test_malformed_file_is_config_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not a key value pair\n")
        assert main(["szego", "--config", str(cfg)]) == 1

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad2.cfg"
        cfg.write_text("walrus = 9\n")
        assert main(["szego", "--config", str(cfg)]) == 1

    def test_loader_parses_values(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("d = 2\nsymbol_param = a=1\nsymbol_param = b=2\n")
        values = load_config_file(str(cfg))
        assert values["d"] == "2"
        assert values["symbol_param"] == ["a=1", "b=2"]
