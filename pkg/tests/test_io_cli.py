import json

import numpy as np
import pytest

from tiers.cli import main
from tiers.io import CsvFormatError, dump_csv, ingest_csv


class TestCsv:
    def test_small_round_trip(self, tmp_path):
        a = np.array([[0.5, -2.0], [1.25, 3.0]])
        dump_csv(tmp_path / "a.csv", a)
        assert ingest_csv(tmp_path / "a.csv").tobytes() == a.tobytes()

    def test_large_random_round_trip(self, tmp_path, rng):
        a = rng.standard_normal((1000, 50)) * 10.0 ** rng.integers(-8, 8, (1000, 50))
        dump_csv(tmp_path / "big.csv", a)
        np.testing.assert_array_equal(ingest_csv(tmp_path / "big.csv"), a)

    def test_header_detected(self, tmp_path):
        (tmp_path / "h.csv").write_text("x1,x2\n1,2\n3,4\n")
        np.testing.assert_array_equal(ingest_csv(tmp_path / "h.csv"), [[1, 2], [3, 4]])

    def test_numeric_first_row_kept(self, tmp_path):
        (tmp_path / "h.csv").write_text("1,2\n3,4\n")
        assert ingest_csv(tmp_path / "h.csv").shape == (2, 2)

    def test_vector_layout(self, tmp_path):
        dump_csv(tmp_path / "y.csv", [1.0, 2.0, 3.0], header=["y"])
        np.testing.assert_array_equal(ingest_csv(tmp_path / "y.csv", "vector"), [1, 2, 3])
        (tmp_path / "m.csv").write_text("1,2\n")
        with pytest.raises(CsvFormatError):
            ingest_csv(tmp_path / "m.csv", "vector")

    @pytest.mark.parametrize("text,line,column", [
        ("1,2\n3,nan\n", 2, 2),
        ("1,2\n3,inf\n", 2, 2),
        ("a,b\n1,2\n3,\n", 3, 2),
        ("1,2\nfoo,4\n", 2, 1),
        ("1,2\n3,4,5\n", 2, None),
    ])
    def test_errors_carry_coordinates(self, tmp_path, text, line, column):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(CsvFormatError) as exc:
            ingest_csv(path)
        assert (exc.value.line, exc.value.column) == (line, column)
        assert f"bad.csv:{line}" in str(exc.value)

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(CsvFormatError):
            ingest_csv(tmp_path / "e.csv")


def _dump(tmp_path, capsys, *extra):
    out = tmp_path / "fx"
    assert main(["fixtures", "dump", str(out), "--n", "40", "--p", "30", *extra]) == 0
    capsys.readouterr()
    return out


class TestCli:
    def test_test_subcommand(self, tmp_path, capsys):
        fx = _dump(tmp_path, capsys, "--seed", "7")
        args = ["test", "--xa", str(fx / "xa.csv"), "--ya", str(fx / "ya.csv"),
                "--xb", str(fx / "xb.csv"), "--yb", str(fx / "yb.csv"), "--seed", "7"]
        assert main(args) == 0
        out = json.loads(capsys.readouterr().out)
        for key in ("t_n", "critical_value", "p_value", "reject"):
            assert key in out
        assert main(args + ["--variant", "tiers+", "--weighted-qhat"]) == 0
        assert json.loads(capsys.readouterr().out)["variant"] == "tiers+"

    def test_dimension_error_names_files(self, tmp_path, capsys):
        fx = _dump(tmp_path, capsys)
        dump_csv(tmp_path / "short.csv", np.ones(5))
        code = main(["test", "--xa", str(fx / "xa.csv"), "--ya", str(tmp_path / "short.csv"),
                     "--xb", str(fx / "xb.csv"), "--yb", str(fx / "yb.csv")])
        assert code == 2
        assert "short.csv" in capsys.readouterr().err

    def test_malformed_csv_exit(self, tmp_path, capsys):
        fx = _dump(tmp_path, capsys)
        (tmp_path / "bad.csv").write_text("1\nx\n")
        code = main(["test", "--xa", str(fx / "xa.csv"), "--ya", str(tmp_path / "bad.csv"),
                     "--xb", str(fx / "xb.csv"), "--yb", str(fx / "yb.csv")])
        assert code == 2
        assert "bad.csv:2:1" in capsys.readouterr().err

    def test_fixture_replay(self, tmp_path, capsys):
        fx = _dump(tmp_path, capsys, "--regime", "DH")
        assert main(["fixtures", "replay", str(fx)]) == 0
        assert json.loads(capsys.readouterr().out)["match"] is True
        y = ingest_csv(fx / "ya.csv", "vector")
        y[0] += 1.0
        dump_csv(fx / "ya.csv", y)
        assert main(["fixtures", "replay", str(fx)]) == 1

    def test_oracle_power(self, capsys):
        assert main(["oracle-power", "--gamma", "1,0,0", "--n", "100"]) == 0
        assert json.loads(capsys.readouterr().out)["power"] > 0.9999

    def test_naive_demo(self, tmp_path, capsys):
        out = tmp_path / "figure1.csv"
        assert main(["naive-demo", "--n", "40", "--p", "30", "--c-grid", "0,0.5",
                     "--outer-reps", "50", "--inner-draws", "2000", "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "c,m_hat,se"
        c, m, se = map(float, rows[1].split(","))
        assert c == 0 and abs(m - 0.05) <= 3 * se

    def test_experiment(self, tmp_path, capsys):
        cfg = tmp_path / "exp.toml"
        cfg.write_text('regime = "SL"\nn = 40\np = 30\nreps = 2\ndraws = 1000\n'
                       'h_grid = [0.0, 1.0]\n')
        out = tmp_path / "run"
        assert main(["experiment", "--config", str(cfg), "--out-dir", str(out)]) == 0
        capsys.readouterr()
        report = json.loads((out / "report.json").read_text())
        assert [r["h"] for r in report["rows"]] == [0.0, 1.0]
        assert (out / "report.csv").read_text().startswith("h,reps")
        assert "wall_clock_total_s" in json.loads((out / "metadata.json").read_text())

    def test_experiment_flags(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["experiment", "--regime", "SH", "--n", "40", "--p", "30", "--reps", "2",
                     "--draws", "1000", "--h-grid", "0", "--variant", "tiers+",
                     "--out-dir", str(out)]) == 0
        assert json.loads(capsys.readouterr().out)["spec"]["variant"] == "tiers+"
