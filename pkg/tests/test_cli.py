import csv
import json
import math

import numpy as np
import pytest

from hmclab.cli import main


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSimulateHmc:
    def test_deterministic_rerun(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["simulate-hmc", "--theta", "0.5", "--n", "16", "--samples", "50", "--seed", "7"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        report = json.loads((tmp_path / "a.csv.report.json").read_text())
        assert report["schema_version"] == 1
        assert report["command"] == "simulate-hmc"

    def test_n_zero_exact_ones(self, tmp_path):
        out = tmp_path / "z.csv"
        assert main(["simulate-hmc", "--theta", "0.5", "--n", "0", "--samples", "20",
                     "--seed", "1", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 20
        assert all(float(r["re"]) == 1.0 and float(r["im"]) == 0.0 for r in rows)

    def test_row_count_and_columns(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["simulate-hmc", "--theta", "0.4", "--n", "8", "--ell", "2",
                     "--samples", "30", "--seed", "3", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 30 * 3
        assert set(rows[0]) == {"replica", "index", "re", "im"}
        assert sorted({r["index"] for r in rows}) == ["10", "8", "9"]

    def test_json_format(self, tmp_path):
        out = tmp_path / "d.json"
        assert main(["simulate-hmc", "--theta", "0.4", "--n", "4", "--samples", "5",
                     "--seed", "3", "--out", str(out), "--format", "json"]) == 0
        rows = json.loads(out.read_text())
        assert len(rows) == 5

    def test_hex_seed(self, tmp_path):
        out_hex, out_dec = tmp_path / "h.csv", tmp_path / "i.csv"
        base = ["simulate-hmc", "--theta", "0.5", "--n", "4", "--samples", "5"]
        assert main(base + ["--seed", "0x10", "--out", str(out_hex)]) == 0
        assert main(base + ["--seed", "16", "--out", str(out_dec)]) == 0
        assert out_hex.read_bytes() == out_dec.read_bytes()

    def test_bad_theta_is_usage_error(self, tmp_path):
        code = main(["simulate-hmc", "--theta", "1.5", "--n", "4", "--samples", "5",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2


class TestSimulateCbe:
    def test_columns_and_invariants(self, tmp_path):
        out = tmp_path / "cbe.csv"
        assert main(["simulate-cbe", "--beta", "2", "--N", "16", "--nmax", "16",
                     "--samples", "40", "--seed", "5", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 40 * 17
        c0 = [r for r in rows if r["index"] == "0"]
        assert all(float(r["re"]) == 1.0 and float(r["im"]) == 0.0 for r in c0)
        top = [r for r in rows if r["index"] == "16"]
        mods = [abs(complex(float(r["re"]), float(r["im"]))) for r in top]
        assert all(abs(m - 1.0) <= 1e-10 for m in mods)

    def test_determinism(self, tmp_path):
        args = ["simulate-cbe", "--beta", "4", "--N", "8", "--nmax", "4",
                "--samples", "10", "--seed", "9"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_nmax_validated(self, tmp_path):
        assert main(["simulate-cbe", "--beta", "2", "--N", "4", "--nmax", "5",
                     "--samples", "5", "--out", str(tmp_path / "x.csv")]) == 2


class TestConstants:
    def test_log_two_row(self, tmp_path):
        out = tmp_path / "const.csv"
        assert main(["constants", "--theta", "1.0", "--delta", "0.5",
                     "--epsilon", "0.25", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 1
        assert float(rows[0]["c_delta_closed"]) == pytest.approx(math.log(2.0), abs=1e-6)
        assert float(rows[0]["c_delta_integral"]) == pytest.approx(math.log(2.0), abs=1e-6)

    def test_delta_one_zero(self, tmp_path):
        out = tmp_path / "const1.csv"
        assert main(["constants", "--theta", "0.6", "--delta", "1.0",
                     "--epsilon", "0.5", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert float(rows[0]["c_delta_integral"]) == 0.0

    def test_epsilon_sweep_shows_limit(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["constants", "--theta", "0.6", "--delta", "0.2",
                     "--epsilon", "0.1,0.05,0.025", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 3
        cd = float(rows[0]["c_delta_integral"])
        gaps = [abs(float(r["a_constant"]) - cd) for r in rows]
        assert gaps[0] > gaps[1] > gaps[2]
        density = tmp_path / "sweep.csv.density.csv"
        assert density.exists()

    def test_writes_density_and_cdf_tables(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["constants", "--theta", "0.5", "--delta", "0.5",
                     "--epsilon", "0.25", "--out", str(out)]) == 0
        report = json.loads((tmp_path / "t.csv.report.json").read_text())
        assert len(report["artifact_paths"]) >= 3


class TestVerify:
    def test_unknown_suite_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--suite", "nonsense"])
        assert exc.value.code == 2

    def test_exit_code_tracks_results(self, tmp_path):
        # identities at quick level: criteria 1 and 4 pass; criterion 6
        # carries the A-range defect, so the suite exit code must be 1
        out = tmp_path / "verify.json"
        code = main(["verify", "--suite", "identities", "--level", "quick", "--out", str(out)])
        report = json.loads(out.read_text())
        flags = report["params"]["criteria"]
        assert code == (0 if all(flags.values()) else 1)
        assert flags["1"] and flags["4"]
