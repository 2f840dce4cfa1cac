import json

import numpy as np
import pytest

from snrloss.cli import main


def write_config(tmp_path, mismatch, name="config.json", n_elements=16, n_training=32):
    config = {
        "array": {"n_elements": n_elements, "n_training": n_training},
        "mismatch": mismatch,
    }
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def run(args):
    return main(args)


class TestAnalyze:
    def test_no_mismatch_forced_parameters(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        out = tmp_path / "report.json"
        assert run(["analyze", "--config", config, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        fit = report["fits"]["scaled_f"]
        assert fit["a_eff"] == pytest.approx(1.0, abs=1e-8)
        assert fit["nu"] == pytest.approx(30.0, rel=1e-8)
        assert fit["mu"] == pytest.approx(36.0, rel=1e-8)
        assert report["is_ger"] is True

    def test_mpdr_ten_db(self, tmp_path):
        config = write_config(tmp_path, {"kind": "mpdr", "gamma_db": 0.0, "soi_power_db": 10.0})
        out = tmp_path / "report.json"
        assert run(["analyze", "--config", config, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["exact"]["a_eff"] == pytest.approx(11.0, rel=1e-10)
        assert report["fits"]["scaled_f"]["a_eff"] == pytest.approx(11.0, rel=1e-6)

    def test_ger_blockdiag_has_both_ger_fits(self, tmp_path):
        config = write_config(tmp_path, {"kind": "ger_blockdiag", "gamma_db": 2.0})
        out = tmp_path / "report.json"
        assert run(["analyze", "--config", config, "--seed", "7", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["is_ger"] is True
        assert "scaled_chi2" in report["fits"]
        assert "pearson" in report["fits"]

    def test_deterministic_bytes(self, tmp_path):
        config = write_config(tmp_path, {"kind": "inverse_wishart", "gamma_range_db": [-6, 6]})
        out1 = tmp_path / "r1.json"
        out2 = tmp_path / "r2.json"
        assert run(["analyze", "--config", config, "--seed", "3", "--out", str(out1)]) == 0
        assert run(["analyze", "--config", config, "--seed", "3", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_csv_format(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        out = tmp_path / "report.csv"
        assert run(["analyze", "--config", config, "--format", "csv", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "key,value"
        rows = dict(line.split(",", 1) for line in lines[1:])
        assert float(rows["fits.scaled_f.a_eff"]) == pytest.approx(1.0, abs=1e-8)


class TestConfigValidation:
    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "array": {"n_elements": 16, "n_training": 32, "bogus": 1},
            "mismatch": {"kind": "none"},
        }))
        assert run(["analyze", "--config", str(path)]) == 4

    def test_unknown_mismatch_key_rejected(self, tmp_path):
        config = write_config(tmp_path, {"kind": "mpdr", "soi_power_db": 10.0, "extra": 2})
        assert run(["analyze", "--config", config]) == 4

    def test_missing_file(self, tmp_path):
        assert run(["analyze", "--config", str(tmp_path / "absent.json")]) == 4

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run(["analyze", "--config", str(path)]) == 4

    def test_unknown_kind(self, tmp_path):
        config = write_config(tmp_path, {"kind": "martian"})
        assert run(["analyze", "--config", config]) == 4


def read_csv_columns(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return {
        name: np.array([float(row[i]) if row[i] else np.nan for row in rows])
        for i, name in enumerate(header)
    }


class TestPdf:
    def test_grid_integrates_to_one(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        out = tmp_path / "pdf.csv"
        assert run(["pdf", "--config", config, "--grid", "512", "--out", str(out)]) == 0
        cols = read_csv_columns(out)
        total = np.trapezoid(cols["pdf_approx"], cols["ell"])
        assert total == pytest.approx(1.0, abs=1e-3)
        assert np.allclose(cols["pdf_exact"], cols["pdf_approx"], rtol=1e-5)

    def test_mpdr_gamma_sweep_orders_means(self, tmp_path):
        means = []
        for gamma_db in (-3.0, 0.0, 3.0):
            config = write_config(tmp_path, {"kind": "mpdr", "gamma_db": gamma_db, "soi_power_db": 10.0},
                                  name=f"mpdr{gamma_db}.json")
            out = tmp_path / f"report{gamma_db}.json"
            assert run(["analyze", "--config", config, "--out", str(out)]) == 0
            means.append(json.loads(out.read_text())["exact"]["mean_loss"])
        # larger gamma attenuates the SoI contamination: mean loss improves
        assert means[0] < means[1] < means[2]

    def test_surprise_power_shifts_down(self, tmp_path):
        means = []
        for power_db in (5.0, 15.0):
            config = write_config(tmp_path, {"kind": "surprise", "angle_deg": 14.0, "power_db": power_db},
                                  name=f"surprise{power_db}.json")
            out = tmp_path / f"sreport{power_db}.json"
            assert run(["analyze", "--config", config, "--out", str(out)]) == 0
            means.append(json.loads(out.read_text())["exact"]["mean_loss"])
        assert means[1] < means[0]

    def test_explicit_parameters(self, tmp_path):
        out = tmp_path / "pdf.csv"
        assert run(["pdf", "--a-eff", "11", "--nu", "30", "--mu", "36", "--grid", "64",
                    "--out", str(out)]) == 0
        cols = read_csv_columns(out)
        assert cols["ell"].size == 64

    def test_json_format(self, tmp_path):
        out = tmp_path / "pdf.json"
        assert run(["pdf", "--a-eff", "1", "--nu", "30", "--mu", "36", "--grid", "16",
                    "--format", "json", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert len(payload["ell"]) == 16
        assert len(payload["pdf_approx"]) == 16

    def test_empirical_column(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        out = tmp_path / "pdf.csv"
        assert run(["pdf", "--config", config, "--grid", "32", "--trials", "20000",
                    "--out", str(out)]) == 0
        cols = read_csv_columns(out)
        assert "pdf_empirical" in cols
        bulk = (cols["ell"] > 0.4) & (cols["ell"] < 0.7)
        assert np.allclose(cols["pdf_empirical"][bulk], cols["pdf_exact"][bulk], rtol=0.25, atol=0.1)


class TestSimulate:
    def test_csv_export_and_determinism(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        out1 = tmp_path / "s1.csv"
        out2 = tmp_path / "s2.csv"
        args = ["simulate", "--config", config, "--trials", "500", "--sampler", "representation"]
        assert run(args + ["--seed", "5", "--out", str(out1)]) == 0
        assert run(args + ["--seed", "5", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        assert lines[4] == "ell"
        values = np.array([float(x) for x in lines[5:]])
        assert values.size == 500
        assert np.all((values > 0) & (values < 1))


class TestValidate:
    def test_no_mismatch_passes(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        out = tmp_path / "validate.json"
        code = run(["validate", "--config", config, "--trials", "20000", "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["pass"] is True
        references = {c["reference"] for c in report["comparisons"]}
        assert {"exact", "scaled_f", "scaled_chi2", "pearson"} <= references

    def test_too_few_trials_rejected(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        assert run(["validate", "--config", config, "--trials", "5000"]) == 4


class TestSweep:
    def test_zero_realizations_header_only(self, tmp_path):
        config = write_config(tmp_path, {"kind": "eigenvalue"})
        out = tmp_path / "sweep.csv"
        assert run(["sweep", "--config", config, "--realizations", "0", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# skipped_degenerate=0"
        assert lines[1] == "realization,gamma_db,a_eff,nu,mu,mean_loss"
        assert len(lines) == 2

    def test_deterministic_bytes(self, tmp_path):
        config = write_config(tmp_path, {"kind": "ger_blockdiag"})
        out1 = tmp_path / "sweep1.csv"
        out2 = tmp_path / "sweep2.csv"
        args = ["sweep", "--config", config, "--realizations", "4", "--seed", "11"]
        assert run(args + ["--out", str(out1)]) == 0
        assert run(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_rejects_deterministic_kind(self, tmp_path):
        config = write_config(tmp_path, {"kind": "none"})
        assert run(["sweep", "--config", config]) == 4

    def test_means_degrade_under_mismatch(self, tmp_path):
        config = write_config(tmp_path, {"kind": "eigenvalue", "alpha_range_db": [-6, 6]})
        out = tmp_path / "sweep.csv"
        assert run(["sweep", "--config", config, "--realizations", "6", "--out", str(out)]) == 0
        cols = read_csv_columns(out)
        assert cols["mean_loss"].size == 6
        assert np.all(cols["mean_loss"] < 18.0 / 33.0)
