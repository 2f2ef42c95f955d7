import csv
import filecmp

import numpy as np
import pytest

from proprpca.cli import main


def run_cli(*args):
    return main(list(args))


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    code = run_cli(
        "simulate",
        "--scenario", "three_pollutant_corr",
        "--grid-size", "40",
        "--n-train", "60",
        "--n-test", "20",
        "--seed", "3",
        "--out-dir", str(out),
    )
    assert code == 0
    return out


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


class TestSimulate:
    def test_files_and_schema(self, sim_dir):
        header, rows = read_rows(sim_dir / "sites.csv")
        assert header == ["site_id", "x", "y", "r1"]
        assert len(rows) == 80
        header, rows = read_rows(sim_dir / "components.csv")
        assert header == ["site_id", "x1", "x2", "x3"]
        header, rows = read_rows(sim_dir / "split.csv")
        assert [r[1] for r in rows].count("train") == 60

    def test_missing_cells_are_empty_strings(self, tmp_path):
        out = tmp_path / "simmiss"
        assert run_cli(
            "simulate", "--scenario", "three_pollutant_corr",
            "--grid-size", "40", "--n-train", "60", "--n-test", "20",
            "--missing", "mcar:0.3", "--seed", "5", "--out-dir", str(out),
        ) == 0
        _, rows = read_rows(out / "components.csv")
        empties = sum(1 for r in rows for c in r[1:] if c == "")
        assert empties > 10


class TestFitPredictEvaluate:
    def test_round_trip(self, sim_dir, tmp_path):
        model = tmp_path / "model.json"
        assert run_cli(
            "fit", "--method", "proprpca_spline",
            "--sites", str(sim_dir / "sites.csv"),
            "--components", str(sim_dir / "components.csv"),
            "--q", "1", "--k-tilde", "5",
            "--out", str(model),
        ) == 0
        preds = tmp_path / "pred.csv"
        assert run_cli(
            "predict", "--model", str(model),
            "--sites", str(sim_dir / "sites.csv"),
            "--out", str(preds),
        ) == 0
        header, rows = read_rows(preds)
        assert header == ["site_id", "pc_1"]
        assert len(rows) == 80
        metrics = tmp_path / "metrics.csv"
        assert run_cli(
            "evaluate", "--model", str(model),
            "--sites", str(sim_dir / "sites.csv"),
            "--components", str(sim_dir / "components.csv"),
            "--predictions", str(preds),
            "--out", str(metrics),
        ) == 0
        header, rows = read_rows(metrics)
        assert header == ["pc_index", "prediction_r2", "prediction_r2_mse", "reconstruction_error"]
        r2 = float(rows[0][1])
        assert 0.0 <= r2 <= 1.0

    def test_fit_missing_without_imputer_exits_2(self, tmp_path):
        out = tmp_path / "m"
        run_cli(
            "simulate", "--scenario", "three_pollutant_corr",
            "--grid-size", "40", "--n-train", "60", "--n-test", "20",
            "--missing", "mcar:0.3", "--seed", "5", "--out-dir", str(out),
        )
        # components at training rows have holes; pca requires imputation
        code = run_cli(
            "fit", "--method", "pca",
            "--sites", str(out / "sites.csv"),
            "--components", str(out / "components.csv"),
            "--out", str(tmp_path / "m.json"),
        )
        assert code == 2


class TestExperimentCommand:
    def config(self, tmp_path, out_name):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "scenario=three_pollutant_corr\n"
            "grid_size=40\n"
            "n_train=60\n"
            "n_test=25\n"
            "methods=pca,proprpca_spline\n"
            "replications=2\n"
            "seed=11\n"
            "q=1\n"
            "k_tilde=5\n"
            "uk_nm_maxiter=30\n"
            f"output_dir={tmp_path / out_name}\n"
        )
        return cfg

    def test_runs_and_writes(self, tmp_path, capsys):
        cfg = self.config(tmp_path, "out1")
        assert run_cli("experiment", "--config", str(cfg)) == 0
        out = capsys.readouterr().out
        assert "median R2" in out
        assert (tmp_path / "out1" / "results.csv").exists()

    def test_byte_identical_reruns(self, tmp_path):
        cfg = self.config(tmp_path, "outA")
        assert run_cli("experiment", "--config", str(cfg)) == 0
        assert run_cli("experiment", "--config", str(cfg), "--output-dir", str(tmp_path / "outB")) == 0
        for name in ("results.csv", "summary.csv", "loadings.csv", "similarity.csv"):
            assert filecmp.cmp(
                tmp_path / "outA" / name, tmp_path / "outB" / name, shallow=False
            ), f"{name} differs between identical-seed runs"

    def test_set_overrides_config(self, tmp_path):
        cfg = self.config(tmp_path, "outC")
        assert run_cli(
            "experiment", "--config", str(cfg), "--set", "replications=1",
            "--output-dir", str(tmp_path / "outD"),
        ) == 0
        _, rows = read_rows(tmp_path / "outD" / "results.csv")
        assert {r[0] for r in rows} == {"0"}

    def test_invalid_config_exits_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("scenario=three_pollutant_corr\nmissing=mcar:0.3\nmethods=pca\n")
        assert run_cli("experiment", "--config", str(cfg)) == 2

    def test_workers_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PROPRPCA_WORKERS", "1")
        cfg = self.config(tmp_path, "outE")
        assert run_cli("experiment", "--config", str(cfg), "--set", "replications=1") == 0

    def test_workers_flag_beats_env(self, monkeypatch):
        from proprpca.pipeline import resolve_workers

        monkeypatch.setenv("PROPRPCA_WORKERS", "7")
        assert resolve_workers(None) == 7
        assert resolve_workers(2) == 2  # explicit request wins


class TestLoocvCommand:
    def test_smoke(self, tmp_path, sim_dir):
        out = tmp_path / "cv"
        code = run_cli(
            "loocv",
            "--sites", str(sim_dir / "sites.csv"),
            "--components", str(sim_dir / "components.csv"),
            "--methods", "pca",
            "--q", "1", "--k-tilde", "5",
            "--out-dir", str(out),
        )
        assert code == 0
        header, rows = read_rows(out / "loocv_summary.csv")
        assert header == ["method", "pc_index", "n_folds", "pooled_r2"]
        assert int(rows[0][2]) == 80


class TestPreprocessCommand:
    def test_components_transform(self, tmp_path):
        raw = tmp_path / "raw.csv"
        with open(raw, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["site_id", "ec", "oc", "pm25_total"])
            w.writerow(["a", "2.0", "4.0", "20.0"])
            w.writerow(["b", "1.0", "", "10.0"])
            w.writerow(["c", "3.0", "6.0", "30.0"])
        out = tmp_path / "log.csv"
        assert run_cli(
            "preprocess", "--components", str(raw), "--total-col", "pm25_total",
            "--out-components", str(out),
        ) == 0
        header, rows = read_rows(out)
        assert header == ["site_id", "ec", "oc"]
        assert float(rows[0][1]) == pytest.approx(np.log(0.1))
        assert rows[1][2] == ""  # missing stays missing

    def test_sites_screening(self, tmp_path, rng):
        sites = tmp_path / "sites.csv"
        n = 60
        coords = rng.uniform(0, 10, size=(n, 2))
        good = rng.standard_normal((n, 6))
        lu_low = rng.uniform(0, 5, size=(n, 1))
        with open(sites, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["site_id", "x", "y"] + [f"c{i}" for i in range(6)] + ["lu_pct"])
            for i in range(n):
                w.writerow(
                    [f"s{i}", coords[i, 0], coords[i, 1]]
                    + list(good[i]) + [lu_low[i, 0]]
                )
        out = tmp_path / "screened.csv"
        report = tmp_path / "report.csv"
        assert run_cli(
            "preprocess", "--sites", str(sites), "--out-sites", str(out),
            "--gis-pcs", "5", "--report", str(report),
        ) == 0
        header, rows = read_rows(out)
        assert header == ["site_id", "x", "y", "gis_pc1", "gis_pc2", "gis_pc3", "gis_pc4", "gis_pc5"]
        header, rows = read_rows(report)
        assert rows == [["6", "lu_pct", "low_max_landuse"]]

    def test_no_inputs_exits_2(self):
        assert run_cli("preprocess") == 2
