"""End-to-end command-line tests: exit codes, artifacts, reproducibility."""

import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ecgtda.cli import main, read_windows_csv, write_windows_csv
from ecgtda.segmentation import BeatWindow


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def windows_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pp")
    assert run(["preprocess", "--synthetic", 3, "--seed", 1, "--out", out]) == 0
    return out


class TestExitCodes:
    def test_unknown_config_key_names_it(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus_key = 1\n")
        code = run(["preprocess", "--synthetic", 1, "--config", cfg, "--out", tmp_path / "o"])
        assert code == 1
        assert "bogus_key" in capsys.readouterr().err

    def test_missing_model_is_data_error(self, windows_dir, tmp_path):
        code = run([
            "score", windows_dir / "windows.csv",
            "--model", tmp_path / "nope" / "model", "--out", tmp_path / "o",
        ])
        assert code == 2

    def test_malformed_windows_table(self, tmp_path):
        bad = tmp_path / "w.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        assert run(["tda", bad, "--out", tmp_path / "o"]) == 2

    def test_no_input_is_usage_error(self, tmp_path):
        assert run(["preprocess", "--out", tmp_path / "o"]) == 1

    def test_ingest_all_failures(self, tmp_path):
        assert run(["ingest", tmp_path / "missing_record", "--out", tmp_path / "o"]) == 2

    def test_unknown_channel_name(self, windows_dir, tmp_path):
        code = run([
            "crossval", windows_dir / "windows.csv",
            "--channels", "betti,bogus", "--out", tmp_path / "o",
        ])
        assert code == 1

    def test_help_succeeds(self):
        assert run(["--help"]) == 0


class TestPreprocess:
    def test_artifacts(self, windows_dir):
        assert (windows_dir / "windows.csv").exists()
        assert (windows_dir / "stage_report.json").exists()
        snapshot = json.loads((windows_dir / "effective_config.json").read_text())
        assert snapshot["command"] == "preprocess"
        assert snapshot["effective"]["seed"] == 1
        ET.parse(windows_dir / "processed_syn000.svg")

    def test_byte_identical_reruns(self, tmp_path):
        for name in ("a", "b"):
            assert run(["preprocess", "--synthetic", 2, "--seed", 5, "--out", tmp_path / name]) == 0
        assert (tmp_path / "a" / "windows.csv").read_bytes() == (
            tmp_path / "b" / "windows.csv"
        ).read_bytes()

    def test_windows_roundtrip(self, windows_dir):
        windows = read_windows_csv(windows_dir / "windows.csv")
        assert windows and all(w.samples.size == 400 for w in windows)

    def test_config_file_applies(self, tmp_path):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text("target_rate_hz = 250  # keep the native MIT rate\n")
        out = tmp_path / "o"
        assert run(["preprocess", "--synthetic", 1, "--config", cfg, "--out", out]) == 0
        snapshot = json.loads((out / "effective_config.json").read_text())
        assert snapshot["effective"]["preprocess"]["target_rate_hz"] == 250


def fixture_windows_file(path, samples):
    window = BeatWindow("p0", np.asarray(samples, dtype=float), "N", 1, 0, (0, len(samples)))
    write_windows_csv(path, [window])


class TestTda:
    def test_barcode_rows_for_fixture(self, tmp_path):
        table = tmp_path / "w.csv"
        fixture_windows_file(table, [0.0, 2.0, 1.0, 3.0])
        out = tmp_path / "o"
        assert run(["tda", table, "--bins", 8, "--out", out]) == 0
        with open(out / "barcodes.csv", newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["kind"] == "sublevel"]
        parsed = {(float(r["birth"]), float(r["death"]), r["essential"]) for r in rows}
        assert parsed == {(0.0, 3.0, "true"), (1.0, 2.0, "false")}
        ET.parse(out / "barcode_000.svg")
        ET.parse(out / "betti_000.svg")

    def test_env_var_override(self, tmp_path, monkeypatch):
        table = tmp_path / "w.csv"
        fixture_windows_file(table, [0.0, 2.0, 1.0, 3.0])
        monkeypatch.setenv("ECGTDA_TDA_BINS", "11")
        out = tmp_path / "o"
        assert run(["tda", table, "--out", out]) == 0
        snapshot = json.loads((out / "effective_config.json").read_text())
        assert snapshot["effective"]["bins"] == 11
        with open(out / "betti.csv", newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["kind"] == "sublevel"]
        assert len(rows) == 11


class TestModelCommands:
    def test_train_score_plot_chain(self, windows_dir, tmp_path):
        ae_out = tmp_path / "ae"
        assert run([
            "train-ae", windows_dir / "windows.csv",
            "--epochs", 3, "--seed", 0, "--out", ae_out,
        ]) == 0
        assert (ae_out / "model.npz").exists() and (ae_out / "model.json").exists()
        ET.parse(ae_out / "loss_trace.svg")

        sc_out = tmp_path / "sc"
        assert run([
            "score", windows_dir / "windows.csv",
            "--model", ae_out / "model", "--out", sc_out,
        ]) == 0
        with open(sc_out / "scores.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows and all(float(r["score"]) >= 0 for r in rows)

        pl_out = tmp_path / "pl"
        assert run([
            "plot", ae_out / "loss_trace.csv", "--kind", "loss", "--out", pl_out,
        ]) == 0
        root = ET.parse(pl_out / "loss.svg").getroot()
        assert root.tag.endswith("svg")

    def test_features_table(self, windows_dir, tmp_path):
        out = tmp_path / "ft"
        assert run(["features", windows_dir / "windows.csv", "--out", out]) == 0
        with open(out / "features.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert len(header) == 3 + 87


class TestCrossval:
    def test_small_run(self, windows_dir, tmp_path):
        out = tmp_path / "cv"
        code = run([
            "crossval", windows_dir / "windows.csv",
            "--test-size", 1, "--bins", 8, "--ae-epochs", 3,
            "--channels", "betti,features", "--out", out,
        ])
        assert code == 0
        payload = json.loads((out / "crossval.json").read_text())
        assert payload["aggregate"]["folds"] == 3
        assert payload["leakage_violations"] == []
        assert payload["aggregate"]["channel_dim"] == 2 * 8 + 87
