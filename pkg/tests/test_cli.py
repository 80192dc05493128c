import numpy as np
import pytest

from seqad.cli import main


def write_column(path, values, header="v"):
    path.write_text("\n".join([header] + [str(v) for v in values]) + "\n")


def write_features(path, matrix, prefix="f"):
    header = ",".join(f"{prefix}{i}" for i in range(len(matrix[0])))
    lines = [header] + [",".join(repr(float(v)) for v in row) for row in matrix]
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def label_files(tmp_path):
    pred = tmp_path / "pred.csv"
    truth = tmp_path / "truth.csv"
    write_column(pred, [0, 0, 0, 1, 0, 0])
    write_column(truth, [0, 0, 1, 1, 1, 0])
    return pred, truth


class TestEval:
    def test_basic(self, label_files, capsys):
        pred, truth = label_files
        assert main(["eval", "--pred", str(pred), "--truth", str(truth)]) == 0
        out = capsys.readouterr().out
        assert "instance" in out and "adjusted" in out

    def test_with_scores_and_report(self, tmp_path, label_files):
        pred, truth = label_files
        scores = tmp_path / "scores.csv"
        write_column(scores, [0.0, 0.1, 0.2, 0.9, 0.3, 0.0])
        out = tmp_path / "report.json"
        code = main(
            [
                "eval",
                "--pred", str(pred),
                "--truth", str(truth),
                "--scores", str(scores),
                "--delta-max", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert out.exists()
        assert out.with_suffix(".png").exists()

    def test_length_mismatch_exits_one(self, tmp_path, label_files):
        pred, _ = label_files
        short = tmp_path / "short.csv"
        write_column(short, [0, 1])
        assert main(["eval", "--pred", str(pred), "--truth", str(short)]) == 1

    def test_missing_file_exits_two(self, tmp_path, label_files):
        pred, _ = label_files
        assert main(["eval", "--pred", str(pred), "--truth", str(tmp_path / "nope.csv")]) == 2

    def test_bad_cell_exits_two(self, tmp_path, label_files):
        pred, _ = label_files
        bad = tmp_path / "bad.csv"
        bad.write_text("v\n0\nbanana\n")
        assert main(["eval", "--pred", str(pred), "--truth", str(bad)]) == 2


class TestSynthAndDatasetCommands:
    def test_synth_writes_loadable_bundle(self, tmp_path):
        out = tmp_path / "bundle"
        code = main(
            [
                "synth",
                "--out", str(out),
                "--length", "600",
                "--dims", "2",
                "--segments", "100:40:5.0,300:40:5.0",
                "--train-length", "500",
                "--seed", "3",
            ]
        )
        assert code == 0
        from seqad import load_dataset

        bundle = load_dataset(out)
        assert bundle.test.length == 600
        assert bundle.test_labels.positives == 80

    def test_synth_rejects_bad_segments(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "x"), "--segments", "10:20"]) == 1

    def test_flaw_demo_on_dataset(self, tmp_path, capsys):
        out = tmp_path / "bundle"
        main(["synth", "--out", str(out), "--length", "3000", "--dims", "1",
              "--segments", "500:400:4.0", "--seed", "4"])
        report = tmp_path / "flaw.json"
        code = main(
            ["flaw-demo", "--data", str(out), "--p", "0.01", "--trials", "60",
             "--seed", "5", "--out", str(report), "--format", "json"]
        )
        assert code == 0
        assert report.exists() and report.with_suffix(".png").exists()
        assert "adjusted" in capsys.readouterr().out

    def test_flaw_demo_synthetic_default(self, capsys):
        assert main(["flaw-demo", "--trials", "20", "--seed", "1"]) == 0

    def test_spd_bench_on_synthetic_default(self, tmp_path):
        report = tmp_path / "spd.csv"
        code = main(["spd-bench", "--seed", "2", "--out", str(report), "--format", "csv", "--far", "1e-3"])
        assert code == 0
        text = report.read_text()
        assert text.startswith("# schema_version=")
        assert report.with_suffix(".png").exists()


class TestDetectorCommands:
    @pytest.fixture
    def feature_files(self, tmp_path):
        rng = np.random.default_rng(6)
        train = tmp_path / "train.csv"
        test = tmp_path / "test.csv"
        write_features(train, rng.standard_normal((300, 2)))
        stream = rng.standard_normal((200, 2))
        stream[100:120] += 6.0
        write_features(test, stream)
        return train, test

    def test_calibrate(self, tmp_path, feature_files, capsys):
        train, _ = feature_files
        out = tmp_path / "calib.json"
        assert main(["calibrate", "--train", str(train), "--far", "1e-3", "--out", str(out)]) == 0
        assert out.exists()
        assert not out.with_suffix(".png").exists()  # no figure for calibration reports
        assert "omega0" in capsys.readouterr().out

    def test_detect_with_explicit_threshold(self, tmp_path, feature_files, capsys):
        train, test = feature_files
        out = tmp_path / "alarms.csv"
        code = main(
            ["detect", "--train", str(train), "--test", str(test),
             "--threshold", "5.0", "--out", str(out), "--format", "csv"]
        )
        assert code == 0
        assert "alarm" in capsys.readouterr().out
        from seqad import read_csv_table

        meta, rows = read_csv_table(out)
        assert meta["kind"] == "detect"
        assert rows, "the injected shift should trigger at least one alarm"
        assert 100 <= rows[0]["t"] <= 125

    def test_detect_calibrated_threshold(self, feature_files):
        train, test = feature_files
        assert main(["detect", "--train", str(train), "--test", str(test), "--far", "1e-4"]) == 0

    def test_far_validate_small(self, tmp_path, capsys):
        out = tmp_path / "far.csv"
        code = main(
            ["far-validate", "--dim", "1", "--calibration-size", "400", "--length", "4000",
             "--grid-points", "3", "--seed", "7", "--out", str(out), "--format", "csv"]
        )
        assert code == 0
        assert "omega0" in capsys.readouterr().out
        assert out.exists() and out.with_suffix(".png").exists()

    def test_no_plot_flag(self, tmp_path, capsys):
        out = tmp_path / "far.json"
        code = main(
            ["far-validate", "--dim", "1", "--calibration-size", "400", "--length", "2000",
             "--grid-points", "2", "--seed", "8", "--out", str(out), "--no-plot"]
        )
        assert code == 0
        assert out.exists() and not out.with_suffix(".png").exists()


class TestDeterminism:
    def test_same_config_same_bytes(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        args = ["far-validate", "--dim", "1", "--calibration-size", "300", "--length", "2000",
                "--grid-points", "2", "--seed", "9", "--no-plot"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
