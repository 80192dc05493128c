import numpy as np
import pytest

from seqad import (
    DatasetBundle,
    FormatSpec,
    LabelTrack,
    ParseError,
    SyntheticSpec,
    TimeSeries,
    ValidationError,
    generate_synthetic,
    load_dataset,
    write_bundle,
)


def write_csv(path, rows, header=None):
    lines = []
    if header:
        lines.append(",".join(header))
    lines.extend(",".join(str(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def make_dataset_dir(tmp_path, train, test, labels, header_dims=None):
    d = header_dims if header_dims is not None else len(train[0])
    header = [f"c{i}" for i in range(d)]
    write_csv(tmp_path / "train.csv", train, header)
    write_csv(tmp_path / "test.csv", test, header)
    write_csv(tmp_path / "test_label.csv", [[v] for v in labels], ["label"])
    return tmp_path


class TestLoadDataset:
    def test_toy_fixture_shapes(self, tmp_path):
        make_dataset_dir(
            tmp_path,
            train=[[0.0, 0.0], [1.0, 10.0], [2.0, 20.0]],
            test=[[1.0, 5.0], [2.0, 10.0], [0.0, 0.0]],
            labels=[0, 1, 0],
        )
        bundle = load_dataset(tmp_path)
        assert bundle.train.length == 3 and bundle.train.dims == 2
        assert bundle.test.length == 3
        assert bundle.test_labels.positives == 1
        assert bundle.name == tmp_path.name

    def test_normalization_uses_train_statistics(self, tmp_path):
        make_dataset_dir(
            tmp_path,
            train=[[0.0], [10.0]],
            test=[[5.0], [20.0]],
            labels=[0, 0],
        )
        bundle = load_dataset(tmp_path)
        assert np.allclose(bundle.train.values[:, 0], [0.0, 1.0])
        assert np.allclose(bundle.test.values[:, 0], [0.5, 2.0])

    def test_rejects_non_binary_labels(self, tmp_path):
        make_dataset_dir(tmp_path, [[0.0], [1.0]], [[0.0], [1.0]], [0, 2])
        with pytest.raises(ValidationError):
            load_dataset(tmp_path)

    def test_rejects_row_count_mismatch(self, tmp_path):
        make_dataset_dir(tmp_path, [[0.0], [1.0]], [[0.0], [1.0]], [0, 1, 0])
        with pytest.raises(ValidationError):
            load_dataset(tmp_path)

    def test_rejects_dims_mismatch(self, tmp_path):
        write_csv(tmp_path / "train.csv", [[0.0, 1.0]], ["a", "b"])
        write_csv(tmp_path / "test.csv", [[0.0]], ["a"])
        write_csv(tmp_path / "test_label.csv", [[0]], ["label"])
        with pytest.raises(ValidationError):
            load_dataset(tmp_path)

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_dataset(tmp_path / "nope")

    def test_parse_error_reports_row_and_column(self, tmp_path):
        make_dataset_dir(tmp_path, [[0.0], [1.0]], [[0.0], [1.0]], [0, 1])
        (tmp_path / "test.csv").write_text("c0\n1.0\noops\n")
        with pytest.raises(ParseError, match=r"row 3, column 1"):
            load_dataset(tmp_path)

    def test_wide_server_metrics_layout(self, tmp_path):
        # 38-column layout like the common server-machine benchmark dumps
        rng = np.random.default_rng(70)
        train = rng.random((5, 38)).tolist()
        test = rng.random((4, 38)).tolist()
        make_dataset_dir(tmp_path, train, test, [0, 1, 1, 0])
        bundle = load_dataset(tmp_path, FormatSpec(expected_dims=38))
        assert bundle.train.dims == 38

    def test_expected_dims_enforced(self, tmp_path):
        make_dataset_dir(tmp_path, [[0.0], [1.0]], [[0.5], [0.5]], [0, 0])
        with pytest.raises(ValidationError):
            load_dataset(tmp_path, FormatSpec(expected_dims=3))

    def test_no_header_variant(self, tmp_path):
        write_csv(tmp_path / "train.csv", [[0.0], [2.0]])
        write_csv(tmp_path / "test.csv", [[1.0]])
        write_csv(tmp_path / "test_label.csv", [[1]])
        bundle = load_dataset(tmp_path, FormatSpec(has_header=False))
        assert bundle.train.length == 2


class TestSyntheticSpec:
    def test_rejects_overlapping_segments(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(length=100, segments=((10, 20, 1.0), (15, 5, 1.0)))

    def test_rejects_out_of_bounds(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(length=100, segments=((95, 10, 1.0),))

    def test_rejects_unknown_noise(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(length=10, noise="pink")


class TestGenerateSynthetic:
    def test_no_segments_all_zero_labels(self):
        bundle = generate_synthetic(SyntheticSpec(length=50, dims=2, seed=1))
        assert bundle.test_labels.positives == 0

    def test_mean_shift_magnitude(self):
        spec = SyntheticSpec(length=500, dims=1, segments=((100, 50, 5.0),), seed=2)
        bundle = generate_synthetic(spec)
        inside = bundle.test.values[100:150, 0]
        assert abs(inside.mean() - 5.0) < 3.0 / np.sqrt(50)
        assert list(bundle.test_labels.labels[100:150]) == [1] * 50

    def test_bit_identical_given_seed(self):
        spec = SyntheticSpec(length=200, dims=3, segments=((20, 10, 2.0),), seed=3)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        assert np.array_equal(a.train.values, b.train.values)
        assert np.array_equal(a.test.values, b.test.values)

    def test_ar1_noise_is_correlated(self):
        spec = SyntheticSpec(length=5000, dims=1, noise="ar1", rho=0.8, seed=4)
        x = generate_synthetic(spec).test.values[:, 0]
        lag1 = np.corrcoef(x[:-1], x[1:])[0, 1]
        assert 0.7 < lag1 < 0.9

    def test_train_length_override(self):
        spec = SyntheticSpec(length=100, train_length=250, seed=5)
        bundle = generate_synthetic(spec)
        assert bundle.train.length == 250 and bundle.test.length == 100


class TestWriteBundle:
    def test_round_trip_through_loader(self, tmp_path):
        spec = SyntheticSpec(length=120, dims=2, segments=((30, 10, 4.0),), seed=6, train_length=100)
        bundle = generate_synthetic(spec)
        write_bundle(bundle, tmp_path / "ds")
        loaded = load_dataset(tmp_path / "ds")
        assert loaded.train.length == 100
        assert loaded.test.length == 120
        assert np.array_equal(loaded.test_labels.labels, bundle.test_labels.labels)
        # loader normalizes with train statistics
        assert loaded.train.values.min() >= 0.0 and loaded.train.values.max() <= 1.0

    def test_written_files_parse_exactly(self, tmp_path):
        bundle = generate_synthetic(SyntheticSpec(length=30, dims=1, seed=7))
        base = write_bundle(bundle, tmp_path / "ds")
        raw = np.array(
            [float(line.split(",")[0]) for line in (base / "test.csv").read_text().splitlines()[1:]]
        )
        assert np.array_equal(raw, bundle.test.values[:, 0])


def test_bundle_validates_lengths():
    with pytest.raises(ValidationError):
        DatasetBundle(
            train=TimeSeries(np.zeros((5, 1))),
            test=TimeSeries(np.zeros((4, 1))),
            test_labels=LabelTrack(np.zeros(3, dtype=int)),
        )
