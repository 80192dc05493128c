"""Dataset bundles: CSV ingestion and synthetic stream generation.

A dataset directory holds `train.csv` (nominal, unlabeled), `test.csv`, and
`test_label.csv` (one {0,1} column). Loading validates shapes and rescales
both splits with min/max statistics fitted on the training split only.
Synthetic bundles are emitted raw; normalization happens on the file path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LabelTrack, TimeSeries, apply_minmax, fit_minmax, segments_from_labels
from .errors import ParseError, ValidationError

__all__ = [
    "FormatSpec",
    "DatasetBundle",
    "SyntheticSpec",
    "load_dataset",
    "generate_synthetic",
    "write_bundle",
]

TRAIN_FILE = "train.csv"
TEST_FILE = "test.csv"
LABEL_FILE = "test_label.csv"


@dataclass(frozen=True)
class FormatSpec:
    """Small knobs absorbing the common layout variants of benchmark CSVs."""

    has_header: bool = True
    delimiter: str = ","
    expected_dims: int | None = None


@dataclass(frozen=True)
class DatasetBundle:
    """Train/test series plus test labels; the unit every experiment consumes."""

    train: TimeSeries
    test: TimeSeries
    test_labels: LabelTrack
    name: str = "dataset"

    def __post_init__(self):
        if self.test.length != self.test_labels.length:
            raise ValidationError(
                f"test has {self.test.length} rows but labels have {self.test_labels.length}"
            )
        if self.train.dims != self.test.dims:
            raise ValidationError(
                f"train has {self.train.dims} dims but test has {self.test.dims}"
            )

    @property
    def test_segments(self):
        return segments_from_labels(self.test_labels)


def _read_matrix(path: Path, fmt: FormatSpec) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter=fmt.delimiter)
        for row_idx, row in enumerate(reader):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if row_idx == 0 and fmt.has_header:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{path}: row {row_idx + 1} has {len(row)} cells, expected {width}")
            values = []
            for col_idx, cell in enumerate(row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell at row {row_idx + 1}, column {col_idx + 1}: {cell!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def _labels_from_column(path: Path, column: np.ndarray) -> LabelTrack:
    if column.shape[1] != 1:
        raise ValidationError(f"{path}: label file must have a single column")
    flat = column.reshape(-1)
    bad = flat[~np.isin(flat, (0.0, 1.0))]
    if bad.size:
        raise ValidationError(f"{path}: labels must be 0 or 1, found {bad[0]!r}")
    return LabelTrack(flat.astype(np.int64))


def load_dataset(dir_path, fmt: FormatSpec = FormatSpec(), name: str | None = None) -> DatasetBundle:
    """Read, validate, and train-statistics-normalize a dataset directory."""
    base = Path(dir_path)
    train_raw = _read_matrix(base / TRAIN_FILE, fmt)
    test_raw = _read_matrix(base / TEST_FILE, fmt)
    labels = _labels_from_column(base / LABEL_FILE, _read_matrix(base / LABEL_FILE, fmt))
    if test_raw.shape[0] != labels.length:
        raise ValidationError(
            f"{base}: test has {test_raw.shape[0]} rows but labels have {labels.length}"
        )
    if train_raw.shape[1] != test_raw.shape[1]:
        raise ValidationError(
            f"{base}: train has {train_raw.shape[1]} columns but test has {test_raw.shape[1]}"
        )
    if fmt.expected_dims is not None and train_raw.shape[1] != fmt.expected_dims:
        raise ValidationError(
            f"{base}: expected {fmt.expected_dims} dimensions, found {train_raw.shape[1]}"
        )
    train = TimeSeries(train_raw)
    stats = fit_minmax(train)
    return DatasetBundle(
        train=apply_minmax(train, stats),
        test=apply_minmax(TimeSeries(test_raw), stats),
        test_labels=labels,
        name=name if name is not None else base.name,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a seeded nominal stream with injected mean-shift events.

    `segments` lists (start, length, shift) triples applied to the test split;
    `noise` is "iid" (standard normal) or "ar1" (coefficient `rho`).
    """

    length: int
    dims: int = 1
    noise: str = "iid"
    rho: float = 0.0
    segments: tuple[tuple[int, int, float], ...] = ()
    seed: int = 0
    train_length: int | None = None

    def __post_init__(self):
        if self.length < 1 or self.dims < 1:
            raise ValidationError("length and dims must be >= 1")
        if self.noise not in ("iid", "ar1"):
            raise ValidationError(f"noise must be 'iid' or 'ar1', got {self.noise!r}")
        if self.noise == "ar1" and not -1.0 < self.rho < 1.0:
            raise ValidationError(f"AR(1) coefficient must be in (-1, 1), got {self.rho}")
        if self.train_length is not None and self.train_length < 1:
            raise ValidationError("train_length must be >= 1")
        prev_end = -1
        for start, seg_len, _shift in self.segments:
            if seg_len < 1 or start < 0 or start + seg_len > self.length:
                raise ValidationError(f"segment ({start}, {seg_len}) out of bounds")
            if start <= prev_end:
                raise ValidationError("injected segments must be disjoint and sorted")
            prev_end = start + seg_len - 1


def _noise(spec: SyntheticSpec, rng: np.random.Generator, length: int) -> np.ndarray:
    draws = rng.standard_normal((length, spec.dims))
    if spec.noise == "iid":
        return draws
    out = np.empty_like(draws)
    out[0] = draws[0]
    for t in range(1, length):
        out[t] = spec.rho * out[t - 1] + draws[t]
    return out


def generate_synthetic(spec: SyntheticSpec) -> DatasetBundle:
    """Deterministic bundle: nominal train, test with mean shifts, matching labels."""
    rng = np.random.default_rng(spec.seed)
    train_len = spec.train_length if spec.train_length is not None else spec.length
    train = _noise(spec, rng, train_len)
    test = _noise(spec, rng, spec.length)
    labels = np.zeros(spec.length, dtype=np.int64)
    for start, seg_len, shift in spec.segments:
        test[start : start + seg_len] += shift
        labels[start : start + seg_len] = 1
    return DatasetBundle(TimeSeries(train), TimeSeries(test), LabelTrack(labels), name="synthetic")


def _write_matrix(path: Path, values: np.ndarray, header: list[str]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def write_bundle(bundle: DatasetBundle, dir_path) -> Path:
    """Write a bundle as a loadable dataset directory (train/test/label CSVs)."""
    base = Path(dir_path)
    base.mkdir(parents=True, exist_ok=True)
    dims = bundle.train.dims
    header = [f"dim_{j}" for j in range(dims)]
    _write_matrix(base / TRAIN_FILE, bundle.train.values, header)
    _write_matrix(base / TEST_FILE, bundle.test.values, header)
    with open(base / LABEL_FILE, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label"])
        for v in bundle.test_labels.labels:
            writer.writerow([int(v)])
    return base
