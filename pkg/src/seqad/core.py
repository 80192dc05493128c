"""Core data model: series, labels, segments, alarms, scores, normalization.

All types are immutable after construction (arrays are copied and marked
read-only), so they can be shared freely across worker threads. Time is a
0-based integer index and anomalous segments are inclusive index intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "TimeSeries",
    "LabelTrack",
    "SegmentSet",
    "AlarmTrack",
    "ScoreTrack",
    "MinMaxStats",
    "segments_from_labels",
    "labels_from_segments",
    "minmax_normalize",
    "fit_minmax",
    "apply_minmax",
]


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """A T x d matrix of real-valued observations (rows = time, columns = dims)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValidationError(f"series must be 1-D or 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"series must have T >= 1 and d >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("series contains non-finite values")
        object.__setattr__(self, "values", _frozen_array(arr, float))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelTrack:
    """Per-instance binary labels; 1 marks an anomalous instance."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 1:
            raise ValidationError(f"labels must be 1-D, got ndim={arr.ndim}")
        if arr.size and not np.all(np.isin(arr, (0, 1))):
            bad = arr[~np.isin(arr, (0, 1))][0]
            raise ValidationError(f"labels must be 0 or 1, found {bad!r}")
        object.__setattr__(self, "labels", _frozen_array(arr, np.int64))

    @property
    def length(self) -> int:
        return self.labels.shape[0]

    @property
    def positives(self) -> int:
        return int(self.labels.sum())


@dataclass(frozen=True)
class SegmentSet:
    """Disjoint, ascending anomalous intervals (start, end), both inclusive."""

    segments: tuple[tuple[int, int], ...]

    def __post_init__(self):
        segs = tuple((int(s), int(e)) for s, e in self.segments)
        prev_end = -1
        for s, e in segs:
            if s < 0 or e < s:
                raise ValidationError(f"invalid segment ({s}, {e})")
            if s <= prev_end:
                raise ValidationError(f"segments must be disjoint and sorted; ({s}, {e}) overlaps or is out of order")
            prev_end = e
        object.__setattr__(self, "segments", segs)

    @property
    def count(self) -> int:
        """Number of anomalous events."""
        return len(self.segments)

    @property
    def lengths(self) -> np.ndarray:
        """Event durations in instances."""
        return np.array([e - s + 1 for s, e in self.segments], dtype=np.int64)

    @property
    def starts(self) -> np.ndarray:
        return np.array([s for s, _ in self.segments], dtype=np.int64)


@dataclass(frozen=True)
class AlarmTrack:
    """Strictly increasing alarm time indices produced by a detector."""

    alarm_times: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alarm_times, dtype=np.int64).reshape(-1)
        if arr.size:
            if np.any(arr < 0):
                raise ValidationError("alarm times must be non-negative")
            if np.any(np.diff(arr) <= 0):
                raise ValidationError("alarm times must be strictly increasing")
        object.__setattr__(self, "alarm_times", _frozen_array(arr, np.int64))

    @property
    def count(self) -> int:
        return self.alarm_times.shape[0]


@dataclass(frozen=True)
class ScoreTrack:
    """Per-instance real-valued anomaly statistic."""

    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float).reshape(-1)
        if arr.size < 1:
            raise ValidationError("score track must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("score track contains non-finite values")
        object.__setattr__(self, "scores", _frozen_array(arr, float))

    @property
    def length(self) -> int:
        return self.scores.shape[0]


def segments_from_labels(labels: LabelTrack) -> SegmentSet:
    """Group maximal runs of consecutive 1s into segments."""
    on = np.flatnonzero(labels.labels)
    if on.size == 0:
        return SegmentSet(())
    breaks = np.flatnonzero(np.diff(on) > 1) + 1
    runs = np.split(on, breaks)
    return SegmentSet(tuple((int(r[0]), int(r[-1])) for r in runs))


def labels_from_segments(segments: SegmentSet, length: int) -> LabelTrack:
    """Inverse of segments_from_labels for segments within [0, length-1]."""
    if length < 0:
        raise ValidationError(f"length must be >= 0, got {length}")
    out = np.zeros(length, dtype=np.int64)
    for s, e in segments.segments:
        if e >= length:
            raise ValidationError(f"segment ({s}, {e}) out of range for length {length}")
        out[s : e + 1] = 1
    return LabelTrack(out)


@dataclass(frozen=True)
class MinMaxStats:
    """Per-dimension min/max, fit on one series and applicable to another."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _frozen_array(self.mins, float))
        object.__setattr__(self, "maxs", _frozen_array(self.maxs, float))


def fit_minmax(series: TimeSeries) -> MinMaxStats:
    """Compute per-dimension min/max (typically on the training split)."""
    return MinMaxStats(series.values.min(axis=0), series.values.max(axis=0))


def apply_minmax(series: TimeSeries, stats: MinMaxStats) -> TimeSeries:
    """Rescale with previously fitted statistics.

    Constant dimensions (max == min) map to 0. Values outside the fitted
    range land outside [0, 1]; they are not clipped.
    """
    if stats.mins.shape[0] != series.dims:
        raise ValidationError(
            f"stats fitted for {stats.mins.shape[0]} dims, series has {series.dims}"
        )
    span = stats.maxs - stats.mins
    denom = np.where(span > 0, span, 1.0)
    return TimeSeries((series.values - stats.mins) / denom)


def minmax_normalize(series: TimeSeries) -> TimeSeries:
    """Rescale each dimension to [0, 1]; constant dimensions map to 0."""
    return apply_minmax(series, fit_minmax(series))
