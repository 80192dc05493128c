"""Instance-based, point-adjusted, and sequence-aware evaluation metrics.

Sequence-aware metrics score a detector by events rather than instances. Each
anomalous event starting at tau gets a detection window [tau, tau + delta_max]
(inclusive), truncated at the next event's start so that one alarm can never be
credited to an earlier event it follows. An event's delay is the offset of the
first alarm inside its window, or delta_max when no alarm lands there. Alarm
precision is the fraction of all alarms falling inside some window; alarms
inside a ground-truth segment but past its window count as false. The
precision-vs-normalized-delay curve integrates to a single scalar in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AlarmTrack, LabelTrack, ScoreTrack, SegmentSet, segments_from_labels
from .errors import EmptyCurveError, UndefinedMetricError, ValidationError

__all__ = [
    "PrfResult",
    "SpdCurvePoint",
    "SpdCurve",
    "instance_prf",
    "point_adjust",
    "adjusted_prf",
    "average_detection_delay",
    "sequence_alarm_precision",
    "score_alarms",
    "default_thresholds",
    "build_curve",
    "curve_point",
    "spd_curve",
    "spd_integrate",
]


@dataclass(frozen=True)
class PrfResult:
    """Precision/recall/F1 with the underlying instance counts."""

    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class SpdCurvePoint:
    nadd: float
    precision: float
    threshold: float
    alarm_count: int


@dataclass(frozen=True)
class SpdCurve:
    """Precision vs normalized-delay points (ascending nadd) and their area."""

    points: tuple[SpdCurvePoint, ...]
    spd: float


def _f1(precision: float, recall: float) -> float:
    denom = precision + recall
    return 2.0 * precision * recall / denom if denom > 0 else 0.0


def _check_same_length(pred: LabelTrack, truth: LabelTrack) -> None:
    if pred.length != truth.length:
        raise ValidationError(
            f"prediction length {pred.length} != truth length {truth.length}"
        )


def instance_prf(pred: LabelTrack, truth: LabelTrack) -> PrfResult:
    """Standard per-instance precision/recall/F1 (0 when a denominator is 0)."""
    _check_same_length(pred, truth)
    p = pred.labels.astype(bool)
    t = truth.labels.astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return PrfResult(precision, recall, _f1(precision, recall), tp, fp, fn)


def _adjust_against_segments(pred: np.ndarray, segments: SegmentSet) -> np.ndarray:
    out = pred.copy()
    for s, e in segments.segments:
        if out[s : e + 1].any():
            out[s : e + 1] = 1
    return out


def point_adjust(pred: LabelTrack, truth: LabelTrack) -> LabelTrack:
    """Mark a whole ground-truth segment positive if any prediction hits it.

    Predictions outside ground-truth segments are left unchanged, so false
    positives still count once.
    """
    _check_same_length(pred, truth)
    segments = segments_from_labels(truth)
    return LabelTrack(_adjust_against_segments(pred.labels, segments))


def adjusted_prf(pred: LabelTrack, truth: LabelTrack) -> PrfResult:
    """Instance precision/recall/F1 after point-adjusting the predictions."""
    return instance_prf(point_adjust(pred, truth), truth)


def _detection_windows(segments: SegmentSet, delta_max: int) -> list[tuple[int, int]]:
    # Window i is [tau_i, tau_i + delta_max], cut short at the next event's start.
    starts = [s for s, _ in segments.segments]
    windows = []
    for i, s in enumerate(starts):
        end = s + delta_max
        if i + 1 < len(starts):
            end = min(end, starts[i + 1] - 1)
        windows.append((s, end))
    return windows


def average_detection_delay(alarms: AlarmTrack, segments: SegmentSet, delta_max: int) -> float:
    """Mean delay of the first in-window alarm per event; misses cost delta_max."""
    if segments.count == 0:
        raise UndefinedMetricError("average detection delay needs at least one event")
    if delta_max < 1:
        raise ValidationError(f"delta_max must be >= 1, got {delta_max}")
    times = alarms.alarm_times
    total = 0.0
    for start, end in _detection_windows(segments, delta_max):
        i = np.searchsorted(times, start, side="left")
        if i < times.shape[0] and times[i] <= end:
            total += float(times[i] - start)
        else:
            total += float(delta_max)
    return total / segments.count


def sequence_alarm_precision(alarms: AlarmTrack, segments: SegmentSet, delta_max: int) -> float:
    """Fraction of alarms that land inside some event's detection window."""
    if alarms.count == 0:
        raise UndefinedMetricError("alarm precision needs at least one alarm")
    if delta_max < 1:
        raise ValidationError(f"delta_max must be >= 1, got {delta_max}")
    times = alarms.alarm_times
    hit = np.zeros(times.shape[0], dtype=bool)
    for start, end in _detection_windows(segments, delta_max):
        hit |= (times >= start) & (times <= end)
    return float(np.count_nonzero(hit)) / alarms.count


def score_alarms(scores: ScoreTrack, threshold: float) -> AlarmTrack:
    """Alarm times from a score track: upward crossings of the threshold.

    An alarm fires at t when score_t >= threshold and score_{t-1} < threshold,
    plus at t=0 when the track starts at or above the threshold. Event-based
    extraction keeps one sustained excursion from counting as many alarms.
    """
    s = scores.scores
    above = s >= threshold
    crossings = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    if above[0]:
        crossings = np.concatenate(([0], crossings))
    return AlarmTrack(crossings)


def default_thresholds(scores: ScoreTrack, n: int = 100) -> np.ndarray:
    """Scale-free threshold grid: n evenly spaced quantiles, deduplicated."""
    if n < 1:
        raise ValidationError(f"need at least one quantile, got {n}")
    return np.unique(np.quantile(scores.scores, np.linspace(0.0, 1.0, n)))


def build_curve(points) -> SpdCurve:
    """Assemble raw (nadd, precision) points into a curve: sort ascending by
    normalized delay, keep only the best precision among ties, integrate."""
    raw = sorted(points, key=lambda p: (p.nadd, -p.precision))
    if not raw:
        raise EmptyCurveError("no curve points")
    kept: list[SpdCurvePoint] = []
    for pt in raw:
        if kept and kept[-1].nadd == pt.nadd:
            continue  # same nadd, lower-or-equal precision: drop
        kept.append(pt)
    return SpdCurve(tuple(kept), spd_integrate(kept))


def curve_point(
    alarms: AlarmTrack, segments: SegmentSet, delta_max: int, threshold: float
) -> SpdCurvePoint:
    """One operating point of the precision-delay trade-off."""
    add = average_detection_delay(alarms, segments, delta_max)
    prec = sequence_alarm_precision(alarms, segments, delta_max)
    return SpdCurvePoint(add / delta_max, prec, threshold, alarms.count)


def spd_curve(
    scores: ScoreTrack,
    segments: SegmentSet,
    delta_max: int,
    thresholds,
) -> SpdCurve:
    """Sweep thresholds over a score track and build the precision-delay curve.

    Thresholds yielding zero alarms contribute nothing (their precision is
    0/0); if every threshold does, there is no curve. Ties on normalized delay
    keep the best precision.
    """
    thresholds = np.asarray(thresholds, dtype=float).reshape(-1)
    if thresholds.size == 0:
        raise ValidationError("threshold list must be non-empty")
    raw: list[SpdCurvePoint] = []
    for h in thresholds:
        alarms = score_alarms(scores, float(h))
        if alarms.count == 0:
            continue
        raw.append(curve_point(alarms, segments, delta_max, float(h)))
    if not raw:
        raise EmptyCurveError("no threshold produced any alarm")
    return build_curve(raw)


def spd_integrate(points) -> float:
    """Trapezoidal area of precision over normalized delay on [0, 1].

    The first and last precisions extend as constants to the interval ends,
    the least-assumption completion of a partially observed curve.
    """
    pts = sorted(points, key=lambda p: p.nadd)
    if not pts:
        raise EmptyCurveError("cannot integrate an empty curve")
    for p in pts:
        if not 0.0 <= p.nadd <= 1.0:
            raise ValidationError(f"nadd {p.nadd} outside [0, 1]")
    xs = np.concatenate(([0.0], [p.nadd for p in pts], [1.0]))
    ys = np.concatenate(([pts[0].precision], [p.precision for p in pts], [pts[-1].precision]))
    return float(np.trapezoid(ys, xs))
