import numpy as np
import pytest

from seqad import (
    AlarmTrack,
    EmptyCurveError,
    LabelTrack,
    ScoreTrack,
    SegmentSet,
    UndefinedMetricError,
    ValidationError,
    adjusted_prf,
    average_detection_delay,
    instance_prf,
    point_adjust,
    sequence_alarm_precision,
    spd_curve,
    spd_integrate,
)
from seqad.metrics import SpdCurvePoint, default_thresholds, score_alarms


def track(bits):
    return LabelTrack(list(bits))


class TestInstancePrf:
    def test_identity(self):
        r = instance_prf(track([0, 1, 0]), track([0, 1, 0]))
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)

    def test_all_negative_prediction(self):
        r = instance_prf(track([0, 0, 0]), track([0, 1, 0]))
        assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)

    def test_hand_count(self):
        r = instance_prf(track([0, 1, 1, 0, 1]), track([0, 1, 1, 1, 0]))
        assert (r.tp, r.fp, r.fn) == (2, 1, 1)
        assert r.precision == pytest.approx(2 / 3)
        assert r.recall == pytest.approx(2 / 3)
        assert r.f1 == pytest.approx(2 / 3)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            instance_prf(track([0, 1]), track([0, 1, 0]))


class TestPointAdjust:
    def test_fills_detected_segment(self):
        out = point_adjust(track([0, 0, 0, 1, 0, 0]), track([0, 0, 1, 1, 1, 0]))
        assert list(out.labels) == [0, 0, 1, 1, 1, 0]

    def test_missed_segment_unchanged(self):
        out = point_adjust(track([0, 0, 0, 0]), track([0, 1, 1, 0]))
        assert list(out.labels) == [0, 0, 0, 0]

    def test_false_positive_survives(self):
        out = point_adjust(track([1, 0, 0]), track([0, 0, 0]))
        assert list(out.labels) == [1, 0, 0]

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 60))
            pred = track(rng.integers(0, 2, n))
            truth = track(rng.integers(0, 2, n))
            once = point_adjust(pred, truth)
            twice = point_adjust(once, truth)
            assert np.array_equal(once.labels, twice.labels)


class TestAdjustedPrf:
    def test_detected_segment_is_perfect(self):
        r = adjusted_prf(track([0, 0, 0, 1, 0, 0]), track([0, 0, 1, 1, 1, 0]))
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)

    def test_equals_instance_on_identical(self):
        pred = truth = track([0, 1, 1, 0, 1])
        assert adjusted_prf(pred, truth) == instance_prf(pred, truth)

    def test_amplification_hand_count(self):
        pred = track([1, 0, 0, 1, 0, 0, 0, 0])
        truth = track([0, 0, 1, 1, 1, 1, 1, 0])
        r = adjusted_prf(pred, truth)
        assert (r.tp, r.fp, r.fn) == (5, 1, 0)
        assert r.precision == pytest.approx(5 / 6)
        assert r.recall == 1.0
        assert r.f1 == pytest.approx(10 / 11)
        assert instance_prf(pred, truth).f1 == pytest.approx(2 / 7)

    def test_never_below_instance_f1(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            n = int(rng.integers(1, 80))
            pred = track(rng.integers(0, 2, n))
            truth = track(rng.integers(0, 2, n))
            assert adjusted_prf(pred, truth).f1 >= instance_prf(pred, truth).f1 - 1e-15


class TestAverageDetectionDelay:
    def test_alarms_at_onsets(self):
        segs = SegmentSet(((5, 9), (20, 30)))
        assert average_detection_delay(AlarmTrack([5, 20]), segs, 10) == 0.0

    def test_no_alarms_charges_delta_max(self):
        segs = SegmentSet(((5, 9),))
        assert average_detection_delay(AlarmTrack([]), segs, 10) == 10.0

    def test_hand_trace(self):
        segs = SegmentSet(((10, 12), (50, 52)))
        assert average_detection_delay(AlarmTrack([12]), segs, 20) == pytest.approx(11.0)

    def test_no_events_undefined(self):
        with pytest.raises(UndefinedMetricError):
            average_detection_delay(AlarmTrack([3]), SegmentSet(()), 10)

    def test_bounds(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            labels = LabelTrack(rng.integers(0, 2, 50))
            from seqad import segments_from_labels

            segs = segments_from_labels(labels)
            if segs.count == 0:
                continue
            alarms = AlarmTrack(np.unique(rng.integers(0, 50, size=5)))
            add = average_detection_delay(alarms, segs, 7)
            assert 0.0 <= add <= 7.0

    def test_window_truncated_at_next_segment(self):
        # alarm at 21 sits in the second event, not in the first event's window
        segs = SegmentSet(((10, 12), (21, 25)))
        add = average_detection_delay(AlarmTrack([21]), segs, 100)
        assert add == pytest.approx((100 + 0) / 2)

    def test_earlier_alarm_never_increases_delay(self):
        segs = SegmentSet(((10, 15), (40, 45)))
        base = average_detection_delay(AlarmTrack([14, 44]), segs, 20)
        better = average_detection_delay(AlarmTrack([11, 14, 44]), segs, 20)
        assert better <= base


class TestSequenceAlarmPrecision:
    def test_all_inside(self):
        segs = SegmentSet(((10, 15),))
        assert sequence_alarm_precision(AlarmTrack([10, 12, 20]), segs, 10) == 1.0

    def test_alarm_before_onset_is_false(self):
        segs = SegmentSet(((10, 15),))
        assert sequence_alarm_precision(AlarmTrack([5]), segs, 20) == 0.0

    def test_hand_trace(self):
        segs = SegmentSet(((10, 15),))
        assert sequence_alarm_precision(AlarmTrack([12, 70]), segs, 20) == 0.5

    def test_late_alarm_inside_segment_is_false(self):
        segs = SegmentSet(((10, 200),))
        assert sequence_alarm_precision(AlarmTrack([150]), segs, 20) == 0.0

    def test_no_alarms_undefined(self):
        with pytest.raises(UndefinedMetricError):
            sequence_alarm_precision(AlarmTrack([]), SegmentSet(((0, 1),)), 10)


class TestScoreAlarms:
    def test_upward_crossings(self):
        scores = ScoreTrack([0.0, 0.8, 0.9, 0.1, 0.0, 0.7, 0.2])
        assert list(score_alarms(scores, 0.5).alarm_times) == [1, 5]

    def test_initial_instant(self):
        assert list(score_alarms(ScoreTrack([0.9, 0.2, 0.8]), 0.5).alarm_times) == [0, 2]

    def test_sustained_excursion_counts_once(self):
        assert list(score_alarms(ScoreTrack([0.0, 1.0, 1.0, 1.0]), 0.5).alarm_times) == [1]


class TestSpdCurve:
    def test_oracle_scores_single_perfect_point(self):
        scores = np.zeros(100)
        scores[[10, 60]] = 1.0
        segs = SegmentSet(((10, 14), (60, 70)))
        curve = spd_curve(ScoreTrack(scores), segs, 10, [0.5])
        assert len(curve.points) == 1
        assert curve.points[0].nadd == 0.0
        assert curve.points[0].precision == 1.0
        assert curve.spd == pytest.approx(1.0, abs=1e-12)

    def test_zero_scores_yield_no_curve(self):
        with pytest.raises(EmptyCurveError):
            spd_curve(ScoreTrack(np.zeros(50)), SegmentSet(((5, 9),)), 10, [0.5, 0.9])

    def test_hand_fixture(self):
        scores = np.zeros(100)
        scores[10] = 1.0  # spurious pulse
        scores[52:] = 1.0  # step inside the segment
        segs = SegmentSet(((50, 60),))
        curve = spd_curve(ScoreTrack(scores), segs, 10, [0.5])
        point = curve.points[0]
        assert point.alarm_count == 2
        assert point.nadd == pytest.approx(0.2)
        assert point.precision == pytest.approx(0.5)

    def test_ties_keep_max_precision(self):
        pts = [
            SpdCurvePoint(0.5, 0.2, 0.1, 3),
            SpdCurvePoint(0.5, 0.9, 0.2, 2),
            SpdCurvePoint(0.1, 0.4, 0.3, 4),
        ]
        # emulate the dedupe by running the full curve path on crafted scores is
        # awkward; assert on spd_integrate ordering invariance instead
        assert spd_integrate(pts) == spd_integrate(sorted(pts, key=lambda p: p.nadd))

    def test_curve_dedupes_equal_nadd(self):
        # two thresholds that produce identical alarms must collapse to one point
        scores = np.zeros(40)
        scores[5] = 1.0
        segs = SegmentSet(((5, 8),))
        curve = spd_curve(ScoreTrack(scores), segs, 10, [0.3, 0.6])
        assert len(curve.points) == 1

    def test_empty_thresholds_rejected(self):
        with pytest.raises(ValidationError):
            spd_curve(ScoreTrack([1.0]), SegmentSet(((0, 0),)), 10, [])


class TestSpdIntegrate:
    def test_single_point_constant_extension(self):
        assert spd_integrate([SpdCurvePoint(0.3, 0.8, 0.0, 1)]) == pytest.approx(0.8)

    def test_straight_line(self):
        pts = [SpdCurvePoint(0.0, 1.0, 0.0, 1), SpdCurvePoint(1.0, 0.0, 0.0, 1)]
        assert spd_integrate(pts) == pytest.approx(0.5)

    @pytest.mark.parametrize("c", [0.0, 0.25, 1.0])
    def test_constant_precision(self, c):
        pts = [SpdCurvePoint(0.0, c, 0.0, 1), SpdCurvePoint(1.0, c, 0.0, 1)]
        assert spd_integrate(pts) == pytest.approx(c)

    def test_all_ones_is_exactly_one(self):
        pts = [SpdCurvePoint(x, 1.0, 0.0, 1) for x in (0.1, 0.4, 0.77)]
        assert spd_integrate(pts) == pytest.approx(1.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyCurveError):
            spd_integrate([])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            spd_integrate([SpdCurvePoint(1.5, 0.5, 0.0, 1)])

    def test_result_in_unit_interval(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            n = int(rng.integers(1, 10))
            pts = [SpdCurvePoint(float(x), float(p), 0.0, 1) for x, p in zip(np.sort(rng.random(n)), rng.random(n))]
            assert 0.0 <= spd_integrate(pts) <= 1.0


def test_default_thresholds_deduplicated_quantiles():
    scores = ScoreTrack(np.concatenate([np.zeros(90), np.linspace(0, 1, 10)]))
    grid = default_thresholds(scores)
    assert np.all(np.diff(grid) > 0)
    assert grid[0] == 0.0 and grid[-1] == 1.0
