"""Sequence-aware anomaly detection evaluation and a calibrated sequential detector.

The package has three layers: evaluation metrics that score detectors by
events and timeliness instead of instances (and a random-guess baseline
showing how point-adjusted F1 rewards pure luck), a nearest-neighbor CUSUM
detector whose alarm threshold comes with an exponential false-alarm-rate
bound, and a harness that runs the experiments behind those claims on CSV or
synthetic data.
"""

from .core import (
    AlarmTrack,
    LabelTrack,
    ScoreTrack,
    SegmentSet,
    TimeSeries,
    labels_from_segments,
    minmax_normalize,
    segments_from_labels,
)
from .data import DatasetBundle, FormatSpec, SyntheticSpec, generate_synthetic, load_dataset, write_bundle
from .detector import (
    CalibrationReport,
    CusumState,
    KnnCalibration,
    ball_volume_constant,
    calibrate_threshold,
    compute_omega0,
    cusum_track,
    cusum_update,
    detect,
    evidence,
    evidence_track,
    far_bound,
    fit_knn,
    lambert_w,
    make_calibration_report,
    omega0_closed_form,
)
from .errors import (
    CalibrationError,
    DegenerateCalibrationError,
    EmptyCurveError,
    FitError,
    NotFittedError,
    ParseError,
    SeqadError,
    UndefinedMetricError,
    ValidationError,
)
from .experiments import (
    DetectorConfig,
    ExperimentReport,
    run_far_experiment,
    run_flaw_demo,
    run_spd_benchmark,
)
from .forecast import (
    ArModel,
    AttentionInput,
    DecoderInput,
    EncoderLayerState,
    decoder_input,
    distill_layer,
    fit_ar,
    full_attention,
    probsparse_attention,
    residuals,
    sparsity_measure,
)
from .metrics import (
    PrfResult,
    SpdCurve,
    SpdCurvePoint,
    adjusted_prf,
    average_detection_delay,
    instance_prf,
    point_adjust,
    sequence_alarm_precision,
    spd_curve,
    spd_integrate,
)
from .randomguess import (
    ExpectedAdjustedPr,
    RandomGuessSpec,
    expected_adjusted_pr,
    monte_carlo_adjusted_f1,
    simulate_random_guess,
)
from .reporting import emit_report, parse_report, read_csv_table

__version__ = "0.1.0"
