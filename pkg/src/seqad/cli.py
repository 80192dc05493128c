"""Command-line interface.

Subcommands: eval, flaw-demo, calibrate, detect, far-validate, spd-bench,
synth. Commands that take --out write the report there (json or csv per
--format) and, for kinds that have one, render a PNG figure alongside it;
--no-plot disables the figure. Exit codes: 0 success, 1 validation error,
2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .core import LabelTrack, ScoreTrack, segments_from_labels
from .data import DatasetBundle, FormatSpec, SyntheticSpec, _read_matrix, generate_synthetic, load_dataset, write_bundle
from .detector import detect, evidence_track, fit_knn, make_calibration_report
from .errors import ParseError, SeqadError, ValidationError
from .experiments import (
    DetectorConfig,
    ExperimentReport,
    run_far_experiment,
    run_flaw_demo,
    run_spd_benchmark,
)
from .metrics import adjusted_prf, default_thresholds, instance_prf, spd_curve
from .reporting import emit_report

DEFAULT_DELTA_MAX = 100
DEFAULT_FAR = 1e-4
DEFAULT_ALPHA = 0.05


def _fmt(args) -> FormatSpec:
    return FormatSpec(has_header=not args.no_header)


def _read_features(path: str, fmt: FormatSpec) -> np.ndarray:
    return _read_matrix(Path(path), fmt)


def _read_column(path: str, fmt: FormatSpec) -> np.ndarray:
    data = _read_matrix(Path(path), fmt)
    if data.shape[1] != 1:
        raise ValidationError(f"{path}: expected a single column, found {data.shape[1]}")
    return data.reshape(-1)


def _parse_thresholds(text: str) -> np.ndarray:
    try:
        values = np.array([float(tok) for tok in text.split(",") if tok.strip()])
    except ValueError:
        raise ValidationError(f"could not parse thresholds {text!r}") from None
    if values.size == 0:
        raise ValidationError("threshold list is empty")
    return values


def _write_outputs(report: ExperimentReport, args) -> None:
    if getattr(args, "out", None):
        out = Path(args.out)
        emit_report(report, out, format=args.format)
        print(f"wrote {out}")
        if not args.no_plot:
            from .plots import save_report_figure

            figure = save_report_figure(report, out.with_suffix(".png"))
            if figure is not None:
                print(f"wrote {figure}")


def _default_flaw_bundle(seed: int) -> DatasetBundle:
    spec = SyntheticSpec(
        length=12100,
        dims=1,
        segments=((5000, 500, 5.0), (9000, 600, 5.0)),
        seed=seed,
    )
    return generate_synthetic(spec)


def _default_shift_bundle(seed: int) -> DatasetBundle:
    spec = SyntheticSpec(
        length=4000,
        dims=2,
        segments=((800, 100, 5.0), (2000, 100, 5.0), (3200, 100, 5.0)),
        seed=seed,
        train_length=4000,
    )
    return generate_synthetic(spec)


def cmd_eval(args) -> int:
    fmt = _fmt(args)
    pred = LabelTrack(_read_column(args.pred, fmt).astype(np.int64))
    truth = LabelTrack(_read_column(args.truth, fmt).astype(np.int64))
    inst = instance_prf(pred, truth)
    adj = adjusted_prf(pred, truth)
    metrics = {
        "instance_precision": inst.precision,
        "instance_recall": inst.recall,
        "instance_f1": inst.f1,
        "adjusted_precision": adj.precision,
        "adjusted_recall": adj.recall,
        "adjusted_f1": adj.f1,
    }
    tables = {}
    if args.scores:
        scores = ScoreTrack(_read_column(args.scores, fmt))
        if scores.length != truth.length:
            raise ValidationError(
                f"scores length {scores.length} != labels length {truth.length}"
            )
        segments = segments_from_labels(truth)
        if args.thresholds:
            grid = _parse_thresholds(args.thresholds)
        else:
            grid = default_thresholds(scores)
        curve = spd_curve(scores, segments, args.delta_max, grid)
        metrics["spd"] = curve.spd
        tables["spd_curve"] = tuple(
            {"nadd": p.nadd, "precision": p.precision, "threshold": p.threshold, "alarm_count": p.alarm_count}
            for p in curve.points
        )
    report = ExperimentReport(
        kind="eval",
        config={"pred": args.pred, "truth": args.truth, "scores": args.scores, "delta_max": args.delta_max},
        metrics=metrics,
        tables=tables,
    )
    print(f"instance  P={inst.precision:.4f} R={inst.recall:.4f} F1={inst.f1:.4f}")
    print(f"adjusted  P={adj.precision:.4f} R={adj.recall:.4f} F1={adj.f1:.4f}")
    if "spd" in metrics:
        print(f"precision-delay area: {metrics['spd']:.4f}")
    _write_outputs(report, args)
    return 0


def cmd_flaw_demo(args) -> int:
    if args.data:
        bundle = load_dataset(args.data, _fmt(args))
    else:
        bundle = _default_flaw_bundle(args.seed)
    report = run_flaw_demo(bundle, args.p, args.trials, seed=args.seed)
    m = report.metrics
    print(f"dataset {bundle.name}: p={args.p}, trials={args.trials}")
    print(
        f"analytic adjusted   P={m['analytic_precision']:.4f} R={m['analytic_recall']:.4f} "
        f"F1={m['analytic_f1']:.4f}"
    )
    print(f"Monte-Carlo adjusted F1={m['mc_adjusted_f1']:.4f} (stderr {m['mc_adjusted_f1_stderr']:.2e})")
    print(f"Monte-Carlo instance F1={m['mc_instance_f1']:.4f} (stderr {m['mc_instance_f1_stderr']:.2e})")
    _write_outputs(report, args)
    return 0


def _calibration_report_obj(args, features: np.ndarray):
    calib = fit_knn(
        features,
        split_ratio=args.split_ratio,
        k=args.k,
        alpha=args.alpha,
        seed=args.seed,
        phi_safety=args.phi_safety,
    )
    return calib, make_calibration_report(calib, args.far)


def cmd_calibrate(args) -> int:
    features = _read_features(args.train, _fmt(args))
    _, calrep = _calibration_report_obj(args, features)
    payload = calrep.as_dict()
    report = ExperimentReport(
        kind="calibration",
        config={"train": args.train, "split_ratio": args.split_ratio, "phi_safety": args.phi_safety},
        metrics=payload,
        tables={"calibration": (payload,)},
        seed=args.seed,
    )
    print(f"omega0={calrep.omega0:.6g}  h={calrep.h:.6g}  (FAR target {calrep.far_target:g})")
    print(f"d_alpha={calrep.d_alpha:.6g}  phi={calrep.phi:.6g}  m={calrep.m}  k={calrep.k}")
    if calrep.heuristic_bound:
        print("note: k != 1, the false-alarm bound is heuristic")
    _write_outputs(report, args)
    return 0


def cmd_detect(args) -> int:
    fmt = _fmt(args)
    train = _read_features(args.train, fmt)
    test = _read_features(args.test, fmt)
    calib, calrep = _calibration_report_obj(args, train)
    ev = evidence_track(test, calib)
    h = args.threshold if args.threshold is not None else calrep.h
    if not h > 0:
        raise ValidationError(f"threshold must be > 0, got {h}")
    alarms = detect(ev, h)
    report = ExperimentReport(
        kind="detect",
        config={
            "train": args.train,
            "test": args.test,
            "h": h,
            "split_ratio": args.split_ratio,
            "calibration": calrep.as_dict(),
        },
        metrics={"alarm_count": alarms.count, "h": h, "omega0": calrep.omega0},
        tables={"alarms": tuple({"t": int(t)} for t in alarms.alarm_times)},
        seed=args.seed,
    )
    print(f"h={h:.6g}: {alarms.count} alarm(s)")
    if alarms.count:
        preview = ", ".join(str(int(t)) for t in alarms.alarm_times[:10])
        more = " ..." if alarms.count > 10 else ""
        print(f"alarm times: {preview}{more}")
    _write_outputs(report, args)
    return 0


def cmd_far_validate(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 1]))
    nominal = rng.standard_normal((args.calibration_size, args.dim))
    calib = fit_knn(nominal, k=args.k, alpha=args.alpha, seed=args.seed, phi_safety=args.phi_safety)
    calrep = make_calibration_report(calib, args.far)
    if args.thresholds:
        grid = _parse_thresholds(args.thresholds)
    else:
        grid = np.linspace(calrep.h / 20.0, calrep.h, args.grid_points)
    report = run_far_experiment(calib, grid, args.length, seed=args.seed, far_target=args.far)
    print(f"omega0={report.metrics['omega0']:.6g}, stream length {args.length}")
    print(f"{'h':>12} {'alarms':>8} {'period':>14} {'bound':>14} ok")
    for row in report.tables["far_curve"]:
        period = row["empirical_period"]
        period_text = f"{period:14.1f}" if math.isfinite(period) else f"{'inf':>14}"
        print(
            f"{row['h']:12.4f} {row['alarm_count']:8d} {period_text} {row['bound_period']:14.1f} "
            f"{'yes' if row['holds'] else 'NO'}"
        )
    _write_outputs(report, args)
    return 0


def cmd_spd_bench(args) -> int:
    if args.data:
        bundle = load_dataset(args.data, _fmt(args))
    else:
        bundle = _default_shift_bundle(args.seed)
    config = DetectorConfig(
        ar_order=args.order,
        k=args.k,
        alpha=args.alpha,
        far_target=args.far,
        split_ratio=args.split_ratio,
        phi_safety=args.phi_safety,
    )
    thresholds = _parse_thresholds(args.thresholds) if args.thresholds else None
    report = run_spd_benchmark(bundle, config, delta_max=args.delta_max, thresholds=thresholds, seed=args.seed)
    m = report.metrics
    print(f"dataset {bundle.name}: precision-delay area {m['spd']:.4f} (random guess {m['spd_random_guess']:.4f})")
    precision_text = "n/a" if m["precision_at_h"] is None else f"{m['precision_at_h']:.4f}"
    print(
        f"at calibrated h={m['h']:.4g}: {m['alarms_at_h']} alarms, "
        f"delay {m['add_at_h']:.2f}, precision {precision_text}"
    )
    _write_outputs(report, args)
    return 0


def cmd_synth(args) -> int:
    segments = []
    if args.segments:
        for token in args.segments.split(","):
            parts = token.split(":")
            if len(parts) != 3:
                raise ValidationError(f"segment {token!r} is not start:length:shift")
            try:
                segments.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise ValidationError(f"segment {token!r} is not start:length:shift") from None
    spec = SyntheticSpec(
        length=args.length,
        dims=args.dims,
        noise=args.noise,
        rho=args.rho,
        segments=tuple(segments),
        seed=args.seed,
        train_length=args.train_length,
    )
    bundle = generate_synthetic(spec)
    base = write_bundle(bundle, args.out)
    print(f"wrote synthetic bundle to {base} (T={spec.length}, d={spec.dims}, {len(segments)} segment(s))")
    return 0


def _add_common(parser: argparse.ArgumentParser, *, out: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    parser.add_argument("--no-header", action="store_true", help="input CSVs have no header row")
    if out:
        parser.add_argument("--out", help="write the report to this path")
        parser.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
        parser.add_argument("--no-plot", action="store_true", help="skip the PNG figure next to --out")


def _add_calibration_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="significance level")
    parser.add_argument("--k", type=int, default=1, help="neighbor count")
    parser.add_argument("--far", type=float, default=DEFAULT_FAR, help="target false alarm rate")
    parser.add_argument("--split-ratio", type=float, default=0.5, help="calibration-query fraction")
    parser.add_argument("--phi-safety", type=float, default=1.0, help="multiplier on the evidence bound")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqad", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="metrics on prediction/label files")
    p.add_argument("--pred", required=True, help="predicted labels CSV (single column)")
    p.add_argument("--truth", required=True, help="ground-truth labels CSV (single column)")
    p.add_argument("--scores", help="score track CSV for the precision-delay curve")
    p.add_argument("--delta-max", type=int, default=DEFAULT_DELTA_MAX)
    p.add_argument("--thresholds", help="comma-separated thresholds (default: score quantiles)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("flaw-demo", help="random-guess adjusted-F1 demonstration")
    p.add_argument("--data", help="dataset directory (default: synthetic bundle)")
    p.add_argument("--p", type=float, default=0.01, help="per-instance alarm probability")
    p.add_argument("--trials", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_flaw_demo)

    p = sub.add_parser("calibrate", help="fit the detector and report its threshold")
    p.add_argument("--train", required=True, help="nominal feature CSV")
    _add_calibration_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("detect", help="run the detector on feature CSVs")
    p.add_argument("--train", required=True, help="nominal feature CSV")
    p.add_argument("--test", required=True, help="feature CSV to scan")
    p.add_argument("--threshold", type=float, help="explicit threshold (default: calibrated from --far)")
    _add_calibration_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("far-validate", help="empirical false-alarm periods vs the bound")
    p.add_argument("--dim", type=int, default=2, help="feature dimension")
    p.add_argument("--calibration-size", type=int, default=10000, help="nominal sample size")
    p.add_argument("--length", type=int, default=100000, help="stream length")
    p.add_argument("--grid-points", type=int, default=10)
    p.add_argument("--thresholds", help="comma-separated h grid (default: spans the calibrated h)")
    _add_calibration_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_far_validate)

    p = sub.add_parser("spd-bench", help="end-to-end precision-delay benchmark")
    p.add_argument("--data", help="dataset directory (default: synthetic mean-shift bundle)")
    p.add_argument("--delta-max", type=int, default=DEFAULT_DELTA_MAX)
    p.add_argument("--order", type=int, default=5, help="autoregression order")
    p.add_argument("--thresholds", help="comma-separated thresholds (default: statistic quantiles)")
    _add_calibration_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_spd_bench)

    p = sub.add_parser("synth", help="emit a synthetic dataset directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--length", type=int, default=4000)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--segments", help="comma-separated start:length:shift triples")
    p.add_argument("--noise", choices=("iid", "ar1"), default="iid")
    p.add_argument("--rho", type=float, default=0.0, help="AR(1) coefficient")
    p.add_argument("--train-length", type=int, default=None)
    _add_common(p, out=False)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SeqadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
