"""Random-guess baseline for point-adjusted evaluation.

A guesser that alarms independently at each instance with probability p gets
every lucky hit amplified to the full segment length by point-adjustment,
while each false positive costs one instance. The closed form below gives the
expected adjusted counts (a ratio of expectations); the Monte-Carlo routines
push actual Bernoulli predictions through the real point-adjust pipeline and
report the expectation of the ratio. Both are surfaced because they answer
slightly different questions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabelTrack, segments_from_labels
from .errors import ValidationError
from .metrics import _adjust_against_segments, _f1

__all__ = [
    "RandomGuessSpec",
    "ExpectedAdjustedPr",
    "McSummary",
    "expected_adjusted_pr",
    "simulate_random_guess",
    "monte_carlo_summary",
    "monte_carlo_adjusted_f1",
]


@dataclass(frozen=True)
class RandomGuessSpec:
    """Per-instance alarm probability and RNG seed."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"alarm probability must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class ExpectedAdjustedPr:
    """Expected adjusted precision/recall/F1 and the expectation terms behind them."""

    precision: float
    recall: float
    f1: float
    expected_tp: float
    expected_fp: float
    expected_fn: float


def expected_adjusted_pr(p: float, segment_lengths, n_nominal: int) -> ExpectedAdjustedPr:
    """Closed-form expected adjusted counts for i.i.d. Bernoulli(p) alarms.

    A segment of length M is hit with probability 1 - (1-p)^M and then counts
    M true positives; false positives arrive at rate p on the N nominal
    instances. p=0 returns all zeros.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"alarm probability must be in [0, 1], got {p}")
    if n_nominal < 0:
        raise ValidationError(f"nominal count must be >= 0, got {n_nominal}")
    m = np.asarray(segment_lengths, dtype=float).reshape(-1)
    if m.size == 0:
        raise ValidationError("need at least one segment length")
    if np.any(m < 1):
        raise ValidationError("segment lengths must be >= 1")
    if p == 1.0:
        hit = np.ones_like(m)
    else:
        hit = -np.expm1(m * np.log1p(-p))  # 1 - (1-p)^M without cancellation
    etp = float(np.sum(m * hit))
    efp = float(n_nominal) * p
    efn = float(np.sum(m)) - etp
    precision = etp / (etp + efp) if etp + efp > 0 else 0.0
    recall = etp / float(np.sum(m))
    return ExpectedAdjustedPr(precision, recall, _f1(precision, recall), etp, efp, efn)


def simulate_random_guess(spec: RandomGuessSpec, length: int) -> LabelTrack:
    """One i.i.d. Bernoulli(p) prediction track, fully determined by the seed."""
    if length < 1:
        raise ValidationError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(spec.seed)
    return LabelTrack((rng.random(length) < spec.p).astype(np.int64))


@dataclass(frozen=True)
class McSummary:
    """Monte-Carlo means and standard errors over independent trials."""

    trials: int
    mean_f1: float
    stderr_f1: float
    mean_tp: float
    stderr_tp: float
    mean_fp: float
    stderr_fp: float
    mean_fn: float
    stderr_fn: float
    mean_instance_f1: float
    stderr_instance_f1: float


def _stderr(samples: np.ndarray) -> float:
    if samples.shape[0] < 2:
        return 0.0
    return float(samples.std(ddof=1) / np.sqrt(samples.shape[0]))


def monte_carlo_summary(spec: RandomGuessSpec, truth: LabelTrack, trials: int) -> McSummary:
    """Adjusted F1 / counts and instance F1 of random guessing, averaged over trials.

    Trials draw from SeedSequence children of the master seed, so the result
    does not depend on execution order.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    segments = segments_from_labels(truth)
    t = truth.labels.astype(bool)
    n_pos = int(t.sum())
    length = truth.length
    f1s = np.empty(trials)
    tps = np.empty(trials)
    fps = np.empty(trials)
    fns = np.empty(trials)
    inst_f1s = np.empty(trials)
    for i, child in enumerate(np.random.SeedSequence(spec.seed).spawn(trials)):
        rng = np.random.default_rng(child)
        pred = rng.random(length) < spec.p
        adj = _adjust_against_segments(pred.astype(np.int64), segments).astype(bool)
        tp = int(np.count_nonzero(adj & t))
        fp = int(np.count_nonzero(adj & ~t))
        fn = n_pos - tp
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / n_pos if n_pos > 0 else 0.0
        tps[i], fps[i], fns[i] = tp, fp, fn
        f1s[i] = _f1(precision, recall)
        itp = int(np.count_nonzero(pred & t))
        ifp = int(np.count_nonzero(pred & ~t))
        ip = itp / (itp + ifp) if itp + ifp > 0 else 0.0
        ir = itp / n_pos if n_pos > 0 else 0.0
        inst_f1s[i] = _f1(ip, ir)
    return McSummary(
        trials=trials,
        mean_f1=float(f1s.mean()),
        stderr_f1=_stderr(f1s),
        mean_tp=float(tps.mean()),
        stderr_tp=_stderr(tps),
        mean_fp=float(fps.mean()),
        stderr_fp=_stderr(fps),
        mean_fn=float(fns.mean()),
        stderr_fn=_stderr(fns),
        mean_instance_f1=float(inst_f1s.mean()),
        stderr_instance_f1=_stderr(inst_f1s),
    )


def monte_carlo_adjusted_f1(spec: RandomGuessSpec, truth: LabelTrack, trials: int) -> tuple[float, float]:
    """Mean and standard error of the adjusted F1 over independent trials."""
    summary = monte_carlo_summary(spec, truth, trials)
    return summary.mean_f1, summary.stderr_f1
