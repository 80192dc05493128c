"""Nearest-neighbor CUSUM detector with a calibrated false-alarm threshold.

Calibration splits a nominal sample into query and reference halves, takes the
(1-alpha) percentile d_alpha of the k-NN distances as a baseline, and scores a
test point x by the evidence D = d(x)^m - d_alpha^m. Evidence accumulates in a
non-negative CUSUM statistic; an alarm fires when it reaches a threshold h.

Under a local-uniformity model the nominal evidence density is a truncated
exponential on [-d_alpha^m, phi], which yields an exponential bound on the
false alarm rate: FAR <= exp(-omega0 * h), where omega0 is the positive root
of the evidence moment condition E[exp(omega * D)] = 1. `compute_omega0`
solves that equation exactly; the Lambert-W expression obtained by letting
d_alpha^m -> 0 is available as `omega0_closed_form` and can deviate wildly
from the exact root outside its asymptotic regime, so it is only a
diagnostic. Inverting the bound gives the threshold for a target rate:
h = -log(FAR) / omega0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .core import AlarmTrack, TimeSeries
from .errors import (
    CalibrationError,
    DegenerateCalibrationError,
    ValidationError,
)

__all__ = [
    "KnnCalibration",
    "CusumState",
    "CalibrationReport",
    "fit_knn",
    "evidence",
    "evidence_track",
    "cusum_update",
    "cusum_track",
    "detect",
    "ball_volume_constant",
    "lambert_w",
    "omega0_closed_form",
    "compute_omega0",
    "calibrate_threshold",
    "far_bound",
    "make_calibration_report",
]

_BRANCH_POINT = -math.exp(-1.0)  # -1/e, left edge of the real Lambert-W domain


@dataclass(frozen=True)
class KnnCalibration:
    """Everything the detector needs after training on nominal data."""

    reference: np.ndarray  # (N2, m) reference partition
    d_alpha: float
    phi: float
    m: int
    k: int
    alpha: float
    split_seed: int
    n_calibration: int  # N1, query partition size
    n_reference: int  # N2
    tree: cKDTree = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ref = np.ascontiguousarray(np.atleast_2d(np.asarray(self.reference, dtype=float)))
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "tree", cKDTree(ref))


def _as_matrix(features) -> np.ndarray:
    if isinstance(features, TimeSeries):
        return features.values
    arr = np.asarray(features, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def nearest_rank_percentile(sorted_values: np.ndarray, q: float) -> float:
    """Nearest-rank percentile: smallest value with more than a q fraction at or below."""
    n = sorted_values.shape[0]
    return float(sorted_values[min(n - 1, int(math.floor(q * n)))])


def fit_knn(
    nominal_features,
    split_ratio: float = 0.5,
    k: int = 1,
    alpha: float = 0.05,
    seed: int = 0,
    phi_safety: float = 1.0,
) -> KnnCalibration:
    """Calibrate the detector on anomaly-free features.

    The nominal sample is randomly split; `split_ratio` is the fraction used
    as calibration queries, the rest becomes the reference set. d_alpha is the
    (1-alpha) nearest-rank percentile of the k-NN query distances and phi the
    largest calibration evidence max(d_i^m) - d_alpha^m, optionally inflated
    by `phi_safety` since a finite-sample maximum understates the true bound.
    """
    x = _as_matrix(nominal_features)
    n, m = x.shape
    if n < 4:
        raise ValidationError(f"need at least 4 nominal points, got {n}")
    if not 0.0 < split_ratio < 1.0:
        raise ValidationError(f"split_ratio must be in (0, 1), got {split_ratio}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if phi_safety <= 0:
        raise ValidationError(f"phi_safety must be > 0, got {phi_safety}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n1 = min(max(int(round(split_ratio * n)), 1), n - 1)
    queries = x[perm[:n1]]
    reference = x[perm[n1:]]
    if reference.shape[0] < k:
        raise ValidationError(f"reference partition has {reference.shape[0]} points, need >= k={k}")
    tree = cKDTree(reference)
    dist = tree.query(queries, k=k, workers=-1)[0]
    if k > 1:
        dist = dist[:, -1]
    dist = np.sort(dist)
    d_alpha = nearest_rank_percentile(dist, 1.0 - alpha)
    powered = dist**m
    phi = (float(powered[-1]) - d_alpha**m) * phi_safety
    if phi <= 0.0:
        raise DegenerateCalibrationError(
            "zero evidence spread: largest calibration distance equals the percentile"
        )
    return KnnCalibration(
        reference=reference,
        d_alpha=float(d_alpha),
        phi=float(phi),
        m=m,
        k=k,
        alpha=alpha,
        split_seed=seed,
        n_calibration=n1,
        n_reference=reference.shape[0],
    )


def evidence(x, calib: KnnCalibration) -> float:
    """Anomaly evidence of a single point: d(x)^m - d_alpha^m."""
    vec = np.asarray(x, dtype=float).reshape(-1)
    if vec.shape[0] != calib.m:
        raise ValidationError(f"point has dimension {vec.shape[0]}, calibration expects {calib.m}")
    dist = calib.tree.query(vec, k=calib.k)[0]
    d = float(dist if calib.k == 1 else dist[-1])
    return d**calib.m - calib.d_alpha**calib.m


def evidence_track(features, calib: KnnCalibration) -> np.ndarray:
    """Anomaly evidence for every row of a feature matrix."""
    x = _as_matrix(features)
    if x.shape[1] != calib.m:
        raise ValidationError(f"features have dimension {x.shape[1]}, calibration expects {calib.m}")
    dist = calib.tree.query(x, k=calib.k, workers=-1)[0]
    if calib.k > 1:
        dist = dist[:, -1]
    return dist**calib.m - calib.d_alpha**calib.m


@dataclass(frozen=True)
class CusumState:
    """Accumulated non-negative statistic and the index of the next instance."""

    s: float = 0.0
    t: int = 0

    def __post_init__(self):
        if self.s < 0 or not math.isfinite(self.s):
            raise ValidationError(f"statistic must be finite and >= 0, got {self.s}")


def cusum_update(state: CusumState, d: float) -> CusumState:
    """One step of the reflected accumulation s' = max(s + d, 0)."""
    return CusumState(max(state.s + d, 0.0), state.t + 1)


def _statistic_trace(ev: np.ndarray, carry: float) -> np.ndarray:
    # s_t = max(P_t - min(-carry, min_{j<t} P_j), 0) with P the running evidence sum
    prefix = np.cumsum(ev)
    floor = np.minimum.accumulate(np.concatenate(([-carry], prefix[:-1])))
    return np.maximum(prefix - floor, 0.0)


def cusum_track(evidence_stream) -> np.ndarray:
    """Full statistic trace of the accumulation, without any alarm resets."""
    ev = np.asarray(evidence_stream, dtype=float).reshape(-1)
    if ev.size == 0:
        return np.empty(0)
    return _statistic_trace(ev, 0.0)


def _first_crossing(ev: np.ndarray, start: int, h: float) -> int | None:
    # Doubling windows keep the scan O(gap) per alarm instead of O(n).
    pos = start
    carry = 0.0
    window = 64
    n = ev.shape[0]
    while pos < n:
        s = _statistic_trace(ev[pos : pos + window], carry)
        hits = np.flatnonzero(s >= h)
        if hits.size:
            return pos + int(hits[0])
        carry = float(s[-1])
        pos += s.shape[0]
        window = min(window * 2, 1 << 20)
    return None


def detect(evidence_stream, h: float) -> AlarmTrack:
    """Run the accumulation and collect alarm times.

    An alarm fires at the first instant the statistic reaches h; the statistic
    then resets to 0 and the scan continues, so repeated events on one stream
    each get their own alarm.
    """
    if math.isnan(h) or h <= 0:
        raise ValidationError(f"threshold must be > 0, got {h}")
    ev = np.ascontiguousarray(np.asarray(evidence_stream, dtype=float).reshape(-1))
    alarms: list[int] = []
    start = 0
    while start < ev.shape[0]:
        t = _first_crossing(ev, start, h)
        if t is None:
            break
        alarms.append(t)
        start = t + 1
    return AlarmTrack(np.asarray(alarms, dtype=np.int64))


def ball_volume_constant(m: int) -> float:
    """Volume of the unit ball in m dimensions, via log-gamma for stability."""
    if m < 1:
        raise ValidationError(f"dimension must be >= 1, got {m}")
    return math.exp(0.5 * m * math.log(math.pi) - math.lgamma(0.5 * m + 1.0))


def _halley(x: float, w: float) -> float:
    # Halley iteration on f(w) = w e^w - x; cubic convergence near the root.
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            return w
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            return w
    return w


def _bisect_w(x: float, lo: float, hi: float) -> float:
    flo = lo * math.exp(lo) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = mid * math.exp(mid) - x
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w(x: float, branch: str = "principal") -> float:
    """Real Lambert-W: the solution w of w * exp(w) = x on the chosen branch.

    `principal` covers x >= -1/e (w >= -1); `minus_one` covers
    -1/e <= x < 0 (w <= -1). Halley iteration from a branch-appropriate
    start, with a bisection fallback; relative error <= 1e-12.
    """
    if branch not in ("principal", "minus_one"):
        raise ValidationError(f"unknown branch {branch!r}")
    if math.isnan(x):
        raise ValidationError("x is NaN")
    if x < _BRANCH_POINT:
        if _BRANCH_POINT - x > 4e-16:
            raise ValidationError(f"x={x} below the branch point -1/e")
        x = _BRANCH_POINT
    if branch == "minus_one" and x >= 0.0:
        raise ValidationError(f"branch minus_one requires x < 0, got {x}")
    if x == _BRANCH_POINT:
        return -1.0
    if x == 0.0:
        return 0.0

    p2 = 2.0 * (math.e * x + 1.0)
    p = math.sqrt(p2) if p2 > 0 else 0.0
    if branch == "principal":
        if x < -0.25:
            w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
        elif x < 0.5:
            w = x * (1.0 - x * (1.0 - 1.5 * x))
        elif x < 10.0:
            w = math.log1p(x)
        else:
            lx = math.log(x)
            w = lx - math.log(lx)
    else:
        if x < -0.27:
            w = -1.0 - p * (1.0 + p * (1.0 / 3.0 + p * (11.0 / 72.0)))
        else:
            l1 = math.log(-x)
            w = l1 - math.log(-l1)
    w = _halley(x, w)
    if abs(w * math.exp(w) - x) > 1e-12 * abs(x):
        if branch == "principal":
            w = _bisect_w(x, -1.0, max(1.0, math.log(x) if x > 1 else 1.0))
        else:
            w = _bisect_w(x, -746.0, -1.0)
    return w


def _evidence_theta(v: float, a: float) -> float:
    # theta = v * exp(-v * a): the nominal rate rescaled by the percentile mass
    return v * math.exp(-v * a)


def omega0_closed_form(m: int, d_alpha: float, phi: float) -> float:
    """Lambert-W expression for the exponent, valid only as d_alpha^m -> 0.

    One Lambert-W branch evaluates to exactly -phi*theta, which reproduces the
    trivial root omega = v_m introduced by the limit's rearrangement; the
    other branch carries the non-trivial root. When phi*theta = 1 the two
    coincide and no branch can be singled out.
    """
    if phi <= 0:
        raise ValidationError(f"phi must be > 0, got {phi}")
    if d_alpha < 0:
        raise ValidationError(f"d_alpha must be >= 0, got {d_alpha}")
    v = ball_volume_constant(m)
    theta = _evidence_theta(v, d_alpha**m)
    u = phi * theta
    arg = -u * math.exp(-u)
    candidates = [lambert_w(arg, "principal")]
    if arg < 0.0:
        candidates.append(lambert_w(arg, "minus_one"))
    genuine = [w for w in candidates if abs(w + u) > 1e-9 * max(1.0, u)]
    if not genuine:
        raise DegenerateCalibrationError("phi * theta = 1: coincident roots")
    return v - theta - genuine[0] / phi


def _mgf_excess(omega: float, v: float, a: float, phi: float) -> float:
    """E[exp(omega * D)] - 1 for the truncated-exponential evidence model.

    Arranged so every term keeps full relative precision; roots as small as
    1e-10 are still resolved in double precision.
    """
    x = omega - v
    if abs(x) > 1e-6 * max(v, 1.0):
        try:
            grow = v * math.exp(omega * phi - v * (phi + a))
        except OverflowError:
            return math.inf
        return (grow - v * math.expm1(-omega * a) - omega) / x
    # removable singularity at omega = v: series of (e^{x phi} - e^{-x a}) / x
    psi = (
        (phi + a)
        + x * (phi**2 - a**2) / 2.0
        + x**2 * (phi**3 + a**3) / 6.0
        + x**3 * (phi**4 - a**4) / 24.0
    )
    return v * math.exp(-v * a) * psi - 1.0


def compute_omega0(m: int, d_alpha: float, phi: float) -> float:
    """Positive root of the evidence moment condition E[exp(omega * D)] = 1.

    The root is bracketed from the closed-form hint and refined with Brent's
    method on the analytic moment expression.
    """
    if phi <= 0:
        raise ValidationError(f"phi must be > 0, got {phi}")
    if d_alpha < 0:
        raise ValidationError(f"d_alpha must be >= 0, got {d_alpha}")
    v = ball_volume_constant(m)
    a = d_alpha**m
    u = phi * _evidence_theta(v, a)
    if abs(u - 1.0) < 1e-12:
        raise DegenerateCalibrationError("phi * theta = 1: coincident roots")
    if math.exp(-v * (a + phi)) == 0.0:
        raise CalibrationError("evidence bound too large: no resolvable positive root")

    def f(omega: float) -> float:
        return _mgf_excess(omega, v, a, phi)

    hi = 2.0 * v
    try:
        hint = omega0_closed_form(m, d_alpha, phi)
        if math.isfinite(hint) and hint > 0:
            hi = max(hi, 2.0 * hint)
    except DegenerateCalibrationError:
        pass  # near-coincident asymptotic roots; the default bracket still works
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise CalibrationError("no positive root of the moment condition")
    root = float(brentq(f, 0.0, hi, xtol=5e-324, rtol=4 * np.finfo(float).eps, maxiter=300))
    if root <= 0:
        raise CalibrationError(f"non-positive exponent {root}")
    return root


def calibrate_threshold(far_target: float, omega0: float) -> float:
    """Threshold achieving a target false alarm rate: h = -log(FAR) / omega0."""
    if not 0.0 < far_target < 1.0:
        raise ValidationError(f"FAR target must be in (0, 1), got {far_target}")
    if omega0 <= 0:
        raise ValidationError(f"omega0 must be > 0, got {omega0}")
    return -math.log(far_target) / omega0


def far_bound(h: float, omega0: float) -> float:
    """Upper bound exp(-omega0 * h) on the false alarm rate at threshold h."""
    if h < 0:
        raise ValidationError(f"threshold must be >= 0, got {h}")
    if omega0 <= 0:
        raise ValidationError(f"omega0 must be > 0, got {omega0}")
    return math.exp(-omega0 * h)


@dataclass(frozen=True)
class CalibrationReport:
    """Calibration constants, the chosen threshold, and their provenance."""

    omega0: float
    v_m: float
    theta: float
    h: float
    far_target: float
    d_alpha: float
    phi: float
    m: int
    k: int
    alpha: float
    n_calibration: int
    n_reference: int
    heuristic_bound: bool  # True when k != 1: the rate analysis assumes the nearest neighbor
    omega0_asymptotic: float | None = None

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValidationError(f"omega0 must be > 0, got {self.omega0}")
        if self.h <= 0:
            raise ValidationError(f"h must be > 0, got {self.h}")

    def as_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "v_m": self.v_m,
            "theta": self.theta,
            "h": self.h,
            "far_target": self.far_target,
            "d_alpha": self.d_alpha,
            "phi": self.phi,
            "m": self.m,
            "k": self.k,
            "alpha": self.alpha,
            "n_calibration": self.n_calibration,
            "n_reference": self.n_reference,
            "heuristic_bound": self.heuristic_bound,
            "omega0_asymptotic": self.omega0_asymptotic,
        }


def make_calibration_report(calib: KnnCalibration, far_target: float) -> CalibrationReport:
    """Derive the exponent and threshold for a fitted calibration."""
    omega0 = compute_omega0(calib.m, calib.d_alpha, calib.phi)
    v = ball_volume_constant(calib.m)
    try:
        closed = omega0_closed_form(calib.m, calib.d_alpha, calib.phi)
    except DegenerateCalibrationError:
        closed = None
    return CalibrationReport(
        omega0=omega0,
        v_m=v,
        theta=_evidence_theta(v, calib.d_alpha**calib.m),
        h=calibrate_threshold(far_target, omega0),
        far_target=far_target,
        d_alpha=calib.d_alpha,
        phi=calib.phi,
        m=calib.m,
        k=calib.k,
        alpha=calib.alpha,
        n_calibration=calib.n_calibration,
        n_reference=calib.n_reference,
        heuristic_bound=calib.k != 1,
        omega0_asymptotic=closed,
    )
