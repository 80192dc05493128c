"""Residual-generating forecasters.

Two paths live here. The operational one is a per-dimension least-squares
autoregression whose one-step residuals feed the sequential detector. The
second is a forward-only, toy-scale implementation of the attention /
distilling / decoder-input building blocks of a long-sequence transformer
forecaster, kept around for invariant verification; it is never trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries
from .errors import FitError, NotFittedError, ValidationError

__all__ = [
    "AttentionInput",
    "EncoderLayerState",
    "DecoderInput",
    "ArModel",
    "full_attention",
    "attention_weights",
    "sparsity_measure",
    "probsparse_attention",
    "default_active_queries",
    "distill_layer",
    "decoder_input",
    "fit_ar",
    "residuals",
]


@dataclass(frozen=True)
class AttentionInput:
    """Query (L_Q x d), key (L_K x d) and value (L_K x d_v) matrices."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        k = np.atleast_2d(np.asarray(self.k, dtype=float))
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        if q.shape[1] != k.shape[1]:
            raise ValidationError(f"query dim {q.shape[1]} != key dim {k.shape[1]}")
        if v.shape[0] != k.shape[0]:
            raise ValidationError(f"value rows {v.shape[0]} != key rows {k.shape[0]}")
        if q.shape[0] < 1 or k.shape[0] < 1 or q.shape[1] < 1:
            raise ValidationError("attention inputs must be non-empty")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "v", v)


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def attention_weights(attn: AttentionInput) -> np.ndarray:
    """Row-stochastic weight matrix softmax(QK^T / sqrt(d))."""
    d = attn.q.shape[1]
    return _softmax_rows(attn.q @ attn.k.T / math.sqrt(d))


def full_attention(attn: AttentionInput) -> np.ndarray:
    """Scaled dot-product attention output, one row per query."""
    return attention_weights(attn) @ attn.v


def sparsity_measure(q: np.ndarray, k: np.ndarray, d: int) -> float:
    """Query sparsity score: log-sum-exp minus mean of the scaled key scores.

    By Jensen's inequality this is at least log(L_K), with equality exactly
    when all scores agree; large values mark queries whose attention is
    concentrated on few keys.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    k = np.atleast_2d(np.asarray(k, dtype=float))
    if k.shape[1] != q.shape[0]:
        raise ValidationError(f"query dim {q.shape[0]} != key dim {k.shape[1]}")
    scores = k @ q / math.sqrt(d)
    m = scores.max()
    lse = m + math.log(np.exp(scores - m).sum())
    return float(lse - scores.mean())


def default_active_queries(n_queries: int) -> int:
    """Default count of queries given full attention: ceil(5 ln L_Q), clamped."""
    return min(n_queries, max(1, math.ceil(5.0 * math.log(n_queries))))


def probsparse_attention(attn: AttentionInput, u: int | None = None) -> np.ndarray:
    """Attention where only the u sparsest queries get exact rows.

    The remaining ("lazy") query rows are filled with the column mean of V,
    the trivial summary a uniform weighting would produce. u = L_Q reproduces
    full attention exactly; u defaults to ceil(5 ln L_Q).
    """
    n_q = attn.q.shape[0]
    if u is None:
        u = default_active_queries(n_q)
    if not 0 <= u <= n_q:
        raise ValidationError(f"u must be in [0, {n_q}], got {u}")
    out = np.tile(attn.v.mean(axis=0), (n_q, 1))
    if u == 0:
        return out
    d = attn.q.shape[1]
    scores = np.array([sparsity_measure(attn.q[i], attn.k, d) for i in range(n_q)])
    active = np.argsort(-scores, kind="stable")[:u]
    sub = AttentionInput(attn.q[active], attn.k, attn.v)
    out[active] = full_attention(sub)
    return out


@dataclass(frozen=True)
class EncoderLayerState:
    """Feature matrix (L x d) plus the width-3 conv kernel of the distilling stage.

    The kernel is either shape (3,) shared across channels or (3, d) with one
    column per channel.
    """

    features: np.ndarray
    kernel: np.ndarray
    pool_stride: int = 2

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.features, dtype=float))
        kern = np.asarray(self.kernel, dtype=float)
        if kern.shape[0] != 3:
            raise ValidationError(f"conv kernel width must be 3, got {kern.shape[0]}")
        if kern.ndim == 2 and kern.shape[1] != f.shape[1]:
            raise ValidationError(
                f"per-channel kernel has {kern.shape[1]} columns for {f.shape[1]} channels"
            )
        if kern.ndim > 2:
            raise ValidationError("kernel must be (3,) or (3, d)")
        if self.pool_stride != 2:
            raise ValidationError("only pool stride 2 is supported")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "kernel", kern)

    @property
    def length(self) -> int:
        return self.features.shape[0]


def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, x, np.expm1(x))


def distill_layer(state: EncoderLayerState) -> EncoderLayerState:
    """Conv1d (width 3, zero same-padding) -> ELU -> max-pool (window 2, stride 2).

    Halves the sequence length (floor) while sharpening the feature map; the
    kernel is carried over unchanged.
    """
    z = state.features
    n, d = z.shape
    if n < 3:
        raise ValidationError(f"distilling needs length >= 3, got {n}")
    kern = state.kernel if state.kernel.ndim == 2 else np.tile(state.kernel[:, None], (1, d))
    padded = np.vstack([np.zeros((1, d)), z, np.zeros((1, d))])
    conv = kern[0] * padded[:-2] + kern[1] * padded[1:-1] + kern[2] * padded[2:]
    act = _elu(conv)
    pooled = act[: 2 * (n // 2)].reshape(n // 2, 2, d).max(axis=1)
    return EncoderLayerState(pooled, state.kernel, state.pool_stride)


@dataclass(frozen=True)
class DecoderInput:
    """Start-token slice and the zero placeholder it is concatenated with."""

    token: np.ndarray
    target: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return np.vstack([self.token, self.target])


def decoder_input(token: np.ndarray, target_len: int) -> DecoderInput:
    """Concatenate the start token with an all-zero target placeholder."""
    if target_len < 1:
        raise ValidationError(f"target length must be >= 1, got {target_len}")
    tok = np.asarray(token, dtype=float)
    if tok.ndim != 2:
        raise ValidationError(f"token must be 2-D (may have 0 rows), got ndim={tok.ndim}")
    return DecoderInput(tok.copy(), np.zeros((target_len, tok.shape[1])))


@dataclass(frozen=True)
class ArModel:
    """Per-dimension autoregression: x_t ~ coef . [x_{t-1} ... x_{t-order}] + intercept."""

    order: int
    coef: np.ndarray | None = None  # (d, order)
    intercept: np.ndarray | None = None  # (d,)
    resid_var: np.ndarray | None = None  # (d,)

    @property
    def fitted(self) -> bool:
        return self.coef is not None


AR_RIDGE = 1e-8  # regularizer on the normal equations; avoids exactly singular designs


def fit_ar(train: TimeSeries, order: int) -> ArModel:
    """Least-squares autoregression of each dimension on its own lags."""
    if order < 1:
        raise ValidationError(f"order must be >= 1, got {order}")
    x = train.values
    n, d = x.shape
    if n <= order + 1:
        raise ValidationError(f"need more than order+1={order + 1} rows, got {n}")
    rows = n - order
    coef = np.empty((d, order))
    intercept = np.empty(d)
    resid_var = np.empty(d)
    for j in range(d):
        col = x[:, j]
        design = np.empty((rows, order + 1))
        for lag in range(1, order + 1):
            design[:, lag - 1] = col[order - lag : n - lag]
        design[:, order] = 1.0
        y = col[order:]
        gram = design.T @ design + AR_RIDGE * np.eye(order + 1)
        try:
            beta = np.linalg.solve(gram, design.T @ y)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"singular design matrix for dimension {j}") from exc
        coef[j] = beta[:order]
        intercept[j] = beta[order]
        resid = y - design @ beta
        resid_var[j] = float(np.mean(resid**2))
    return ArModel(order, coef, intercept, resid_var)


def residuals(model: ArModel, series: TimeSeries) -> TimeSeries:
    """One-step prediction errors, one row per instance.

    The first `order` instances have no full lag window and get zero
    residuals, keeping the track aligned with the series.
    """
    if not model.fitted:
        raise NotFittedError("fit the model before computing residuals")
    x = series.values
    n, d = x.shape
    if n <= model.order:
        raise ValidationError(f"series length {n} must exceed order {model.order}")
    if model.coef.shape[0] != d:
        raise ValidationError(f"model fitted for {model.coef.shape[0]} dims, series has {d}")
    out = np.zeros_like(x)
    pred = np.tile(model.intercept, (n - model.order, 1))
    for lag in range(1, model.order + 1):
        pred += x[model.order - lag : n - lag] * model.coef[:, lag - 1]
    out[model.order :] = x[model.order :] - pred
    return TimeSeries(out)
