"""Kernel-weighted conditional tail estimators.

All estimators share the Nadaraya-Watson weights
``w_j = K((x0 - X_j) / h) / sum_i K((x0 - X_i) / h)``:

* :func:`cond_survival` -- ``sum_j w_j 1{Y_j > y}``
* :func:`cond_quantile` -- left-continuous generalised inverse of the
  weighted ECDF, always an observed response
* :func:`cond_hill` -- conditional Hill estimator with plug-in normal
  confidence interval
* :func:`tail_curve` / :func:`tail_functional` -- the tail function and
  integrals of it against a test function
* :func:`hill_trace` / :func:`risk_profile` -- batch evaluation over ``k``
  or over the conditioning point
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .bandwidth import BandwidthRule, resolve
from .errors import DegenerateDensity, EmptyWindow, UnboundedKernelWarning
from .kernels import EPANECHNIKOV, Kernel, get_kernel, kernel_weights
from .series import PairedSeries

__all__ = [
    "EstimatorConfig",
    "HillEstimate",
    "TailCurve",
    "LevelMode",
    "cond_survival",
    "cond_quantile",
    "cond_hill",
    "tail_curve",
    "tail_functional",
    "hill_trace",
    "risk_profile",
    "weighted_quantile",
    "log_plus",
]

# relative slack when comparing cumulative weights with a probability level
_LEVEL_RTOL = 1e-12


@dataclass(frozen=True)
class EstimatorConfig:
    x0: float
    k: int
    h: float
    kernel: Kernel = EPANECHNIKOV
    ci_level: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"h must be positive and finite, got {self.h!r}")
        if not 0 < self.ci_level < 1:
            raise ValueError(f"ci_level must lie in (0, 1), got {self.ci_level!r}")

    def check(self, n: int) -> None:
        if self.k > n:
            raise ValueError(f"k={self.k} exceeds the sample size n={n}")


@dataclass(frozen=True)
class HillEstimate:
    """Conditional Hill estimate with plug-in inference.

    ``std_error``, ``ci_lo`` and ``ci_hi`` are NaN when the covariate
    density estimate is zero.
    """

    x0: float
    k: int
    h: float
    gamma_hat: float
    q_hat: float
    g_hat: float
    std_error: float
    ci_lo: float
    ci_hi: float
    effective_mass: float
    window_count: int

    @property
    def ci_available(self) -> bool:
        return math.isfinite(self.std_error)


class LevelMode(str, enum.Enum):
    RANDOM = "random"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class TailCurve:
    s: np.ndarray
    t_hat: np.ndarray
    mode: LevelMode
    threshold: float


def log_plus(t):
    """``max(log t, 0)`` without ever taking the log of a value <= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    big = t > 1.0
    out[big] = np.log(t[big])
    return out


def _weights(series: PairedSeries, x0: float, h: float, kernel: Kernel) -> np.ndarray:
    w = kernel_weights(series.x, x0, h, kernel)
    if not w.sum() > 0:
        raise EmptyWindow(x0, h)
    return w


def _warn_unbounded(kernel: Kernel) -> None:
    if not kernel.compact:
        warnings.warn(f"{kernel} kernel has unbounded support; theory assumes [-1, 1]",
                      UnboundedKernelWarning, stacklevel=3)


def weighted_quantile(y, w, num: float, den: float = 1.0) -> float:
    """Generalised inverse of the weighted ECDF at level ``num / den``.

    Returns ``min{Y_j : sum_i w_i 1{Y_i <= Y_j} >= (num/den) sum_i w_i}``.
    Weights need not be normalised.  Passing the level as a ratio keeps
    the comparison exact when weights are equal.  The candidates are all
    observed values, so a level of zero returns ``min(y)`` even when that
    value carries no weight.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if num <= 0:
        return float(y.min())
    pos = w > 0
    ys, ws = y[pos], w[pos]
    if ys.size == 0:
        raise ValueError("all weights are zero")
    order = np.argsort(ys, kind="stable")
    ys = ys[order]
    cw = np.cumsum(ws[order])
    total = cw[-1]
    ok = den * cw >= num * total - _LEVEL_RTOL * den * total
    i = int(np.argmax(ok)) if ok.any() else ys.size - 1
    return float(ys[i])


def cond_survival(series: PairedSeries, x0: float, h: float, kernel: Kernel, y) -> float | np.ndarray:
    """Nadaraya-Watson estimate of ``P(Y > y | X = x0)``.

    ``y`` may be a scalar or an array.
    """
    w = _weights(series, x0, h, kernel)
    total = w.sum()
    yq = np.asarray(y, dtype=float)
    ys = series.y
    order = np.argsort(ys, kind="stable")
    ys_sorted = ys[order]
    # weight strictly above each level
    tail = np.concatenate([np.cumsum(w[order][::-1])[::-1], [0.0]])
    idx = np.searchsorted(ys_sorted, yq, side="right")
    out = np.clip(tail[idx] / total, 0.0, 1.0)  # summation rounding can leave 1 + ulp
    return float(out) if out.ndim == 0 else out


def cond_quantile(series: PairedSeries, x0: float, h: float, kernel: Kernel, p: float) -> float:
    """Conditional quantile ``inf{y : F_n^{x0}(y) >= p}`` over the observed responses."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    w = _weights(series, x0, h, kernel)
    return weighted_quantile(series.y, w, p)


def _hill_from_weights(y: np.ndarray, w: np.ndarray, n: int, k: int) -> tuple[float, float]:
    q = weighted_quantile(y, w, n - k, n)
    gamma = (n / k) * float(np.dot(w, log_plus(y / q))) / float(w.sum())
    return gamma, q


def cond_hill(series: PairedSeries, cfg: EstimatorConfig) -> HillEstimate:
    """Conditional Hill estimator at ``cfg.x0``.

    ``gamma_hat = (n/k) * sum_j K_j log+(Y_j / q) / sum_j K_j`` with ``q``
    the conditional quantile at level ``1 - k/n``.  The standard error
    plugs ``gamma_hat`` and the Parzen-Rosenblatt density ``g_hat`` into
    the asymptotic variance ``gamma**2 / g * int K**2`` at rate ``k * h``.

    Raises
    ------
    EmptyWindow
        If no covariate has positive kernel weight.
    """
    n = series.n
    cfg.check(n)
    kernel = cfg.kernel
    _warn_unbounded(kernel)
    w = _weights(series, cfg.x0, cfg.h, kernel)
    gamma, q = _hill_from_weights(series.y, w, n, cfg.k)
    mass = float(w.sum())
    g_hat = mass / (n * cfg.h)
    if g_hat > 0:
        se = gamma * math.sqrt(kernel.l2 / (g_hat * cfg.k * cfg.h))
        z = float(norm.ppf(0.5 * (1.0 + cfg.ci_level)))
        lo, hi = gamma - z * se, gamma + z * se
    else:
        warnings.warn("covariate density estimate is zero; no confidence interval",
                      DegenerateDensity, stacklevel=2)
        se = lo = hi = math.nan
    return HillEstimate(
        x0=float(cfg.x0), k=cfg.k, h=float(cfg.h), gamma_hat=gamma, q_hat=q, g_hat=g_hat,
        std_error=se, ci_lo=lo, ci_hi=hi, effective_mass=mass,
        window_count=int(np.count_nonzero(w > 0)),
    )


def tail_curve(series: PairedSeries, cfg: EstimatorConfig, s_grid, mode=LevelMode.RANDOM,
               threshold: float | None = None) -> TailCurve:
    """Conditional tail function on ``s_grid``.

    In random-level mode the threshold is the estimated conditional
    quantile at ``1 - k/n``; in deterministic mode the caller supplies it.
    """
    mode = LevelMode(mode)
    cfg.check(series.n)
    s = np.asarray(s_grid, dtype=float).ravel()
    if s.size and not np.all(s > 0):
        raise ValueError("s_grid must be strictly positive")
    if mode is LevelMode.RANDOM:
        w = _weights(series, cfg.x0, cfg.h, cfg.kernel)
        u = weighted_quantile(series.y, w, series.n - cfg.k, series.n)
    else:
        if threshold is None or not threshold > 0:
            raise ValueError("deterministic mode needs a positive threshold")
        u = float(threshold)
    surv = np.atleast_1d(cond_survival(series, cfg.x0, cfg.h, cfg.kernel, s * u))
    return TailCurve(s=s, t_hat=surv * series.n / cfg.k, mode=mode, threshold=u)


def tail_functional(series: PairedSeries, cfg: EstimatorConfig, phi) -> float:
    """Exceedance-sum estimate of ``-int phi(s) T(ds)``.

    ``phi`` must accept numpy arrays, vanish at 1 and be nondecreasing on
    ``[1, inf)``.  ``phi = np.log`` reproduces the conditional Hill
    estimate and ``phi = log**2`` estimates ``2 gamma**2``.
    """
    n = series.n
    cfg.check(n)
    w = _weights(series, cfg.x0, cfg.h, cfg.kernel)
    q = weighted_quantile(series.y, w, n - cfg.k, n)
    exc = series.y > q
    if not exc.any():
        return 0.0
    vals = np.asarray(phi(series.y[exc] / q), dtype=float)
    return (n / cfg.k) * float(np.dot(w[exc], vals)) / float(w.sum())


def hill_trace(series: PairedSeries, x0: float, kernel: Kernel, k_values, h_rule,
               ci_level: float = 0.95) -> list[HillEstimate | None]:
    """Conditional Hill estimates along ``k_values`` at a fixed ``x0``.

    The bandwidth is resolved per ``k`` from ``h_rule`` (a
    :class:`~condhill.bandwidth.BandwidthRule` or a number).  Points with
    an empty window come back as ``None``.
    """
    kernel = get_kernel(kernel)
    ks = [int(k) for k in k_values]
    for k in ks:
        if not 2 <= k <= series.n:
            raise ValueError(f"k={k} outside [2, n={series.n}]")
    shared_h = None
    if not (isinstance(h_rule, BandwidthRule) and h_rule.depends_on_k):
        shared_h = resolve(h_rule, series, ks[0]) if ks else None
    if not kernel.compact:
        _warn_unbounded(kernel)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnboundedKernelWarning)
        for k in ks:
            h = shared_h if shared_h is not None else resolve(h_rule, series, k)
            try:
                out.append(cond_hill(series, EstimatorConfig(x0, k, h, kernel, ci_level)))
            except EmptyWindow:
                out.append(None)
    return out


def risk_profile(series: PairedSeries, x_grid, k: int, kernel: Kernel, h_rule,
                 ci_level: float = 0.95) -> list[HillEstimate | None]:
    """Conditional Hill estimates across conditioning points at fixed ``k``."""
    kernel = get_kernel(kernel)
    h = resolve(h_rule, series, k)
    if not kernel.compact:
        _warn_unbounded(kernel)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnboundedKernelWarning)
        for x0 in np.asarray(x_grid, dtype=float).ravel():
            try:
                out.append(cond_hill(series, EstimatorConfig(float(x0), k, h, kernel, ci_level)))
            except EmptyWindow:
                out.append(None)
    return out
